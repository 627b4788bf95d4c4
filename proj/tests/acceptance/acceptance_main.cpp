// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "generators.hpp"
#include "oracles.hpp"
#include "trx/compositor.hpp"
#include "trx/error.hpp"
#include "trx/evaluate.hpp"
#include "trx/fusion.hpp"
#include "trx/io.hpp"
#include "trx/labelset.hpp"
#include "trx/metrics.hpp"
#include "trx/synth.hpp"
#include "trx/trainmath.hpp"

using namespace trx;
namespace fs = std::filesystem;

namespace {

// Tolerances and sizes pinned for every run.
constexpr double kAurocTol = 1e-12;
constexpr double kGradRelTol = 1e-4;
constexpr double kFiniteDiffStep = 1e-5;
constexpr double kSyntheticAurocTol = 0.03;
constexpr double kCoverageLow = 0.90;
constexpr double kCoverageHigh = 0.99;
constexpr double kNullPassRate = 0.90;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failures with a short reason; the first few are reported.
class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) reasons_ += (reasons_.empty() ? "" : "; ") + what;
  }
  Outcome outcome(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, std::to_string(failures_) + " failure(s): " + reasons_};
  }

 private:
  int failures_ = 0;
  std::string reasons_;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TRX_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 1 -------------------------------------------------------------------------

Outcome constants() {
  Check c;
  const ThresholdConfig cfg = default_paper_thresholds();
  c.require(cfg.cutpoint(FindingKind::PleuralEffusion) == 3440.5, "effusion cut");
  c.require(cfg.cutpoint(FindingKind::Pneumothorax) == 144.43, "pneumothorax cut");
  c.require(cfg.cutpoint(FindingKind::LungOpacity) == 0.98, "opacity cut");
  c.require(cfg.cutpoint(FindingKind::Fracture) == 0.15, "fracture cut");
  c.require(encode_label_value(LabelState::ConfirmedPositive) == 0.99, "positive target");
  c.require(encode_label_value(LabelState::ConfirmedNegative) == 0.01, "negative target");
  c.require(encode_label_value(LabelState::Empty) == 0.01, "empty target");
  c.require(encode_label_value(LabelState::Uncertain) == 0.6, "uncertain target");
  const LossWeights w;
  c.require(w.bce == 3.0 && w.focal == 4.0 && w.dice == 1.0, "loss weights");
  c.require(BootstrapOptions{}.resamples == 10000 && kDefaultBootstrapResamples == 10000, "resamples");
  c.require(kMedianKernelSize == 5, "median kernel");
  c.require(kDefaultTuneFraction == 0.2, "tune fraction");
  return c.outcome("all constants exact");
}

// 2 -------------------------------------------------------------------------

Outcome fusion() {
  Check c;
  for (int m = 0; m < 16; ++m) {
    const FindingMap<bool> f((m & 1) != 0, (m & 2) != 0, (m & 4) != 0, (m & 8) != 0);
    c.require(fuse_abnormality(f) == (m != 0), "truth table row " + std::to_string(m));
  }
  Rng rng(2002);
  const ThresholdConfig cfg = default_paper_thresholds();
  std::size_t abnormal = 0;
  for (int t = 0; t < 500; ++t) {
    const StudyOutputs s = gen::study(rng, "s" + std::to_string(t));
    const TriageResult r = run_pipeline(s, cfg);
    FindingMap<bool> flags;
    bool ok = true;
    for (FindingKind k : kAllFindings) {
      const double score = score_of(s.output(k));
      flags[k] = binarize(score, cfg.cutpoint(k));
      ok = ok && r.scores[k] == score;
    }
    ok = ok && r.flags == flags && r.abnormal == fuse_abnormality(flags);
    c.require(ok, "study " + std::to_string(t));
    abnormal += r.abnormal;
  }
  return c.outcome("16 rows, 500 studies (" + std::to_string(abnormal) + " abnormal)");
}

// 3 -------------------------------------------------------------------------

Outcome auroc_oracle() {
  Check c;
  Rng rng(3003);
  double worst = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = gen::size_in(rng, 2, 1000);
    // A third continuous, a third moderate ties, a third heavy ties.
    const std::size_t levels = t % 3 == 0 ? 0 : (t % 3 == 1 ? 50 : gen::size_in(rng, 1, 4));
    const auto cases = gen::cases(rng, n, levels, rng.uniform(0.05, 0.95));
    const double err = std::abs(auroc(cases) - oracle::mann_whitney(cases));
    worst = std::max(worst, err);
    c.require(err <= kAurocTol, "instance " + std::to_string(t) + " err " + fmt(err));
  }
  return c.outcome("200 instances, max |diff| " + fmt(worst));
}

// 4 -------------------------------------------------------------------------

Outcome calibration() {
  Check c;
  Rng rng(4004);
  int tieCases = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = gen::size_in(rng, 2, 200);
    const auto cases = gen::cases(rng, n, t % 2 ? gen::size_in(rng, 1, 10) : 0, rng.uniform(0.1, 0.9));
    const auto got = calibrate_threshold(cases);
    const auto want = oracle::brute_force_youden(cases);
    c.require(got.cutpoint == want.cutpoint && got.sensitivity == want.sensitivity &&
                  got.specificity == want.specificity,
              "trial " + std::to_string(t));
    tieCases += t % 2;
  }
  // Documented tie-break: equal J resolves to the smallest cutpoint.
  const std::vector<ScoredCase> tie{{0.1, false}, {0.35, true}, {0.4, false}, {0.8, true}};
  c.require(calibrate_threshold(tie).cutpoint == std::midpoint(0.1, 0.35), "tie-break example");
  return c.outcome("500 trials (" + std::to_string(tieCases) + " tied) plus tie-break example");
}

// 5 -------------------------------------------------------------------------

Outcome gradients() {
  Check c;
  Rng rng(5005);
  double worst = 0;
  const auto check = [&](const std::string& name, const std::function<LossValueGrad(const PredTarget&)>& loss) {
    for (int t = 0; t < 100; ++t) {
      PredTarget pt;
      const std::size_t n = gen::size_in(rng, 1, 32);
      for (std::size_t i = 0; i < n; ++i) {
        pt.pred.push_back(rng.uniform(0.02, 0.98));
        pt.target.push_back(t % 2 ? rng.uniform01() : (rng.bernoulli(0.5) ? 1.0 : 0.0));
      }
      const auto f = [&](const std::vector<double>& p) { return loss({p, pt.target}).value; };
      const double err =
          oracle::max_relative_error(loss(pt).gradWrtPred, oracle::finite_difference(f, pt.pred, kFiniteDiffStep));
      worst = std::max(worst, err);
      c.require(err < kGradRelTol, name + " instance " + std::to_string(t) + " err " + fmt(err));
    }
  };
  check("bce", [](const PredTarget& p) { return bce_loss(p); });
  for (double g : {0.0, 1.0, 2.0}) {
    check("focal g" + fmt(g), [g](const PredTarget& p) { return focal_loss(p, g, kDefaultFocalAlpha); });
  }
  check("dice", [](const PredTarget& p) { return dice_loss(p); });
  check("combined", [](const PredTarget& p) { return combined_loss(p); });
  return c.outcome("6 losses x 100 instances, max rel err " + fmt(worst));
}

// 6 -------------------------------------------------------------------------

// Random canonical RLE: ascending, non-touching runs inside the grid.
std::string random_canonical_rle(Rng& rng, std::size_t total) {
  std::string out;
  std::size_t pos = 1 + rng.uniform_below(8);
  while (pos <= total) {
    const std::size_t len = 1 + rng.uniform_below(std::min<std::size_t>(total - pos + 1, 40));
    if (!out.empty()) out += ' ';
    out += std::to_string(pos) + ' ' + std::to_string(len);
    pos += len + 1 + rng.uniform_below(60);
  }
  return out;
}

Outcome rle() {
  Check c;
  Rng rng(6006);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t w = gen::size_in(rng, 1, 64), h = gen::size_in(rng, 1, 64);
    const BinaryMask m = gen::binary_mask(rng, w, h);
    c.require(rle_decode(rle_encode(m), w, h) == m, "mask round trip " + std::to_string(t));
    const std::string s = random_canonical_rle(rng, w * h);
    c.require(rle_encode(rle_decode(s, w, h)) == s, "string round trip '" + s.substr(0, 20) + "'");
  }
  const auto rejects = [](const std::string& s, std::size_t w, std::size_t h) {
    try {
      rle_decode(s, w, h);
    } catch (const ValidationError&) {
      return true;
    }
    return false;
  };
  c.require(rejects("1", 4, 4), "odd token count");
  c.require(rejects("1 2 3", 4, 4), "odd token count");
  c.require(rejects("10 8", 4, 4), "overflow run");
  c.require(rejects("17 1", 4, 4), "start past end");
  c.require(rejects("0 1", 4, 4), "zero start");
  c.require(rejects("a b", 4, 4), "non-numeric");
  return c.outcome("1000 masks and 1000 canonical strings, 6 error cases rejected");
}

// 7 -------------------------------------------------------------------------

Outcome compositor() {
  Check c;
  Rng rng(7007);
  for (int t = 0; t < 50; ++t) {
    const std::size_t w = gen::size_in(rng, 1, 128), h = gen::size_in(rng, 1, 128);
    const HeatLayer l = gen::layer(rng, w, h, rng.uniform01());
    c.require(median_blur5(l) == oracle::naive_median5(l), "median image " + std::to_string(t));
  }
  const HeatLayer flat(40, 30, std::vector<Rgba>(1200, Rgba{12, 200, 99, 150}));
  c.require(median_blur5(flat) == flat, "constant image");
  HeatLayer spike(21, 21);
  spike.at(10, 10) = {255, 255, 255, 255};
  c.require(median_blur5(spike).fully_transparent(), "spike suppression");

  const ScoredBox box{20, 10, 60, 50, 0.8};  // centre (40, 30), semi-axes 20
  const HeatLayer e = render_box_ellipse(box, 80, 60);
  c.require(e.at(40, 30) == Rgba{255, 0, 0, 204}, "centre red");
  c.require(e.at(60, 30).b == 255 && e.at(60, 30).r == 0 && e.at(60, 30).a == 0, "border blue");
  c.require(e.at(40, 10).b == 255 && e.at(40, 10).r == 0, "top border blue");
  c.require(e.at(22, 12) == Rgba{} && e.at(0, 0) == Rgba{} && e.at(70, 55) == Rgba{}, "outside transparent");
  for (int t = 0; t < 50; ++t) {
    const ScoredBox b = gen::box(rng, 64, 64);
    const HeatLayer l = render_box_ellipse(b, 64, 64);
    const double cx = (b.x1 + b.x2) / 2, cy = (b.y1 + b.y2) / 2, a = (b.x2 - b.x1) / 2, bb = (b.y2 - b.y1) / 2;
    std::vector<std::pair<double, int>> radial;
    for (std::size_t y = 0; y < 64; ++y) {
      for (std::size_t x = 0; x < 64; ++x) {
        const double dx = (x - cx) / a, dy = (y - cy) / bb;
        const double r = std::sqrt(dx * dx + dy * dy);
        radial.push_back({r, l.at(x, y).a});
        if (r > 1.0) c.require(l.at(x, y) == Rgba{}, "outside pixel visible");
      }
    }
    std::sort(radial.begin(), radial.end());
    for (std::size_t i = 1; i < radial.size(); ++i) {
      c.require(radial[i].second <= radial[i - 1].second, "alpha not radially monotone");
    }
  }
  return c.outcome("50 median oracle images, idempotence, spike, ellipse geometry on 50 boxes");
}

// 8 -------------------------------------------------------------------------

Outcome split_integrity() {
  Check c;
  Rng rng(8008);
  const auto positive = [](const LabelRecord& r) { return r.state("Pneumothorax") == LabelState::ConfirmedPositive; };
  for (int t = 0; t < 1000; ++t) {
    auto recs = gen::label_records(rng, gen::size_in(rng, 1, 60));
    const std::uint64_t seed = rng.next();
    const SplitManifest m = patient_level_split(recs, positive, kDefaultTuneFraction, seed);

    std::map<std::string, std::set<bool>> sideOf;  // patient -> sides used
    std::map<std::string, bool> patientPositive;
    for (const auto& r : recs) {
      const bool tune = m.tuneIds.contains(r.studyId);
      const bool train = m.trainIds.contains(r.studyId);
      c.require(tune != train, "study on both or neither side");
      sideOf[r.patientId].insert(tune);
      patientPositive[r.patientId] = patientPositive[r.patientId] || positive(r);
    }
    std::array<std::size_t, 2> stratum{}, tuned{};
    for (const auto& [p, sides] : sideOf) {
      c.require(sides.size() == 1, "patient " + p + " spans both sides");
      const std::size_t s = patientPositive[p] ? 0 : 1;
      ++stratum[s];
      tuned[s] += *sides.begin() ? 1 : 0;
    }
    for (std::size_t s = 0; s < 2; ++s) {
      c.require(tuned[s] == oracle::fifth_quota(stratum[s]), "stratum quota in cohort " + std::to_string(t));
    }
    rng.shuffle(std::span(recs));
    c.require(patient_level_split(recs, positive, kDefaultTuneFraction, seed) == m, "order dependence");
  }
  return c.outcome("1000 cohorts: disjoint, co-located, ceil quotas, order invariant");
}

// 9 -------------------------------------------------------------------------

Statistic weighted_auroc(const AurocRanker& ranker) {
  return [&ranker](std::span<const std::size_t> idx) {
    std::vector<std::uint32_t> w(ranker.size(), 0);
    for (std::size_t i : idx) ++w[i];
    return ranker.weighted(w);
  };
}

Outcome bootstrap() {
  Check c;
  const auto zero = bootstrap_ci([](std::span<const std::size_t>) { return std::optional<double>(0.42); }, 50,
                                 {.resamples = 1000, .seed = 1});
  c.require(zero.low == 0.42 && zero.high == 0.42, "zero-variance width");

  CohortSpec spec;
  spec.nStudies = 300;
  spec.signalStrength = 0.6;
  spec.seed = 99;
  const SyntheticCohort cohort = synth_cohort(spec);
  EvalOptions opts;
  opts.seed = 17;
  opts.resamples = 2000;
  opts.subgroup = SubgroupVariable::Sex;
  opts.permutations = 500;
  std::string reference;
  for (unsigned w : {1u, 4u, 8u}) {
    opts.workers = w;
    const std::string json =
        report_to_json(evaluate_cohort(cohort.outputs, cohort.labels, ThresholdConfig(spec.cutpoints), opts));
    if (reference.empty()) reference = json;
    c.require(json == reference, std::to_string(w) + " workers differ");
  }

  // Coverage: binormal scores with unit variances and mean gap d have
  // population AUROC Phi(d / sqrt 2).
  constexpr double d = 1.0;
  const double truth = 0.5 * std::erfc(-(d / std::sqrt(2.0)) / std::sqrt(2.0));
  std::size_t covered = 0;
  constexpr std::size_t kCohorts = 500;
  for (std::size_t k = 0; k < kCohorts; ++k) {
    Rng rng = Rng::substream(9009, k);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<ScoredCase> cases(200);
    for (std::size_t i = 0; i < cases.size(); ++i) {
      cases[i].label = i < 100;
      cases[i].score = noise(rng) + (cases[i].label ? d : 0.0);
    }
    const AurocRanker ranker(cases);
    const auto ci = bootstrap_ci(weighted_auroc(ranker), cases.size(), {.seed = 10000 + k});
    covered += ci.low <= truth && truth <= ci.high;
  }
  const double rate = static_cast<double>(covered) / kCohorts;
  c.require(rate >= kCoverageLow && rate <= kCoverageHigh, "coverage " + fmt(rate));
  return c.outcome("zero width, identical JSON at 1/4/8 workers, coverage " + fmt(rate) + " of " +
                   std::to_string(kCohorts) + " (truth " + fmt(truth) + ")");
}

// 10 ------------------------------------------------------------------------

Outcome end_to_end() {
  Check c;
  const fs::path dir = fs::temp_directory_path() / "trx_acceptance_e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto path = [&](const std::string& rel) { return (dir / rel).string(); };

  io::write_file(dir / "spec.json", cohort_spec_to_json(CohortSpec{}));
  c.require(run_cli("synth --spec " + path("spec.json") + " --out " + path("perfect") + " --seed 10") == 0,
            "synth failed");
  c.require(run_cli("evaluate --outputs " + path("perfect/outputs") + " --labels " + path("perfect/labels.csv") +
                    " --thresholds " + path("perfect/thresholds.json") + " --seed 1 --out " +
                    path("perfect/report.json")) == 0,
            "evaluate failed");
  std::string summary;
  try {
    const EvalReport rep = report_from_json(io::read_file(dir / "perfect/report.json"));
    for (const auto& t : rep.tasks) {
      c.require(t.available && t.auroc.value == 1.0 && t.sensitivity.value == 1.0 && t.specificity.value == 1.0,
                t.task + " not perfect");
    }
    summary = "s=1: all five tasks 1.0";
  } catch (const Error& e) {
    c.require(false, e.what());
  }

  // Half signal, 2000 studies, through the CLI as well.
  CohortSpec half;
  half.nStudies = 2000;
  half.signalStrength = 0.5;
  io::write_file(dir / "half.json", cohort_spec_to_json(half));
  c.require(run_cli("synth --spec " + path("half.json") + " --out " + path("half") + " --seed 11") == 0,
            "synth (half) failed");
  c.require(run_cli("evaluate --outputs " + path("half/outputs") + " --labels " + path("half/labels.csv") +
                    " --thresholds " + path("half/thresholds.json") + " --seed 2 --resamples 1000 --out " +
                    path("half/report.json")) == 0,
            "evaluate (half) failed");
  double worstGap = 0;
  try {
    const EvalReport rep = report_from_json(io::read_file(dir / "half/report.json"));
    for (FindingKind k : kAllFindings) {
      const auto& v = rep.task(std::string(slug(k))).auroc.value;
      const double gap = v ? std::abs(*v - expected_auroc(0.5)) : 1.0;
      worstGap = std::max(worstGap, gap);
      c.require(gap <= kSyntheticAurocTol, std::string(slug(k)) + " AUROC off by " + fmt(gap));
    }
  } catch (const Error& e) {
    c.require(false, e.what());
  }
  fs::remove_all(dir);

  // Null subgroup effect: sex is drawn independently of everything else.
  constexpr int kRuns = 100;
  std::map<std::string, int> quiet;
  for (int run = 0; run < kRuns; ++run) {
    CohortSpec spec;
    spec.nStudies = 400;
    spec.signalStrength = 0.5;
    spec.seed = 5000 + static_cast<std::uint64_t>(run);
    const SyntheticCohort cohort = synth_cohort(spec);
    EvalOptions opts;
    opts.seed = 7000 + static_cast<std::uint64_t>(run);
    opts.resamples = 100;
    opts.subgroup = SubgroupVariable::Sex;
    const EvalReport rep = evaluate_cohort(cohort.outputs, cohort.labels, ThresholdConfig(spec.cutpoints), opts);
    for (const auto& ts : rep.subgroups->tasks) {
      for (const auto& cmp : ts.comparisons) quiet[ts.task] += cmp.pValue > 0.05;
    }
  }
  int worstQuiet = kRuns;
  std::string perTask;
  for (const auto& name : task_names()) {
    worstQuiet = std::min(worstQuiet, quiet[name]);
    perTask += (perTask.empty() ? "" : " ") + std::to_string(quiet[name]);
    c.require(quiet[name] >= kNullPassRate * kRuns, name + " p>0.05 in only " + std::to_string(quiet[name]));
  }
  return c.outcome(summary + "; s=0.5 n=2000 max |AUROC-0.75| " + fmt(worstGap) + "; null p>0.05 in >= " +
                   std::to_string(worstQuiet) + "/100 runs per task (" + perTask + ")");
}

// 11 ------------------------------------------------------------------------

Outcome label_merge() {
  Check c;
  for (int code = 0; code < 1024; ++code) {
    std::array<LabelState, 5> states{};
    LabelRecord r;
    int rest = code;
    for (std::size_t k = 0; k < 5; ++k, rest /= 4) {
      states[k] = static_cast<LabelState>(rest % 4);
      r.categories[std::string(kOpacitySources[k])] = states[k];
    }
    c.require(merge_opacity_label(r) == oracle::opacity_rule(states), "code " + std::to_string(code));
  }
  LabelRecord none;
  c.require(merge_opacity_label(none) == LabelState::ConfirmedNegative, "empty record");
  return c.outcome("1024 combinations match the rule");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budgetSeconds;
    Outcome (*run)();
  };
  const std::vector<Criterion> criteria = {
      {1, "constants", 1, constants},
      {2, "fusion", 10, fusion},
      {3, "auroc-oracle", 30, auroc_oracle},
      {4, "calibration", 30, calibration},
      {5, "gradients", 30, gradients},
      {6, "rle", 10, rle},
      {7, "compositor", 60, compositor},
      {8, "split", 30, split_integrity},
      {9, "bootstrap", 300, bootstrap},
      {10, "end-to-end", 300, end_to_end},
      {11, "label-merge", 10, label_merge},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > cr.budgetSeconds) {
      o.pass = false;
      o.detail += " [over time budget " + fmt(cr.budgetSeconds) + " s]";
    }
    failed += o.pass ? 0 : 1;
    std::printf("CRITERION %2d %-13s %s  %.2fs  %s\n", cr.id, cr.name, o.pass ? "PASS" : "FAIL", secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%s: %d of %zu criteria passed\n", failed ? "FAIL" : "PASS",
              static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
