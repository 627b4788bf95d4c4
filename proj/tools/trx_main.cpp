// trx: command line front end for the triage pipeline.
//
// Exit codes: 0 success, 1 invalid input, 2 degenerate data.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trx/compositor.hpp"
#include "trx/error.hpp"
#include "trx/evaluate.hpp"
#include "trx/fusion.hpp"
#include "trx/io.hpp"
#include "trx/labelset.hpp"
#include "trx/synth.hpp"
#include "trx/types.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitDegenerate = 2;

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string spec;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void run_synth(const SynthArgs& a) {
  trx::CohortSpec spec = trx::cohort_spec_from_json(trx::io::read_file(a.spec));
  if (a.seed) spec.seed = *a.seed;
  const trx::SyntheticCohort cohort = trx::synth_cohort(spec);
  const fs::path out(a.out);
  trx::io::write_raw_outputs(out / "outputs", cohort.outputs);
  std::vector<std::string> columns;
  for (trx::FindingKind kind : trx::kAllFindings) columns.emplace_back(trx::display_name(kind));
  trx::io::write_labels_csv(out / "labels.csv", cohort.labels, columns);
  trx::io::write_thresholds(out / "thresholds.json", trx::ThresholdConfig(spec.cutpoints));
  trx::io::write_file(out / "spec.json", trx::cohort_spec_to_json(spec));
  std::cout << "wrote " << cohort.outputs.size() << " studies to " << out.string() << "\n";
}

// ---------------------------------------------------------------------------

struct SplitArgs {
  std::string labels;
  double tuneFraction = trx::kDefaultTuneFraction;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> positiveColumns;
};

void run_split(const SplitArgs& a) {
  const auto records = trx::io::read_labels_csv(a.labels);
  std::function<bool(const trx::LabelRecord&)> positiveOf;
  if (a.positiveColumns.empty()) {
    // Any confirmed finding other than the two bookkeeping categories.
    positiveOf = [](const trx::LabelRecord& r) {
      return std::any_of(r.categories.begin(), r.categories.end(), [](const auto& entry) {
        return entry.second == trx::LabelState::ConfirmedPositive && entry.first != trx::kNoFindingCategory &&
               entry.first != trx::kSupportDevicesCategory;
      });
    };
  } else {
    positiveOf = [cols = a.positiveColumns](const trx::LabelRecord& r) {
      return std::any_of(cols.begin(), cols.end(),
                         [&](const std::string& c) { return r.state(c) == trx::LabelState::ConfirmedPositive; });
    };
  }
  const trx::SplitManifest m = trx::patient_level_split(records, positiveOf, a.tuneFraction, a.seed);
  trx::io::write_file(a.out, trx::io::manifest_to_json(m));
  std::cout << "train " << m.trainIds.size() << " studies, tune " << m.tuneIds.size() << " studies\n";
}

// ---------------------------------------------------------------------------

struct MergeArgs {
  std::string labels;
  std::string out;
  bool applySelection = false;
};

void run_merge_labels(const MergeArgs& a) {
  const trx::io::CsvTable input = trx::io::parse_csv(trx::io::read_file(a.labels));
  auto records = trx::io::labels_from_csv(input);

  std::vector<std::string> columns;
  for (std::size_t c = 5; c < input.header.size(); ++c) {
    const std::string& name = input.header[c];
    if (name.size() >= 7 && name.compare(name.size() - 7, 7, "_target") == 0) continue;
    if (name != trx::kOpacityCategory) columns.push_back(name);
  }
  columns.emplace_back(trx::kOpacityCategory);

  const trx::FilterRules rules = trx::FilterRules::opacity_training_set();
  std::map<std::string, std::size_t> excluded;
  std::vector<trx::LabelRecord> kept;
  std::vector<double> targets;
  for (auto& r : records) {
    const trx::LabelState merged = trx::merge_opacity_label(r);
    r.categories[std::string(trx::kOpacityCategory)] = merged;
    if (a.applySelection) {
      const trx::SelectionDecision d = trx::apply_selection_filters(r, rules);
      if (!d.keep) {
        ++excluded[d.reason];
        continue;
      }
    }
    targets.push_back(trx::encode_label_value(merged));
    kept.push_back(std::move(r));
  }

  trx::io::CsvTable table = trx::io::labels_to_csv(kept, columns);
  table.header.emplace_back("opacity_target");
  for (std::size_t i = 0; i < table.rows.size(); ++i) table.rows[i].push_back(trx::io::format_double(targets[i]));
  trx::io::write_file(a.out, trx::io::format_csv(table));

  std::cout << "kept " << kept.size() << " of " << records.size() << " studies\n";
  for (const auto& [reason, count] : excluded) std::cout << "  excluded (" << reason << "): " << count << "\n";
}

// ---------------------------------------------------------------------------

std::map<std::string, const trx::LabelRecord*> index_labels(const std::vector<trx::LabelRecord>& labels) {
  std::map<std::string, const trx::LabelRecord*> byId;
  for (const auto& l : labels) byId.emplace(l.studyId, &l);
  return byId;
}

struct CalibrateArgs {
  std::string outputs;
  std::string labels;
  std::string finding = "all";
  std::string base;
  std::string manifest;
  std::string out;
};

void run_calibrate(const CalibrateArgs& a) {
  const auto studies = trx::io::load_raw_outputs(a.outputs);
  const auto labels = trx::io::read_labels_csv(a.labels);
  const auto byId = index_labels(labels);

  std::optional<std::set<std::string>> tune;
  if (!a.manifest.empty()) tune = trx::io::manifest_from_json(trx::io::read_file(a.manifest)).tuneIds;

  std::vector<trx::FindingKind> findings;
  if (a.finding == "all") {
    findings.assign(trx::kAllFindings.begin(), trx::kAllFindings.end());
  } else {
    const auto kind = trx::parse_finding(a.finding);
    if (!kind) throw trx::ValidationError("unknown finding '" + a.finding + "'");
    findings.push_back(*kind);
  }

  trx::FindingMap<double> cuts =
      (a.base.empty() ? trx::default_paper_thresholds() : trx::io::read_thresholds(a.base)).cutpoints();

  for (trx::FindingKind kind : findings) {
    std::vector<trx::ScoredCase> cases;
    for (const auto& s : studies) {
      if (tune && !tune->contains(s.study_id())) continue;
      const auto it = byId.find(s.study_id());
      if (it == byId.end()) throw trx::ValidationError("no label for study " + s.study_id());
      cases.push_back({trx::score_of(s.output(kind)), trx::finding_truth(*it->second, kind)});
    }
    const trx::CalibrationReport rep = trx::calibrate_threshold(cases);
    if (!std::isfinite(rep.cutpoint)) {
      throw trx::DegenerateDataError("calibration of " + std::string(trx::slug(kind)) +
                                     " selected an infinite cutpoint (no separating threshold helps)");
    }
    cuts[kind] = rep.cutpoint;
    std::printf("%-18s cutpoint %-14s sens %.4f  spec %.4f  J %.4f  (n=%zu)\n", std::string(trx::slug(kind)).c_str(),
                trx::io::format_double(rep.cutpoint).c_str(), rep.sensitivity, rep.specificity, rep.youden,
                cases.size());
  }
  trx::io::write_thresholds(a.out, trx::ThresholdConfig(cuts));
}

// ---------------------------------------------------------------------------

struct TriageArgs {
  std::string outputs;
  std::string thresholds;
  std::string out;
};

void run_triage(const TriageArgs& a) {
  const auto studies = trx::io::load_raw_outputs(a.outputs);
  const trx::ThresholdConfig cfg =
      a.thresholds.empty() ? trx::default_paper_thresholds() : trx::io::read_thresholds(a.thresholds);
  std::vector<trx::TriageResult> results;
  results.reserve(studies.size());
  std::size_t abnormal = 0;
  for (const auto& s : studies) {
    results.push_back(trx::run_pipeline(s, cfg));
    abnormal += results.back().abnormal ? 1 : 0;
  }
  trx::io::write_file(a.out, trx::io::format_csv(trx::io::triage_to_csv(results)));
  std::cout << abnormal << " of " << results.size() << " studies flagged abnormal\n";
}

// ---------------------------------------------------------------------------

struct RenderArgs {
  std::string outputs;
  std::string study;
  std::string out;
  double floor = trx::ColorScale::kDefaultActivationFloor;
};

void run_render(const RenderArgs& a) {
  const fs::path dir = fs::path(a.outputs) / a.study;
  if (!fs::is_directory(dir)) throw trx::ValidationError("no study directory " + dir.string());
  const trx::StudyOutputs study = trx::io::read_study(dir);
  const trx::ColorScale scale(a.floor);
  const trx::HeatLayer unified = trx::unify_heatmaps(trx::study_layers(study, scale));
  trx::io::write_png(a.out, unified);
  std::cout << "wrote " << unified.width() << "x" << unified.height() << " heatmap to " << a.out << "\n";
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string outputs;
  std::string labels;
  std::string thresholds;
  std::string out;
  std::uint64_t seed = 0;
  std::string subgroup = "none";
  std::vector<int> ageEdges{40, 65};
  std::size_t resamples = trx::kDefaultBootstrapResamples;
  std::size_t permutations = trx::kDefaultPermutations;
  double level = trx::kDefaultConfidenceLevel;
  unsigned workers = 1;
};

void run_evaluate(const EvaluateArgs& a) {
  const auto studies = trx::io::load_raw_outputs(a.outputs);
  const auto labels = trx::io::read_labels_csv(a.labels);
  const trx::ThresholdConfig cfg =
      a.thresholds.empty() ? trx::default_paper_thresholds() : trx::io::read_thresholds(a.thresholds);
  trx::EvalOptions opt;
  opt.seed = a.seed;
  opt.resamples = a.resamples;
  opt.level = a.level;
  opt.workers = a.workers;
  opt.permutations = a.permutations;
  opt.ageEdges = a.ageEdges;
  const auto sub = trx::parse_subgroup_variable(a.subgroup);
  if (!sub) throw trx::ValidationError("unknown subgroup variable '" + a.subgroup + "'");
  opt.subgroup = *sub;

  const trx::EvalReport report = trx::evaluate_cohort(studies, labels, cfg, opt);
  trx::io::write_file(a.out, trx::report_to_json(report));
  std::cout << trx::report_summary(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chest x-ray triage: late fusion, calibration, heatmaps and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "trx 0.1.0");

  SynthArgs synth;
  auto* cSynth = app.add_subcommand("synth", "Generate a synthetic cohort with known ground truth");
  cSynth->add_option("--spec", synth.spec, "Cohort spec JSON")->required()->check(CLI::ExistingFile);
  cSynth->add_option("--out", synth.out, "Output directory")->required();
  cSynth->add_option("--seed", synth.seed, "Override the spec seed");

  SplitArgs split;
  auto* cSplit = app.add_subcommand("split", "Patient-level stratified train/tune split");
  cSplit->add_option("--labels", split.labels, "Labels CSV")->required()->check(CLI::ExistingFile);
  cSplit->add_option("--tune-fraction", split.tuneFraction, "Fraction of each stratum sent to tune")
      ->capture_default_str();
  cSplit->add_option("--seed", split.seed, "Shuffle seed")->required();
  cSplit->add_option("--out", split.out, "Manifest JSON")->required();
  cSplit->add_option("--positive-column", split.positiveColumns,
                     "Category that marks a study positive (repeatable; default any finding)");

  MergeArgs merge;
  auto* cMerge = app.add_subcommand("merge-labels", "Unify opacity labels and add soft training targets");
  cMerge->add_option("--labels", merge.labels, "CheXpert-style labels CSV")->required()->check(CLI::ExistingFile);
  cMerge->add_option("--out", merge.out, "Merged labels CSV")->required();
  cMerge->add_flag("--apply-selection", merge.applySelection, "Drop studies failing the opacity selection rules");

  CalibrateArgs cal;
  auto* cCal = app.add_subcommand("calibrate", "Youden-optimal cutpoints on a tuning set");
  cCal->add_option("--outputs", cal.outputs, "Raw output directory")->required()->check(CLI::ExistingDirectory);
  cCal->add_option("--labels", cal.labels, "Labels CSV")->required()->check(CLI::ExistingFile);
  cCal->add_option("--finding", cal.finding, "Finding to calibrate, or 'all'")->capture_default_str();
  cCal->add_option("--base", cal.base, "Thresholds kept for uncalibrated findings (default: published)")
      ->check(CLI::ExistingFile);
  cCal->add_option("--manifest", cal.manifest, "Restrict to the tune side of a split manifest")
      ->check(CLI::ExistingFile);
  cCal->add_option("--out", cal.out, "Thresholds JSON")->required();

  TriageArgs tri;
  auto* cTri = app.add_subcommand("triage", "Per-study flags and fused verdict");
  cTri->add_option("--outputs", tri.outputs, "Raw output directory")->required()->check(CLI::ExistingDirectory);
  cTri->add_option("--thresholds", tri.thresholds, "Thresholds JSON (default: published)")
      ->check(CLI::ExistingFile);
  cTri->add_option("--out", tri.out, "Results CSV")->required();

  RenderArgs ren;
  auto* cRen = app.add_subcommand("render", "Unified RGBA heatmap for one study");
  cRen->add_option("--outputs", ren.outputs, "Raw output directory")->required()->check(CLI::ExistingDirectory);
  cRen->add_option("--study", ren.study, "Study id")->required();
  cRen->add_option("--out", ren.out, "PNG path")->required();
  cRen->add_option("--floor", ren.floor, "Activation floor")->capture_default_str()->check(CLI::Range(0.0, 1.0));

  EvaluateArgs ev;
  auto* cEv = app.add_subcommand("evaluate", "Diagnostic metrics with bootstrap confidence intervals");
  cEv->add_option("--outputs", ev.outputs, "Raw output directory")->required()->check(CLI::ExistingDirectory);
  cEv->add_option("--labels", ev.labels, "Labels CSV")->required()->check(CLI::ExistingFile);
  cEv->add_option("--thresholds", ev.thresholds, "Thresholds JSON (default: published)")
      ->check(CLI::ExistingFile);
  cEv->add_option("--seed", ev.seed, "Bootstrap and permutation seed")->required();
  cEv->add_option("--subgroup", ev.subgroup, "none, sex or ageband")
      ->capture_default_str()
      ->check(CLI::IsMember({"none", "sex", "ageband"}));
  cEv->add_option("--age-bands", ev.ageEdges, "Age band edges in years")->delimiter(',')->capture_default_str();
  cEv->add_option("--resamples", ev.resamples, "Bootstrap resamples")->capture_default_str()->check(
      CLI::PositiveNumber);
  cEv->add_option("--permutations", ev.permutations, "Permutations per subgroup comparison")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cEv->add_option("--level", ev.level, "Confidence level")->capture_default_str()->check(CLI::Range(0.5, 0.9999));
  cEv->add_option("--workers", ev.workers, "Bootstrap worker threads")->capture_default_str()->check(
      CLI::Range(1u, 256u));
  cEv->add_option("--out", ev.out, "Report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*cSynth) run_synth(synth);
    if (*cSplit) run_split(split);
    if (*cMerge) run_merge_labels(merge);
    if (*cCal) run_calibrate(cal);
    if (*cTri) run_triage(tri);
    if (*cRen) run_render(ren);
    if (*cEv) run_evaluate(ev);
  } catch (const trx::DegenerateDataError& e) {
    std::cerr << "trx: degenerate data: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const trx::ValidationError& e) {
    std::cerr << "trx: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "trx: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
