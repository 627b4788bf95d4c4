#include "trx/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "trx/error.hpp"

namespace trx {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

double score_of(const RawOutput& output) noexcept {
  return std::visit(
      Overloaded{
          [](const MaskGrid& grid) {
            double sum = 0.0;
            for (float v : grid.cells()) sum += v;
            return sum;
          },
          [](const SoftmaxPair& pair) { return pair.positive(); },
          [](const BoxList& list) {
            double best = 0.0;
            for (const ScoredBox& b : list.boxes()) best = std::max(best, b.confidence);
            return best;
          },
      },
      output);
}

bool fuse_abnormality(const FindingMap<bool>& flags) noexcept {
  return std::any_of(flags.begin(), flags.end(), [](bool f) { return f; });
}

TriageResult run_pipeline(const StudyOutputs& outputs, const ThresholdConfig& cfg) {
  TriageResult result;
  result.studyId = outputs.study_id();
  for (FindingKind kind : kAllFindings) {
    result.scores[kind] = score_of(outputs.output(kind));
    result.flags[kind] = binarize(result.scores[kind], cfg.cutpoint(kind));
  }
  result.abnormal = fuse_abnormality(result.flags);
  return result;
}

double abnormality_score(const FindingMap<double>& scores, const ThresholdConfig& cfg) noexcept {
  double best = -std::numeric_limits<double>::infinity();
  for (FindingKind kind : kAllFindings) {
    const double cut = cfg.cutpoint(kind);
    const double scale = cut == 0.0 ? 1.0 : std::abs(cut);
    best = std::max(best, (scores[kind] - cut) / scale);
  }
  return best;
}

CalibrationReport calibrate_threshold(std::span<const ScoredCase> cases) {
  std::int64_t positives = 0;
  for (const ScoredCase& c : cases) {
    if (!std::isfinite(c.score)) throw ValidationError("calibration score is not finite");
    positives += c.label ? 1 : 0;
  }
  const auto total = static_cast<std::int64_t>(cases.size());
  const std::int64_t negatives = total - positives;
  if (positives == 0 || negatives == 0) throw DegenerateDataError("degenerate tuning set");

  std::vector<ScoredCase> sorted(cases.begin(), cases.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredCase& a, const ScoredCase& b) { return a.score < b.score; });

  // Sweep cutpoints upward. Before the first block every case is predicted
  // positive (cut = -inf): tp = P, tn = 0.
  std::int64_t tp = positives;
  std::int64_t tn = 0;
  const auto numerator = [&](std::int64_t tpv, std::int64_t tnv) {
    return tpv * negatives + tnv * positives;
  };
  double bestCut = -std::numeric_limits<double>::infinity();
  std::int64_t bestTp = tp;
  std::int64_t bestTn = tn;
  std::int64_t bestNum = numerator(tp, tn);

  std::size_t i = 0;
  while (i < sorted.size()) {
    const double value = sorted[i].score;
    while (i < sorted.size() && sorted[i].score == value) {
      if (sorted[i].label) {
        --tp;
      } else {
        ++tn;
      }
      ++i;
    }
    double cut = std::numeric_limits<double>::infinity();
    if (i < sorted.size()) {
      cut = std::midpoint(value, sorted[i].score);
      // Adjacent doubles: the midpoint can round onto the upper score.
      if (!(cut < sorted[i].score)) cut = value;
    }
    const std::int64_t num = numerator(tp, tn);
    if (num > bestNum) {
      bestNum = num;
      bestCut = cut;
      bestTp = tp;
      bestTn = tn;
    }
  }

  CalibrationReport report;
  report.cutpoint = bestCut;
  report.sensitivity = static_cast<double>(bestTp) / static_cast<double>(positives);
  report.specificity = static_cast<double>(bestTn) / static_cast<double>(negatives);
  report.youden = static_cast<double>(bestNum - positives * negatives) /
                  static_cast<double>(positives * negatives);
  return report;
}

}  // namespace trx
