#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "trx/labelset.hpp"
#include "trx/types.hpp"

namespace trx {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Throws ValidationError on length mismatch or empty input.
ConfusionCounts confusion_counts(const std::vector<bool>& preds, const std::vector<bool>& labels);

/// Components with a zero denominator are nullopt.
struct DiagnosticMetrics {
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> ppv;
  std::optional<double> npv;
};

DiagnosticMetrics diagnostic_metrics(const ConfusionCounts& c) noexcept;

struct RocPoint {
  double fpr = 0;
  double tpr = 0;
  bool operator==(const RocPoint&) const = default;
};

using RocCurve = std::vector<RocPoint>;

/// Vertices from sweeping the strict-greater threshold down through the
/// distinct scores: starts at (0,0), one vertex per tie block, ends at (1,1).
/// Throws DegenerateDataError unless both classes are present.
RocCurve roc_curve(std::span<const ScoredCase> cases);

/// Trapezoidal area under roc_curve (ties contribute half credit).
double auroc(std::span<const ScoredCase> cases);

/// Presorted view of a case set for fast repeated AUROC evaluation under
/// case weights (bootstrap multiplicities) or group masks (permutations).
class AurocRanker {
 public:
  explicit AurocRanker(std::span<const ScoredCase> cases);

  std::size_t size() const noexcept { return labels_.size(); }

  /// AUROC where case i counts weights[i] times. nullopt if either class has
  /// zero total weight.
  std::optional<double> weighted(std::span<const std::uint32_t> weights) const;

  /// AUROC of the cases whose membership byte equals group.
  std::optional<double> group(std::span<const std::uint8_t> membership, std::uint8_t group) const;

 private:
  std::vector<std::size_t> order_;        // case indices, ascending score
  std::vector<std::size_t> blockStarts_;  // offsets into order_ of each tie block, plus end
  std::vector<bool> labels_;
};

inline constexpr std::size_t kDefaultBootstrapResamples = 10000;
inline constexpr double kDefaultConfidenceLevel = 0.95;

struct ConfidenceInterval {
  double low = 0;
  double high = 0;
  double level = kDefaultConfidenceLevel;
  std::size_t resamples = 0;
  std::uint64_t seed = 0;
  std::size_t discarded = 0;  // resamples where the statistic was undefined

  bool operator==(const ConfidenceInterval&) const = default;
};

struct BootstrapOptions {
  std::size_t resamples = kDefaultBootstrapResamples;
  double level = kDefaultConfidenceLevel;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// Statistic over resampled case indices; nullopt when undefined.
using Statistic = std::function<std::optional<double>(std::span<const std::size_t>)>;

/// Evaluates several statistics on the same resamples. Writes one value per
/// statistic into the output span.
using MultiStatistic =
    std::function<void(std::span<const std::size_t>, std::span<std::optional<double>>)>;

/// Percentile bootstrap. Resample r draws n indices with replacement from
/// Rng::substream(seed, r), so the result does not depend on the worker
/// count. Quantiles use linear interpolation between order statistics.
/// Undefined resamples are discarded and counted; more than half discarded
/// throws DegenerateDataError.
ConfidenceInterval bootstrap_ci(const Statistic& statistic, std::size_t n,
                                const BootstrapOptions& options = {});

/// Multi-statistic variant. Entry k is nullopt when statistic k had more
/// than half of its resamples discarded.
std::vector<std::optional<ConfidenceInterval>> bootstrap_ci_many(const MultiStatistic& statistic,
                                                                 std::size_t statisticCount,
                                                                 std::size_t n,
                                                                 const BootstrapOptions& options = {});

/// Linear-interpolation quantile of sorted values (p in [0, 1]).
double interpolated_quantile(std::span<const double> sorted, double p);

/// 2|A and B| / (|A| + |B|); 1.0 when both are empty. Throws
/// ValidationError on a size mismatch.
double dice_score(const BinaryMask& pred, const BinaryMask& gt);

struct SubgroupComparison {
  double observedDelta = 0;
  double pValue = 1;
};

/// Label-stratified permutation test on |AUROC_A - AUROC_B|. Each
/// permutation reshuffles group membership among positives and among
/// negatives separately using Rng::substream(seed, permutation).
/// Permuted deltas within 1e-12 of the observed one count as exceeding it.
/// Throws DegenerateDataError if a group lacks either class.
SubgroupComparison compare_subgroup_auroc(std::span<const ScoredCase> groupA,
                                          std::span<const ScoredCase> groupB, std::size_t permutations,
                                          std::uint64_t seed);

}  // namespace trx
