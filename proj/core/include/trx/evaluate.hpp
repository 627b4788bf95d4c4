#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trx/labelset.hpp"
#include "trx/metrics.hpp"
#include "trx/types.hpp"

namespace trx {

/// Task names in report order: the fused verdict, then each finding slug.
inline constexpr std::string_view kAbnormalityTask = "abnormality";
std::vector<std::string> task_names();

/// Point estimate plus bootstrap interval. Either may be missing: the value
/// when its denominator is empty, the interval when too many resamples were
/// undefined.
struct MetricEstimate {
  std::optional<double> value;
  std::optional<ConfidenceInterval> ci;
  bool operator==(const MetricEstimate&) const = default;
};

struct TaskReport {
  std::string task;
  bool available = false;
  std::string unavailableReason;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  ConfusionCounts counts;
  MetricEstimate auroc;
  MetricEstimate sensitivity;
  MetricEstimate specificity;
  MetricEstimate ppv;
  MetricEstimate npv;
  RocCurve roc;

  bool operator==(const TaskReport&) const = default;
};

enum class SubgroupVariable { None, Sex, AgeBand };

std::string_view to_string(SubgroupVariable v) noexcept;
std::optional<SubgroupVariable> parse_subgroup_variable(std::string_view text);

struct GroupSummary {
  std::string name;
  std::size_t size = 0;
  std::size_t positives = 0;
  std::optional<double> auroc;  // missing when the group lacks a class
  bool operator==(const GroupSummary&) const = default;
};

struct GroupComparison {
  std::string groupA;
  std::string groupB;
  double observedDelta = 0;
  double pValue = 1;
  bool operator==(const GroupComparison&) const = default;
};

struct TaskSubgroups {
  std::string task;
  std::vector<GroupSummary> groups;
  std::vector<GroupComparison> comparisons;  // every pair of groups with both classes
  bool operator==(const TaskSubgroups&) const = default;
};

struct SubgroupReport {
  SubgroupVariable variable = SubgroupVariable::None;
  std::vector<int> ageEdges;
  std::size_t permutations = 0;
  std::vector<TaskSubgroups> tasks;
  bool operator==(const SubgroupReport&) const = default;
};

struct EvalReport {
  std::uint64_t seed = 0;
  std::size_t resamples = 0;
  double level = 0;
  std::size_t studies = 0;
  std::vector<TaskReport> tasks;  // always all five, in task_names() order
  std::optional<SubgroupReport> subgroups;

  const TaskReport& task(std::string_view name) const;
  bool operator==(const EvalReport&) const = default;
};

inline constexpr std::size_t kDefaultPermutations = 2000;

struct EvalOptions {
  std::uint64_t seed = 0;
  std::size_t resamples = kDefaultBootstrapResamples;
  double level = kDefaultConfidenceLevel;
  unsigned workers = 1;
  SubgroupVariable subgroup = SubgroupVariable::None;
  /// Band edges in years: {40, 65} gives "<40", "40-65", ">=65".
  std::vector<int> ageEdges{40, 65};
  std::size_t permutations = kDefaultPermutations;
};

/// Ground truth of a finding: its CheXpert column is ConfirmedPositive.
bool finding_truth(const LabelRecord& label, FindingKind kind);

/// Band name of an age under the given ascending edges.
std::string age_band(int age, std::span<const int> edges);

/// Runs the pipeline per study and reports the abnormality task and the
/// four finding tasks. Finding AUROCs rank raw scores; the abnormality task
/// ranks abnormality_score. Task k bootstraps with derive_seed(seed, k).
/// Studies are processed in id order, so input order does not matter.
/// Throws ValidationError when a study has no label or ids repeat.
EvalReport evaluate_cohort(std::span<const StudyOutputs> outputs, std::span<const LabelRecord> labels,
                           const ThresholdConfig& cfg, const EvalOptions& options = {});

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);

/// Short human-readable table.
std::string report_summary(const EvalReport& report);

}  // namespace trx
