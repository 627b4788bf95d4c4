#pragma once

#include <span>

#include "trx/types.hpp"

namespace trx {

/// Scalar score of a raw output: mask sum, positive-class probability, or
/// maximum box confidence (0 for no boxes).
double score_of(const RawOutput& output) noexcept;

/// Strict: score > cutpoint.
constexpr bool binarize(double score, double cutpoint) noexcept { return score > cutpoint; }

/// Logical OR over the four findings.
bool fuse_abnormality(const FindingMap<bool>& flags) noexcept;

/// score_of -> binarize -> fuse_abnormality for one study.
TriageResult run_pipeline(const StudyOutputs& outputs, const ThresholdConfig& cfg);

/// Continuous abnormality ranking score: max over findings of
/// (score - cutpoint) / |cutpoint| (scale 1 when the cutpoint is 0).
/// Positive exactly when the fused verdict is abnormal.
double abnormality_score(const FindingMap<double>& scores, const ThresholdConfig& cfg) noexcept;

struct CalibrationReport {
  double cutpoint = 0;
  double sensitivity = 0;
  double specificity = 0;
  double youden = 0;  // sensitivity + specificity - 1
};

/// Youden-optimal cutpoint under strict-greater binarization.
///
/// Candidates are -inf, +inf and the midpoints between consecutive distinct
/// scores. J is compared exactly (as integer numerators tp*N + tn*P), and
/// ties go to the smallest cutpoint. Throws DegenerateDataError when only
/// one class is present and ValidationError on non-finite scores.
CalibrationReport calibrate_threshold(std::span<const ScoredCase> cases);

}  // namespace trx
