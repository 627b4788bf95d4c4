#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "trx/labelset.hpp"
#include "trx/types.hpp"

namespace trx {

/// Parameters of a synthetic cohort with known ground truth.
///
/// Each finding is positive with its prevalence. With probability
/// signalStrength the finding's score is informative: positives land in a
/// band above the cutpoint and negatives in a band below. Otherwise the
/// score lands in either band with equal chance regardless of truth. The
/// expected per-finding AUROC is therefore 0.5 + 0.5 * signalStrength.
struct CohortSpec {
  std::size_t nStudies = 200;
  FindingMap<double> prevalence{0.3, 0.3, 0.3, 0.3};
  double signalStrength = 1.0;
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t camSize = 8;
  std::uint64_t seed = 0;
  /// Cutpoints the scores are placed around. Mask cutpoints must lie
  /// strictly inside (0, width * height); the others inside (0, 1).
  FindingMap<double> cutpoints{144.43, 3440.5, 0.98, 0.15};

  /// Throws ValidationError on out-of-range fields.
  void validate() const;
};

struct SyntheticCohort {
  std::vector<StudyOutputs> outputs;  // ordered by study id
  std::vector<LabelRecord> labels;    // same order
};

/// Deterministic in spec (including seed). Study ids are "s000000",
/// "s000001", ...; each patient owns one to three consecutive studies.
/// Labels carry the four findings under their CheXpert column names as
/// ConfirmedPositive / ConfirmedNegative, a PA view, uniform sex and ages
/// 18 to 90.
SyntheticCohort synth_cohort(const CohortSpec& spec);

/// Score bands used for a finding: [low.first, low.second] below the
/// cutpoint and [high.first, high.second] above it.
struct ScoreBands {
  double lowMin = 0;
  double lowMax = 0;
  double highMin = 0;
  double highMax = 0;
};

/// capacity is the largest attainable score (pixel count for masks, 1
/// otherwise). Throws ValidationError unless 0 < cutpoint < capacity.
ScoreBands score_bands(double cutpoint, double capacity);

/// Mask whose cell sum equals target (to float precision): full cells
/// nearest a random centre plus one fractional cell.
MaskGrid synth_blob_mask(std::size_t width, std::size_t height, double target, std::uint64_t seed);

/// Analytic AUROC of a finding under the mixture model.
constexpr double expected_auroc(double signalStrength) noexcept { return 0.5 + 0.5 * signalStrength; }

std::string cohort_spec_to_json(const CohortSpec& spec);
/// Keys: n_studies, prevalence (number or object keyed by finding slug),
/// signal_strength, width, height, cam_size, seed, cutpoints (object).
/// Missing keys keep their defaults.
CohortSpec cohort_spec_from_json(std::string_view text);

}  // namespace trx
