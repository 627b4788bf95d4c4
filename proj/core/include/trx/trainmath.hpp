#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace trx {

/// Predictions and (possibly soft) targets of equal shape, flattened.
struct PredTarget {
  std::vector<double> pred;
  std::vector<double> target;
};

/// Logarithmic losses evaluate at pred clamped to [kProbEpsilon, 1 - kProbEpsilon].
inline constexpr double kProbEpsilon = 1e-7;

struct LossValueGrad {
  double value = 0;
  std::vector<double> gradWrtPred;
};

/// Mean binary cross entropy.
LossValueGrad bce_loss(const PredTarget& pt);

inline constexpr double kDefaultFocalGamma = 2.0;
inline constexpr double kDefaultFocalAlpha = 0.25;

/// Mean of -a t (1-p)^g ln p - (1-a)(1-t) p^g ln(1-p).
LossValueGrad focal_loss(const PredTarget& pt, double gamma = kDefaultFocalGamma,
                         double alpha = kDefaultFocalAlpha);

inline constexpr double kDefaultDiceSmooth = 1.0;

/// 1 - (2 sum(p t) + s) / (sum p + sum t + s). Unclamped: no logarithms.
LossValueGrad dice_loss(const PredTarget& pt, double smooth = kDefaultDiceSmooth);

struct LossWeights {
  double bce = 3.0;
  double focal = 4.0;
  double dice = 1.0;
};

struct CombinedLossOptions {
  LossWeights weights;
  double focalGamma = kDefaultFocalGamma;
  double focalAlpha = kDefaultFocalAlpha;
  double diceSmooth = kDefaultDiceSmooth;
};

/// weights.bce * BCE + weights.focal * focal + weights.dice * dice.
LossValueGrad combined_loss(const PredTarget& pt, const CombinedLossOptions& options = {});

enum class PlateauMode { Min, Max };

struct SchedulerState {
  double lr = 0;
  double bestMetric = 0;
  int epochsSinceImprove = 0;

  /// Fresh state whose best metric any finite value improves on.
  static SchedulerState initial(double lr, PlateauMode mode);
  bool operator==(const SchedulerState&) const = default;
};

struct PlateauOptions {
  double factor = 0.1;
  int patience = 2;
  PlateauMode mode = PlateauMode::Min;
};

/// Reduce-on-plateau step: a strict improvement resets the counter,
/// otherwise it increments; once it exceeds patience, lr *= factor and the
/// counter resets. Throws ValidationError if factor is outside (0, 1).
SchedulerState plateau_step(const SchedulerState& state, double epochMetric,
                            const PlateauOptions& options = {});

/// lrMin + (lrMax - lrMin)(1 + cos(pi t / T)) / 2 for 0 <= t <= T.
double cosine_annealing_lr(int t, int T, double lrMax, double lrMin = 0.0);

/// Exactly round(epochSize * posFraction) positives drawn with replacement,
/// the rest negatives, then shuffled. Draws use Rng(seed): positives first,
/// then negatives, then one Fisher-Yates pass.
std::vector<std::string> ratio_sampler(std::span<const std::string> posIds,
                                       std::span<const std::string> negIds, double posFraction,
                                       std::size_t epochSize, std::uint64_t seed);

std::size_t positive_quota(std::size_t epochSize, double posFraction);

struct ResizeResult {
  std::size_t width = 0;
  std::size_t height = 0;
  double scale = 1.0;
  bool operator==(const ResizeResult&) const = default;
};

/// Detector input size: scale the short side to minSide unless that pushes
/// the long side past maxSide, in which case the long side becomes maxSide.
/// Output dims are floored, computed in integer arithmetic.
ResizeResult retina_resize(std::size_t width, std::size_t height, std::size_t minSide = 800,
                           std::size_t maxSide = 1333);

struct IntensityParams {
  double contrast = 0.0;       // [-0.2, 0.2]
  double brightness = 0.0;     // [-0.2, 0.2]
  double gammaPercent = 100.0; // [80, 120]; exponent = gammaPercent / 100
};

struct IntensityRanges {
  static constexpr double kContrastLimit = 0.2;
  static constexpr double kBrightnessLimit = 0.2;
  static constexpr double kGammaMin = 80.0;
  static constexpr double kGammaMax = 120.0;
};

/// Geometric augmentation ranges. Recorded for configuration only; this
/// library does not resample images geometrically.
struct GeometricRanges {
  static constexpr double kShiftLimit = 0.0625;
  static constexpr double kScaleLimit = 0.1;
  static constexpr double kRotateLimitDegrees = 45.0;
};

/// Draws contrast, brightness and gamma uniformly from their ranges, in
/// that order, with Rng(seed).
IntensityParams sample_intensity_params(std::uint64_t seed);

/// contrast -> brightness -> gamma, each clamped to [0, 1]. Throws
/// ValidationError if a parameter is out of range or a value is outside
/// [0, 1].
std::vector<double> augment_intensity(std::span<const double> image, const IntensityParams& params);
std::vector<double> augment_intensity(std::span<const double> image, std::uint64_t seed);

}  // namespace trx
