#include "trx/trainmath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "trx/error.hpp"
#include "trx/rng.hpp"

namespace trx {

namespace {

void check_shapes(const PredTarget& pt) {
  if (pt.pred.size() != pt.target.size()) {
    throw ValidationError("prediction and target shapes differ: " + std::to_string(pt.pred.size()) +
                          " vs " + std::to_string(pt.target.size()));
  }
  if (pt.pred.empty()) throw ValidationError("loss needs at least one element");
}

double clamp_prob(double p) { return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon); }

}  // namespace

LossValueGrad bce_loss(const PredTarget& pt) {
  check_shapes(pt);
  const auto n = static_cast<double>(pt.pred.size());
  LossValueGrad out;
  out.gradWrtPred.resize(pt.pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pt.pred.size(); ++i) {
    const double p = clamp_prob(pt.pred[i]);
    const double t = pt.target[i];
    sum += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
    out.gradWrtPred[i] = (p - t) / (p * (1.0 - p)) / n;
  }
  out.value = sum / n;
  return out;
}

LossValueGrad focal_loss(const PredTarget& pt, double gamma, double alpha) {
  check_shapes(pt);
  if (!(gamma >= 0.0)) throw ValidationError("focal gamma must be non-negative");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("focal alpha must lie in [0, 1]");
  const auto n = static_cast<double>(pt.pred.size());
  LossValueGrad out;
  out.gradWrtPred.resize(pt.pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pt.pred.size(); ++i) {
    const double p = clamp_prob(pt.pred[i]);
    const double t = pt.target[i];
    const double q = 1.0 - p;
    const double lp = std::log(p);
    const double lq = std::log(q);
    const double wq = std::pow(q, gamma);  // (1-p)^g
    const double wp = std::pow(p, gamma);  // p^g
    sum += -alpha * t * wq * lp - (1.0 - alpha) * (1.0 - t) * wp * lq;

    // d/dp of (1-p)^g ln p and p^g ln(1-p)
    const double dPos = -gamma * std::pow(q, gamma - 1.0) * lp + wq / p;
    const double dNeg = gamma * std::pow(p, gamma - 1.0) * lq - wp / q;
    out.gradWrtPred[i] = (-alpha * t * dPos - (1.0 - alpha) * (1.0 - t) * dNeg) / n;
  }
  out.value = sum / n;
  return out;
}

LossValueGrad dice_loss(const PredTarget& pt, double smooth) {
  check_shapes(pt);
  double spt = 0.0;
  double sp = 0.0;
  double st = 0.0;
  for (std::size_t i = 0; i < pt.pred.size(); ++i) {
    spt += pt.pred[i] * pt.target[i];
    sp += pt.pred[i];
    st += pt.target[i];
  }
  const double num = 2.0 * spt + smooth;
  const double den = sp + st + smooth;
  if (den == 0.0) throw ValidationError("dice loss undefined: zero denominator");
  LossValueGrad out;
  out.value = 1.0 - num / den;
  out.gradWrtPred.resize(pt.pred.size());
  for (std::size_t i = 0; i < pt.pred.size(); ++i) {
    out.gradWrtPred[i] = -(2.0 * pt.target[i] * den - num) / (den * den);
  }
  return out;
}

LossValueGrad combined_loss(const PredTarget& pt, const CombinedLossOptions& options) {
  const LossValueGrad b = bce_loss(pt);
  const LossValueGrad f = focal_loss(pt, options.focalGamma, options.focalAlpha);
  const LossValueGrad d = dice_loss(pt, options.diceSmooth);
  const LossWeights& w = options.weights;
  LossValueGrad out;
  out.value = w.bce * b.value + w.focal * f.value + w.dice * d.value;
  out.gradWrtPred.resize(pt.pred.size());
  for (std::size_t i = 0; i < pt.pred.size(); ++i) {
    out.gradWrtPred[i] = w.bce * b.gradWrtPred[i] + w.focal * f.gradWrtPred[i] + w.dice * d.gradWrtPred[i];
  }
  return out;
}

SchedulerState SchedulerState::initial(double lr, PlateauMode mode) {
  if (!(lr > 0.0)) throw ValidationError("learning rate must be positive");
  const double inf = std::numeric_limits<double>::infinity();
  return {lr, mode == PlateauMode::Min ? inf : -inf, 0};
}

SchedulerState plateau_step(const SchedulerState& state, double epochMetric,
                            const PlateauOptions& options) {
  if (!(options.factor > 0.0 && options.factor < 1.0)) {
    throw ValidationError("plateau factor must lie in (0, 1)");
  }
  SchedulerState next = state;
  const bool improved = options.mode == PlateauMode::Min ? epochMetric < state.bestMetric
                                                         : epochMetric > state.bestMetric;
  if (improved) {
    next.bestMetric = epochMetric;
    next.epochsSinceImprove = 0;
    return next;
  }
  ++next.epochsSinceImprove;
  if (next.epochsSinceImprove > options.patience) {
    next.lr *= options.factor;
    next.epochsSinceImprove = 0;
  }
  return next;
}

double cosine_annealing_lr(int t, int T, double lrMax, double lrMin) {
  if (T < 1) throw ValidationError("cosine annealing period must be at least 1");
  if (t < 0 || t > T) {
    throw ValidationError("cosine annealing step " + std::to_string(t) + " outside [0, " +
                          std::to_string(T) + "]");
  }
  const double phase = std::numbers::pi * static_cast<double>(t) / static_cast<double>(T);
  return lrMin + 0.5 * (lrMax - lrMin) * (1.0 + std::cos(phase));
}

std::size_t positive_quota(std::size_t epochSize, double posFraction) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(epochSize) * posFraction));
}

std::vector<std::string> ratio_sampler(std::span<const std::string> posIds,
                                       std::span<const std::string> negIds, double posFraction,
                                       std::size_t epochSize, std::uint64_t seed) {
  if (posIds.empty() || negIds.empty()) throw ValidationError("sampler pools must be non-empty");
  if (!(posFraction > 0.0 && posFraction < 1.0)) {
    throw ValidationError("positive fraction must lie in (0, 1)");
  }
  const std::size_t nPos = positive_quota(epochSize, posFraction);
  Rng rng(seed);
  std::vector<std::string> out;
  out.reserve(epochSize);
  for (std::size_t i = 0; i < nPos; ++i) out.push_back(posIds[rng.uniform_below(posIds.size())]);
  for (std::size_t i = nPos; i < epochSize; ++i) out.push_back(negIds[rng.uniform_below(negIds.size())]);
  rng.shuffle(std::span(out));
  return out;
}

ResizeResult retina_resize(std::size_t width, std::size_t height, std::size_t minSide,
                           std::size_t maxSide) {
  if (width == 0 || height == 0) throw ValidationError("image dimensions must be positive");
  const std::size_t shortSide = std::min(width, height);
  const std::size_t longSide = std::max(width, height);
  double scale = static_cast<double>(minSide) / static_cast<double>(shortSide);
  // Compare longSide * minSide / shortSide > maxSide without rounding.
  const bool longBinds = longSide * minSide > maxSide * shortSide;
  std::size_t newShort = minSide;
  std::size_t newLong = longSide * minSide / shortSide;
  if (longBinds) {
    scale = static_cast<double>(maxSide) / static_cast<double>(longSide);
    newLong = maxSide;
    newShort = shortSide * maxSide / longSide;
  }
  const bool wide = width >= height;
  return {wide ? newLong : newShort, wide ? newShort : newLong, scale};
}

IntensityParams sample_intensity_params(std::uint64_t seed) {
  Rng rng(seed);
  IntensityParams p;
  p.contrast = rng.uniform(-IntensityRanges::kContrastLimit, IntensityRanges::kContrastLimit);
  p.brightness = rng.uniform(-IntensityRanges::kBrightnessLimit, IntensityRanges::kBrightnessLimit);
  p.gammaPercent = rng.uniform(IntensityRanges::kGammaMin, IntensityRanges::kGammaMax);
  return p;
}

std::vector<double> augment_intensity(std::span<const double> image, const IntensityParams& params) {
  if (!(std::abs(params.contrast) <= IntensityRanges::kContrastLimit)) {
    throw ValidationError("contrast outside [-0.2, 0.2]");
  }
  if (!(std::abs(params.brightness) <= IntensityRanges::kBrightnessLimit)) {
    throw ValidationError("brightness outside [-0.2, 0.2]");
  }
  if (!(params.gammaPercent >= IntensityRanges::kGammaMin &&
        params.gammaPercent <= IntensityRanges::kGammaMax)) {
    throw ValidationError("gamma outside [80, 120]");
  }
  const double exponent = params.gammaPercent / 100.0;
  std::vector<double> out(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    double x = image[i];
    if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("image value outside [0, 1]");
    if (params.contrast != 0.0) x = std::clamp((x - 0.5) * (1.0 + params.contrast) + 0.5, 0.0, 1.0);
    x = std::clamp(x + params.brightness, 0.0, 1.0);
    out[i] = std::pow(x, exponent);
  }
  return out;
}

std::vector<double> augment_intensity(std::span<const double> image, std::uint64_t seed) {
  return augment_intensity(image, sample_intensity_params(seed));
}

}  // namespace trx
