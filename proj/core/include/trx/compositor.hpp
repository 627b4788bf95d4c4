#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "trx/types.hpp"

namespace trx {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

struct Rgba {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  std::uint8_t a = 0;
  bool operator==(const Rgba&) const = default;
};

/// Row-major RGBA raster with straight (non-premultiplied) alpha. Alpha 0
/// marks a non-activated pixel.
class HeatLayer {
 public:
  /// Fully transparent layer. Throws ValidationError on zero dimensions.
  HeatLayer(std::size_t width, std::size_t height);
  HeatLayer(std::size_t width, std::size_t height, std::vector<Rgba> pixels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  Rgba& at(std::size_t x, std::size_t y) noexcept { return pixels_[y * width_ + x]; }
  const Rgba& at(std::size_t x, std::size_t y) const noexcept { return pixels_[y * width_ + x]; }
  const std::vector<Rgba>& pixels() const noexcept { return pixels_; }
  std::vector<Rgba>& pixels() noexcept { return pixels_; }

  bool fully_transparent() const noexcept;
  bool operator==(const HeatLayer&) const = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<Rgba> pixels_;
};

/// Common color scale shared by every heat layer.
///
/// The default ramp runs blue -> cyan -> green -> yellow -> red with stops at
/// 0, 0.25, 0.5, 0.75 and 1, interpolated linearly per channel and rounded.
/// Activations at or below the floor render transparent.
class ColorScale {
 public:
  static constexpr double kDefaultActivationFloor = 0.1;

  explicit ColorScale(double activationFloor = kDefaultActivationFloor);

  Rgb map(double activation) const noexcept;
  double activation_floor() const noexcept { return floor_; }

  /// Pixel for one activation value: transparent at or below the floor,
  /// otherwise map(v) with alpha round(255 v).
  Rgba shade(double activation) const noexcept;

 private:
  double floor_;
};

/// Pointwise colorization of a score grid.
HeatLayer colorize_mask(const MaskGrid& grid, const ColorScale& scale);

/// Bilinear resize with the align-corners convention (corner cells land on
/// corner pixels). A 1-wide axis samples the first cell.
MaskGrid upsample_bilinear(const MaskGrid& grid, std::size_t targetWidth, std::size_t targetHeight);

/// Upsamples a class activation map to the target size, then colorizes it.
HeatLayer render_cam(const MaskGrid& cam, std::size_t targetWidth, std::size_t targetHeight,
                     const ColorScale& scale);

/// Gradient color at normalized ellipse radius r in [0, 1]: red at 0, blue
/// at 1, linear in RGB.
Rgb ellipse_color(double r) noexcept;

/// Radial gradient ellipse inscribed in the box, sampled at integer pixel
/// coordinates. Inside (r <= 1): ellipse_color(r) with alpha
/// round(255 * confidence * (1 - r)). Outside: {0,0,0,0}. Pixels outside the
/// image are clipped. Degenerate boxes yield a transparent layer.
HeatLayer render_box_ellipse(const ScoredBox& box, std::size_t width, std::size_t height);

/// Source-over compositing of the layers, first to last, onto a transparent
/// canvas. Where the composite alpha is 0 the source color is carried
/// through. Throws ValidationError on a dimension mismatch or empty input.
HeatLayer overlay_layers(std::span<const HeatLayer> layers);

/// Source-over of one pixel onto another.
Rgba source_over(const Rgba& src, const Rgba& dst) noexcept;

/// Per-channel 5x5 median with edge replication.
HeatLayer median_blur5(const HeatLayer& layer);

inline constexpr std::size_t kMedianKernelSize = 5;

/// median_blur5(overlay_layers(...)) in finding order.
HeatLayer unify_heatmaps(const FindingMap<HeatLayer>& perFinding);

/// Heat layers for one study at the size of its pneumothorax mask. The
/// opacity layer is the upsampled class activation map when present and
/// transparent otherwise; the fracture layer overlays one ellipse per box in
/// list order.
FindingMap<HeatLayer> study_layers(const StudyOutputs& outputs, const ColorScale& scale);

}  // namespace trx
