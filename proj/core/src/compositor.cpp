#include "trx/compositor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "trx/error.hpp"

namespace trx {

namespace {

std::uint8_t to_byte(double v) noexcept {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

struct RampStop {
  double at;
  double r, g, b;
};

constexpr std::array<RampStop, 5> kRamp = {{
    {0.00, 0, 0, 255},
    {0.25, 0, 255, 255},
    {0.50, 0, 255, 0},
    {0.75, 255, 255, 0},
    {1.00, 255, 0, 0},
}};

}  // namespace

HeatLayer::HeatLayer(std::size_t width, std::size_t height)
    : HeatLayer(width, height, std::vector<Rgba>(width * height)) {}

HeatLayer::HeatLayer(std::size_t width, std::size_t height, std::vector<Rgba> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width_ == 0 || height_ == 0) throw ValidationError("heat layer dimensions must be positive");
  if (pixels_.size() != width_ * height_) throw ValidationError("heat layer pixel count mismatch");
}

bool HeatLayer::fully_transparent() const noexcept {
  return std::all_of(pixels_.begin(), pixels_.end(), [](const Rgba& p) { return p.a == 0; });
}

ColorScale::ColorScale(double activationFloor) : floor_(activationFloor) {
  if (!(activationFloor >= 0.0 && activationFloor <= 1.0)) {
    throw ValidationError("activation floor must lie in [0, 1]");
  }
}

Rgb ColorScale::map(double activation) const noexcept {
  const double t = std::clamp(activation, 0.0, 1.0);
  std::size_t k = 1;
  while (k + 1 < kRamp.size() && t > kRamp[k].at) ++k;
  const RampStop& lo = kRamp[k - 1];
  const RampStop& hi = kRamp[k];
  const double w = (t - lo.at) / (hi.at - lo.at);
  return {to_byte(lo.r + w * (hi.r - lo.r)), to_byte(lo.g + w * (hi.g - lo.g)),
          to_byte(lo.b + w * (hi.b - lo.b))};
}

Rgba ColorScale::shade(double activation) const noexcept {
  if (activation <= floor_) return {};
  const Rgb c = map(activation);
  return {c.r, c.g, c.b, to_byte(255.0 * activation)};
}

HeatLayer colorize_mask(const MaskGrid& grid, const ColorScale& scale) {
  HeatLayer layer(grid.width(), grid.height());
  const auto& cells = grid.cells();
  auto& px = layer.pixels();
  for (std::size_t i = 0; i < cells.size(); ++i) px[i] = scale.shade(cells[i]);
  return layer;
}

MaskGrid upsample_bilinear(const MaskGrid& grid, std::size_t targetWidth, std::size_t targetHeight) {
  if (targetWidth == 0 || targetHeight == 0) throw ValidationError("target dimensions must be positive");
  const std::size_t sw = grid.width();
  const std::size_t sh = grid.height();
  const double sx = targetWidth > 1 ? static_cast<double>(sw - 1) / static_cast<double>(targetWidth - 1) : 0.0;
  const double sy = targetHeight > 1 ? static_cast<double>(sh - 1) / static_cast<double>(targetHeight - 1) : 0.0;

  std::vector<float> out(targetWidth * targetHeight);
  for (std::size_t y = 0; y < targetHeight; ++y) {
    const double fy = static_cast<double>(y) * sy;
    const auto y0 = std::min(static_cast<std::size_t>(fy), sh - 1);
    const std::size_t y1 = std::min(y0 + 1, sh - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < targetWidth; ++x) {
      const double fx = static_cast<double>(x) * sx;
      const auto x0 = std::min(static_cast<std::size_t>(fx), sw - 1);
      const std::size_t x1 = std::min(x0 + 1, sw - 1);
      const double wx = fx - static_cast<double>(x0);
      const double top = (1.0 - wx) * grid.at(x0, y0) + wx * grid.at(x1, y0);
      const double bottom = (1.0 - wx) * grid.at(x0, y1) + wx * grid.at(x1, y1);
      const double v = (1.0 - wy) * top + wy * bottom;
      out[y * targetWidth + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return MaskGrid(targetWidth, targetHeight, std::move(out));
}

HeatLayer render_cam(const MaskGrid& cam, std::size_t targetWidth, std::size_t targetHeight,
                     const ColorScale& scale) {
  if (targetWidth < cam.width() || targetHeight < cam.height()) {
    throw ValidationError("CAM target size is smaller than the activation map");
  }
  return colorize_mask(upsample_bilinear(cam, targetWidth, targetHeight), scale);
}

Rgb ellipse_color(double r) noexcept {
  const double t = std::clamp(r, 0.0, 1.0);
  return {to_byte(255.0 * (1.0 - t)), 0, to_byte(255.0 * t)};
}

HeatLayer render_box_ellipse(const ScoredBox& box, std::size_t width, std::size_t height) {
  HeatLayer layer(width, height);
  const double a = (box.x2 - box.x1) / 2.0;
  const double b = (box.y2 - box.y1) / 2.0;
  if (!(a > 0.0) || !(b > 0.0)) return layer;
  const double cx = (box.x1 + box.x2) / 2.0;
  const double cy = (box.y1 + box.y2) / 2.0;

  const auto clip = [](double v, std::size_t limit) {
    if (v < 0.0) return std::size_t{0};
    return std::min(static_cast<std::size_t>(v), limit);
  };
  const std::size_t xBegin = clip(std::ceil(box.x1), width);
  const std::size_t xEnd = clip(std::floor(box.x2) + 1.0, width);
  const std::size_t yBegin = clip(std::ceil(box.y1), height);
  const std::size_t yEnd = clip(std::floor(box.y2) + 1.0, height);

  for (std::size_t y = yBegin; y < yEnd; ++y) {
    const double dy = (static_cast<double>(y) - cy) / b;
    for (std::size_t x = xBegin; x < xEnd; ++x) {
      const double dx = (static_cast<double>(x) - cx) / a;
      const double r = std::sqrt(dx * dx + dy * dy);
      if (r > 1.0) continue;
      const Rgb c = ellipse_color(r);
      layer.at(x, y) = {c.r, c.g, c.b, to_byte(255.0 * box.confidence * (1.0 - r))};
    }
  }
  return layer;
}

Rgba source_over(const Rgba& src, const Rgba& dst) noexcept {
  if (src.a == 0) return dst;
  // Exact integer form: output alpha is ao / 255^2, channels are num / ao.
  const std::uint32_t sa = src.a;
  const std::uint32_t da = dst.a;
  const std::uint32_t ao = sa * 255 + da * (255 - sa);
  const auto rounded = [](std::uint32_t num, std::uint32_t den) {
    return static_cast<std::uint8_t>((2 * num + den) / (2 * den));
  };
  const auto channel = [&](std::uint32_t cs, std::uint32_t cd) {
    return rounded(cs * sa * 255 + cd * da * (255 - sa), ao);
  };
  return {channel(src.r, dst.r), channel(src.g, dst.g), channel(src.b, dst.b), rounded(ao, 255)};
}

HeatLayer overlay_layers(std::span<const HeatLayer> layers) {
  if (layers.empty()) throw ValidationError("nothing to overlay");
  const std::size_t w = layers.front().width();
  const std::size_t h = layers.front().height();
  for (const HeatLayer& l : layers) {
    if (l.width() != w || l.height() != h) {
      throw ValidationError("heat layer size mismatch: " + std::to_string(l.width()) + "x" +
                            std::to_string(l.height()) + " vs " + std::to_string(w) + "x" +
                            std::to_string(h));
    }
  }
  HeatLayer canvas(w, h);
  auto& out = canvas.pixels();
  for (const HeatLayer& l : layers) {
    const auto& src = l.pixels();
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = src[i].a == 0 && out[i].a == 0 ? src[i] : source_over(src[i], out[i]);
    }
  }
  return canvas;
}

HeatLayer median_blur5(const HeatLayer& layer) {
  // Sliding 256-bin histogram per channel along each row. Each step swaps
  // one column of five samples and nudges the tracked median.
  constexpr std::ptrdiff_t radius = kMedianKernelSize / 2;
  constexpr int rank = static_cast<int>(kMedianKernelSize * kMedianKernelSize / 2);
  const auto w = static_cast<std::ptrdiff_t>(layer.width());
  const auto h = static_cast<std::ptrdiff_t>(layer.height());
  HeatLayer out(layer.width(), layer.height());
  const auto& src = layer.pixels();
  const auto clampX = [w](std::ptrdiff_t x) { return std::clamp(x, std::ptrdiff_t{0}, w - 1); };

  struct Channel {
    std::array<int, 256> hist{};
    int median = 0;
    int below = 0;  // samples strictly less than median
  };
  std::array<Channel, 4> ch{};
  std::array<const Rgba*, kMedianKernelSize> rows{};

  const auto column = [&](std::ptrdiff_t x, int sign) {
    for (const Rgba* row : rows) {
      const Rgba& p = row[x];
      const std::array<std::uint8_t, 4> v = {p.r, p.g, p.b, p.a};
      for (std::size_t c = 0; c < 4; ++c) {
        ch[c].hist[v[c]] += sign;
        if (v[c] < ch[c].median) ch[c].below += sign;
      }
    }
  };

  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(kMedianKernelSize); ++k) {
      const std::ptrdiff_t yy = std::clamp(y + k - radius, std::ptrdiff_t{0}, h - 1);
      rows[static_cast<std::size_t>(k)] = src.data() + yy * w;
    }
    for (Channel& c : ch) c = Channel{};
    for (std::ptrdiff_t dx = -radius; dx <= radius; ++dx) column(clampX(dx), 1);

    for (std::ptrdiff_t x = 0; x < w; ++x) {
      if (x > 0) {
        column(clampX(x - radius - 1), -1);
        column(clampX(x + radius), 1);
      }
      std::array<std::uint8_t, 4> med{};
      for (std::size_t c = 0; c < 4; ++c) {
        Channel& s = ch[c];
        while (s.below > rank) s.below -= s.hist[static_cast<std::size_t>(--s.median)];
        while (s.below + s.hist[static_cast<std::size_t>(s.median)] <= rank) {
          s.below += s.hist[static_cast<std::size_t>(s.median++)];
        }
        med[c] = static_cast<std::uint8_t>(s.median);
      }
      out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = {med[0], med[1], med[2], med[3]};
    }
  }
  return out;
}

HeatLayer unify_heatmaps(const FindingMap<HeatLayer>& perFinding) {
  const std::vector<HeatLayer> ordered(perFinding.begin(), perFinding.end());
  return median_blur5(overlay_layers(ordered));
}

FindingMap<HeatLayer> study_layers(const StudyOutputs& outputs, const ColorScale& scale) {
  const MaskGrid& ptx = outputs.mask(FindingKind::Pneumothorax);
  const MaskGrid& eff = outputs.mask(FindingKind::PleuralEffusion);
  const std::size_t w = ptx.width();
  const std::size_t h = ptx.height();

  HeatLayer opacity(w, h);
  if (outputs.opacity_cam()) opacity = render_cam(*outputs.opacity_cam(), w, h, scale);

  HeatLayer fracture(w, h);
  for (const ScoredBox& box : outputs.boxes().boxes()) {
    const std::array<HeatLayer, 2> pair = {fracture, render_box_ellipse(box, w, h)};
    fracture = overlay_layers(pair);
  }
  return FindingMap<HeatLayer>(colorize_mask(ptx, scale), colorize_mask(eff, scale),
                               std::move(opacity), std::move(fracture));
}

}  // namespace trx
