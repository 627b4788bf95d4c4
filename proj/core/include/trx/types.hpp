#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace trx {

/// The four radiological findings. Declaration order is the canonical order
/// used for iteration, file layout and heatmap compositing.
enum class FindingKind : std::uint8_t { Pneumothorax, PleuralEffusion, LungOpacity, Fracture };

inline constexpr std::array<FindingKind, 4> kAllFindings = {
    FindingKind::Pneumothorax, FindingKind::PleuralEffusion, FindingKind::LungOpacity,
    FindingKind::Fracture};

/// snake_case identifier used in file names and JSON keys.
std::string_view slug(FindingKind kind) noexcept;
/// Column name in label CSVs (CheXpert spelling).
std::string_view display_name(FindingKind kind) noexcept;
/// Accepts either spelling, case-insensitive; "pleural-effusion" also works.
std::optional<FindingKind> parse_finding(std::string_view text);

/// Total map from FindingKind to T.
template <class T>
class FindingMap {
 public:
  FindingMap() = default;
  explicit FindingMap(std::array<T, 4> values) : values_(std::move(values)) {}
  FindingMap(T pneumothorax, T pleuralEffusion, T lungOpacity, T fracture)
      : values_{std::move(pneumothorax), std::move(pleuralEffusion), std::move(lungOpacity),
                std::move(fracture)} {}

  T& operator[](FindingKind kind) { return values_[static_cast<std::size_t>(kind)]; }
  const T& operator[](FindingKind kind) const { return values_[static_cast<std::size_t>(kind)]; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool operator==(const FindingMap&) const = default;

 private:
  std::array<T, 4> values_{};
};

/// Ground-truth state of one label category.
enum class LabelState : std::uint8_t { ConfirmedPositive, ConfirmedNegative, Uncertain, Empty };

std::string_view to_string(LabelState state) noexcept;

/// Row-major grid of unit-interval scores (per-pixel sigmoid outputs, or a
/// class activation map). Cells are 32-bit floats so that the on-disk format
/// round-trips bit-exactly.
class MaskGrid {
 public:
  /// Throws ValidationError on zero dimensions, size mismatch, or any cell
  /// outside [0, 1] (NaN included).
  MaskGrid(std::size_t width, std::size_t height, std::vector<float> cells);
  static MaskGrid zeros(std::size_t width, std::size_t height);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  float at(std::size_t x, std::size_t y) const noexcept { return cells_[y * width_ + x]; }
  const std::vector<float>& cells() const noexcept { return cells_; }

  bool operator==(const MaskGrid&) const = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<float> cells_;
};

/// Two-class softmax output (negative class, positive class).
class SoftmaxPair {
 public:
  static constexpr double kSumTolerance = 1e-6;

  /// Throws ValidationError unless both are in [0, 1] and sum to 1 within
  /// kSumTolerance.
  SoftmaxPair(double negative, double positive);

  double negative() const noexcept { return negative_; }
  double positive() const noexcept { return positive_; }

  bool operator==(const SoftmaxPair&) const = default;

 private:
  double negative_;
  double positive_;
};

struct ScoredBox {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;
  double confidence = 0;

  bool operator==(const ScoredBox&) const = default;
};

/// Detector output. May be empty.
class BoxList {
 public:
  BoxList() = default;
  /// Throws ValidationError unless x1 < x2, y1 < y2 and confidence in [0, 1]
  /// for every box.
  explicit BoxList(std::vector<ScoredBox> boxes);

  const std::vector<ScoredBox>& boxes() const noexcept { return boxes_; }
  bool empty() const noexcept { return boxes_.empty(); }

  bool operator==(const BoxList&) const = default;

 private:
  std::vector<ScoredBox> boxes_;
};

using RawOutput = std::variant<MaskGrid, SoftmaxPair, BoxList>;

enum class OutputKind : std::uint8_t { Mask, Softmax, Boxes };

/// Output kind each finding's model produces.
constexpr OutputKind expected_kind(FindingKind kind) noexcept {
  switch (kind) {
    case FindingKind::Pneumothorax:
    case FindingKind::PleuralEffusion:
      return OutputKind::Mask;
    case FindingKind::LungOpacity:
      return OutputKind::Softmax;
    case FindingKind::Fracture:
      return OutputKind::Boxes;
  }
  return OutputKind::Mask;
}

constexpr OutputKind kind_of(const RawOutput& output) noexcept {
  return static_cast<OutputKind>(output.index());
}

/// All raw model outputs for one study.
///
/// The lung-opacity classifier carries an optional class activation map; it
/// only feeds heatmap rendering.
class StudyOutputs {
 public:
  /// Throws ValidationError on an empty id or when a finding holds the wrong
  /// output kind.
  StudyOutputs(std::string studyId, FindingMap<RawOutput> perFinding,
               std::optional<MaskGrid> opacityCam = std::nullopt);

  const std::string& study_id() const noexcept { return studyId_; }
  const RawOutput& output(FindingKind kind) const noexcept { return perFinding_[kind]; }
  const FindingMap<RawOutput>& outputs() const noexcept { return perFinding_; }
  const std::optional<MaskGrid>& opacity_cam() const noexcept { return opacityCam_; }

  const MaskGrid& mask(FindingKind kind) const;  // Pneumothorax / PleuralEffusion
  const SoftmaxPair& softmax() const { return std::get<SoftmaxPair>(perFinding_[FindingKind::LungOpacity]); }
  const BoxList& boxes() const { return std::get<BoxList>(perFinding_[FindingKind::Fracture]); }

  bool operator==(const StudyOutputs&) const = default;

 private:
  std::string studyId_;
  FindingMap<RawOutput> perFinding_;
  std::optional<MaskGrid> opacityCam_;
};

/// Per-finding cutpoints that binarize raw scores.
class ThresholdConfig {
 public:
  /// Throws ValidationError if any cutpoint is non-finite or the softmax
  /// cutpoint is outside (0, 1).
  explicit ThresholdConfig(FindingMap<double> cutpoints);

  double cutpoint(FindingKind kind) const noexcept { return cutpoints_[kind]; }
  const FindingMap<double>& cutpoints() const noexcept { return cutpoints_; }

  bool operator==(const ThresholdConfig&) const = default;

 private:
  FindingMap<double> cutpoints_;
};

/// The four published operating points.
ThresholdConfig default_paper_thresholds();

/// One scored case with its binary ground truth.
struct ScoredCase {
  double score = 0;
  bool label = false;
};

/// Per-study verdict. abnormal is the OR of the four flags.
struct TriageResult {
  std::string studyId;
  FindingMap<double> scores;
  FindingMap<bool> flags;
  bool abnormal = false;

  bool consistent() const noexcept;
  bool operator==(const TriageResult&) const = default;
};

}  // namespace trx
