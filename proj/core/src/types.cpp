#include "trx/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "trx/error.hpp"

namespace trx {

std::string_view slug(FindingKind kind) noexcept {
  switch (kind) {
    case FindingKind::Pneumothorax:
      return "pneumothorax";
    case FindingKind::PleuralEffusion:
      return "pleural_effusion";
    case FindingKind::LungOpacity:
      return "lung_opacity";
    case FindingKind::Fracture:
      return "fracture";
  }
  return "";
}

std::string_view display_name(FindingKind kind) noexcept {
  switch (kind) {
    case FindingKind::Pneumothorax:
      return "Pneumothorax";
    case FindingKind::PleuralEffusion:
      return "Pleural Effusion";
    case FindingKind::LungOpacity:
      return "Lung Opacity";
    case FindingKind::Fracture:
      return "Fracture";
  }
  return "";
}

std::optional<FindingKind> parse_finding(std::string_view text) {
  std::string norm;
  for (char c : text) {
    if (c == ' ' || c == '-') c = '_';
    norm.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  for (FindingKind kind : kAllFindings) {
    if (norm == slug(kind)) return kind;
  }
  if (norm == "pleuraleffusion") return FindingKind::PleuralEffusion;
  if (norm == "lungopacity") return FindingKind::LungOpacity;
  return std::nullopt;
}

std::string_view to_string(LabelState state) noexcept {
  switch (state) {
    case LabelState::ConfirmedPositive:
      return "positive";
    case LabelState::ConfirmedNegative:
      return "negative";
    case LabelState::Uncertain:
      return "uncertain";
    case LabelState::Empty:
      return "empty";
  }
  return "";
}

MaskGrid::MaskGrid(std::size_t width, std::size_t height, std::vector<float> cells)
    : width_(width), height_(height), cells_(std::move(cells)) {
  if (width_ == 0 || height_ == 0) throw ValidationError("mask grid dimensions must be positive");
  if (cells_.size() != width_ * height_) {
    throw ValidationError("mask grid has " + std::to_string(cells_.size()) + " cells, expected " +
                          std::to_string(width_ * height_));
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const float v = cells_[i];
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw ValidationError("mask value out of range at cell " + std::to_string(i) + ": " +
                            std::to_string(v));
    }
  }
}

MaskGrid MaskGrid::zeros(std::size_t width, std::size_t height) {
  return MaskGrid(width, height, std::vector<float>(width * height, 0.0f));
}

SoftmaxPair::SoftmaxPair(double negative, double positive)
    : negative_(negative), positive_(positive) {
  if (!(negative >= 0.0 && negative <= 1.0) || !(positive >= 0.0 && positive <= 1.0)) {
    throw ValidationError("softmax value out of range");
  }
  if (std::abs(negative + positive - 1.0) > kSumTolerance) {
    throw ValidationError("softmax pair does not sum to 1");
  }
}

BoxList::BoxList(std::vector<ScoredBox> boxes) : boxes_(std::move(boxes)) {
  for (std::size_t i = 0; i < boxes_.size(); ++i) {
    const ScoredBox& b = boxes_[i];
    const bool finite = std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) &&
                        std::isfinite(b.y2);
    if (!finite || !(b.x1 < b.x2) || !(b.y1 < b.y2)) {
      throw ValidationError("box " + std::to_string(i) + " has invalid coordinates");
    }
    if (!(b.confidence >= 0.0 && b.confidence <= 1.0)) {
      throw ValidationError("box " + std::to_string(i) + " confidence out of range");
    }
  }
}

StudyOutputs::StudyOutputs(std::string studyId, FindingMap<RawOutput> perFinding,
                           std::optional<MaskGrid> opacityCam)
    : studyId_(std::move(studyId)),
      perFinding_(std::move(perFinding)),
      opacityCam_(std::move(opacityCam)) {
  if (studyId_.empty()) throw ValidationError("study id must not be empty");
  for (FindingKind kind : kAllFindings) {
    if (kind_of(perFinding_[kind]) != expected_kind(kind)) {
      throw ValidationError("study " + studyId_ + ": wrong output kind for " +
                            std::string(slug(kind)));
    }
  }
}

const MaskGrid& StudyOutputs::mask(FindingKind kind) const {
  if (expected_kind(kind) != OutputKind::Mask) {
    throw ValidationError(std::string(slug(kind)) + " has no mask output");
  }
  return std::get<MaskGrid>(perFinding_[kind]);
}

ThresholdConfig::ThresholdConfig(FindingMap<double> cutpoints) : cutpoints_(cutpoints) {
  for (FindingKind kind : kAllFindings) {
    if (!std::isfinite(cutpoints_[kind])) {
      throw ValidationError("cutpoint for " + std::string(slug(kind)) + " is not finite");
    }
  }
  const double opacity = cutpoints_[FindingKind::LungOpacity];
  if (!(opacity > 0.0 && opacity < 1.0)) {
    throw ValidationError("softmax cutpoint must lie in (0, 1)");
  }
}

ThresholdConfig default_paper_thresholds() {
  return ThresholdConfig(FindingMap<double>(/*pneumothorax=*/144.43, /*pleuralEffusion=*/3440.5,
                                            /*lungOpacity=*/0.98, /*fracture=*/0.15));
}

bool TriageResult::consistent() const noexcept {
  const bool any = std::any_of(flags.begin(), flags.end(), [](bool f) { return f; });
  return any == abnormal;
}

}  // namespace trx
