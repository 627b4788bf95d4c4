#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trx/types.hpp"

namespace trx {

enum class ViewPosition : std::uint8_t { PA, AP, Lateral, Unknown };
enum class Sex : std::uint8_t { Female, Male, Unknown };

std::string_view to_string(ViewPosition view) noexcept;
std::string_view to_string(Sex sex) noexcept;

/// One study's ground truth plus patient metadata. Categories are keyed by
/// their CheXpert column names ("Pneumonia", "Support Devices", ...).
struct LabelRecord {
  std::string studyId;
  std::string patientId;
  ViewPosition view = ViewPosition::Unknown;
  std::map<std::string, LabelState> categories;
  Sex sex = Sex::Unknown;
  int age = 0;

  /// Missing categories read as Empty.
  LabelState state(std::string_view category) const;

  bool operator==(const LabelRecord&) const = default;
};

inline constexpr std::string_view kNoFindingCategory = "No Finding";
inline constexpr std::string_view kSupportDevicesCategory = "Support Devices";
inline constexpr std::string_view kOpacityCategory = "Opacity";

/// Source categories unified into the general opacity label.
inline constexpr std::array<std::string_view, 5> kOpacitySources = {
    "Atelectasis", "Edema", "Consolidation", "Pneumonia", "Lung Opacity"};

/// Positive if any source is positive, else uncertain if any is uncertain,
/// else negative.
LabelState merge_opacity_label(const LabelRecord& record);

/// Soft training target: positive 0.99, negative/empty 0.01, uncertain 0.6.
double encode_label_value(LabelState state) noexcept;

struct FilterRules {
  bool frontalOnly = false;
  bool excludeAP = false;
  std::vector<std::string> excludeCategoriesConfirmed;
  /// Optional inclusion predicate; records failing it are excluded.
  std::function<bool(const LabelRecord&)> requiredInclusion;

  /// Frontal PA studies without confirmed support devices, kept only when
  /// "No Finding" or the merged opacity label is positive or uncertain.
  static FilterRules opacity_training_set();
};

struct SelectionDecision {
  bool keep = true;
  std::string reason;  // empty when kept

  static SelectionDecision Keep() { return {}; }
  static SelectionDecision Exclude(std::string why) { return {false, std::move(why)}; }
};

/// Rules are checked in a fixed order: view, AP, excluded categories (in the
/// order listed), inclusion predicate. The first failing rule is reported.
SelectionDecision apply_selection_filters(const LabelRecord& record, const FilterRules& rules);

inline constexpr std::string_view kInclusionFailedReason = "inclusion criteria not met";

/// width x height bitmap addressed by (column, row).
class BinaryMask {
 public:
  BinaryMask(std::size_t width, std::size_t height);
  BinaryMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> bits);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  /// Column-major storage: linear index = col * height + row.
  bool at(std::size_t col, std::size_t row) const noexcept { return bits_[col * height_ + row] != 0; }
  void set(std::size_t col, std::size_t row, bool value) noexcept {
    bits_[col * height_ + row] = value ? 1 : 0;
  }
  bool linear(std::size_t index) const noexcept { return bits_[index] != 0; }
  std::size_t count() const noexcept;

  bool operator==(const BinaryMask&) const = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> bits_;
};

/// Decodes whitespace-separated "start length" pairs. Positions are 1-based
/// and column-major: index i is column (i-1)/height, row (i-1)%height.
/// Throws ValidationError on odd token count, non-integers, non-positive
/// starts or lengths, runs past the grid, or overlapping runs.
BinaryMask rle_decode(std::string_view rle, std::size_t width, std::size_t height);

/// Canonical encoding: maximal runs in ascending order; all-false is "".
std::string rle_encode(const BinaryMask& mask);

struct SplitManifest {
  std::set<std::string> trainIds;
  std::set<std::string> tuneIds;
  std::uint64_t seed = 0;

  bool operator==(const SplitManifest&) const = default;
};

inline constexpr double kDefaultTuneFraction = 0.2;

/// Patient-level stratified split. A patient is positive when any of their
/// studies satisfies positiveOf. Within each stratum, patients are sorted by
/// id, shuffled with Rng::substream(seed, stratum) (stratum 0 = positive,
/// 1 = negative), and the first ceil(size * tuneFraction) go to tune.
/// Throws ValidationError for tuneFraction outside (0, 1), empty input,
/// duplicate study ids or empty patient ids.
SplitManifest patient_level_split(std::span<const LabelRecord> records,
                                  const std::function<bool(const LabelRecord&)>& positiveOf,
                                  double tuneFraction, std::uint64_t seed);

/// Number of stratum members assigned to tune.
std::size_t tune_quota(std::size_t stratumSize, double tuneFraction);

}  // namespace trx
