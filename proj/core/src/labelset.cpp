#include "trx/labelset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "trx/error.hpp"
#include "trx/rng.hpp"

namespace trx {

std::string_view to_string(ViewPosition view) noexcept {
  switch (view) {
    case ViewPosition::PA:
      return "PA";
    case ViewPosition::AP:
      return "AP";
    case ViewPosition::Lateral:
      return "Lateral";
    case ViewPosition::Unknown:
      return "Unknown";
  }
  return "Unknown";
}

std::string_view to_string(Sex sex) noexcept {
  switch (sex) {
    case Sex::Female:
      return "Female";
    case Sex::Male:
      return "Male";
    case Sex::Unknown:
      return "Unknown";
  }
  return "Unknown";
}

LabelState LabelRecord::state(std::string_view category) const {
  const auto it = categories.find(std::string(category));
  return it == categories.end() ? LabelState::Empty : it->second;
}

LabelState merge_opacity_label(const LabelRecord& record) {
  bool uncertain = false;
  for (std::string_view source : kOpacitySources) {
    const LabelState s = record.state(source);
    if (s == LabelState::ConfirmedPositive) return LabelState::ConfirmedPositive;
    uncertain = uncertain || s == LabelState::Uncertain;
  }
  return uncertain ? LabelState::Uncertain : LabelState::ConfirmedNegative;
}

double encode_label_value(LabelState state) noexcept {
  switch (state) {
    case LabelState::ConfirmedPositive:
      return 0.99;
    case LabelState::Uncertain:
      return 0.6;
    case LabelState::ConfirmedNegative:
    case LabelState::Empty:
      return 0.01;
  }
  return 0.01;
}

FilterRules FilterRules::opacity_training_set() {
  FilterRules rules;
  rules.frontalOnly = true;
  rules.excludeAP = true;
  rules.excludeCategoriesConfirmed = {std::string(kSupportDevicesCategory)};
  rules.requiredInclusion = [](const LabelRecord& r) {
    const auto positiveOrUncertain = [](LabelState s) {
      return s == LabelState::ConfirmedPositive || s == LabelState::Uncertain;
    };
    return positiveOrUncertain(r.state(kNoFindingCategory)) ||
           positiveOrUncertain(merge_opacity_label(r));
  };
  return rules;
}

SelectionDecision apply_selection_filters(const LabelRecord& record, const FilterRules& rules) {
  if (rules.frontalOnly) {
    if (record.view == ViewPosition::Lateral) return SelectionDecision::Exclude("lateral");
    if (record.view == ViewPosition::Unknown) return SelectionDecision::Exclude("unknown view");
  }
  if (rules.excludeAP && record.view == ViewPosition::AP) {
    return SelectionDecision::Exclude("AP");
  }
  for (const std::string& category : rules.excludeCategoriesConfirmed) {
    if (record.state(category) == LabelState::ConfirmedPositive) {
      return SelectionDecision::Exclude(category);
    }
  }
  if (rules.requiredInclusion && !rules.requiredInclusion(record)) {
    return SelectionDecision::Exclude(std::string(kInclusionFailedReason));
  }
  return SelectionDecision::Keep();
}

BinaryMask::BinaryMask(std::size_t width, std::size_t height)
    : BinaryMask(width, height, std::vector<std::uint8_t>(width * height, 0)) {}

BinaryMask::BinaryMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (width_ == 0 || height_ == 0) throw ValidationError("mask dimensions must be positive");
  if (bits_.size() != width_ * height_) throw ValidationError("mask bit count mismatch");
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::vector<std::string_view> split_tokens(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

std::string pair_label(std::size_t pairIndex, std::string_view start, std::string_view length) {
  return "run " + std::to_string(pairIndex) + " (" + std::string(start) + " " +
         std::string(length) + ")";
}

}  // namespace

BinaryMask rle_decode(std::string_view rle, std::size_t width, std::size_t height) {
  BinaryMask mask(width, height);
  const auto tokens = split_tokens(rle);
  if (tokens.size() % 2 != 0) {
    throw ValidationError("RLE has an odd number of tokens (" + std::to_string(tokens.size()) + ")");
  }
  const std::uint64_t total = static_cast<std::uint64_t>(width) * height;
  std::vector<std::uint8_t> bits(total, 0);
  for (std::size_t p = 0; p < tokens.size() / 2; ++p) {
    const std::string_view startTok = tokens[2 * p];
    const std::string_view lengthTok = tokens[2 * p + 1];
    std::int64_t start = 0;
    std::int64_t length = 0;
    const auto r1 = std::from_chars(startTok.data(), startTok.data() + startTok.size(), start);
    const auto r2 = std::from_chars(lengthTok.data(), lengthTok.data() + lengthTok.size(), length);
    if (r1.ec != std::errc{} || r1.ptr != startTok.data() + startTok.size() ||
        r2.ec != std::errc{} || r2.ptr != lengthTok.data() + lengthTok.size()) {
      throw ValidationError("RLE " + pair_label(p, startTok, lengthTok) + " is not an integer pair");
    }
    if (start < 1 || length < 1) {
      throw ValidationError("RLE " + pair_label(p, startTok, lengthTok) +
                            " must have positive start and length");
    }
    const auto first = static_cast<std::uint64_t>(start);
    const auto len = static_cast<std::uint64_t>(length);
    if (len > total || first > total - len + 1) {
      throw ValidationError("RLE " + pair_label(p, startTok, lengthTok) + " exceeds the " +
                            std::to_string(width) + "x" + std::to_string(height) + " grid");
    }
    for (std::uint64_t i = first - 1; i < first - 1 + len; ++i) {
      if (bits[i]) {
        throw ValidationError("RLE " + pair_label(p, startTok, lengthTok) + " overlaps an earlier run");
      }
      bits[i] = 1;
    }
  }
  return BinaryMask(width, height, std::move(bits));
}

std::string rle_encode(const BinaryMask& mask) {
  std::string out;
  const std::size_t n = mask.size();
  std::size_t i = 0;
  while (i < n) {
    if (!mask.linear(i)) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < n && mask.linear(i)) ++i;
    if (!out.empty()) out.push_back(' ');
    out += std::to_string(start + 1);
    out.push_back(' ');
    out += std::to_string(i - start);
  }
  return out;
}

std::size_t tune_quota(std::size_t stratumSize, double tuneFraction) {
  // The epsilon keeps products such as 15 * 0.2 from rounding up to 4.
  const double raw = static_cast<double>(stratumSize) * tuneFraction;
  return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

SplitManifest patient_level_split(std::span<const LabelRecord> records,
                                  const std::function<bool(const LabelRecord&)>& positiveOf,
                                  double tuneFraction, std::uint64_t seed) {
  if (!(tuneFraction > 0.0 && tuneFraction < 1.0)) {
    throw ValidationError("tune fraction must lie in (0, 1)");
  }
  if (records.empty()) throw ValidationError("cannot split an empty dataset");

  struct Patient {
    std::vector<std::string> studies;
    bool positive = false;
  };
  std::map<std::string, Patient> patients;
  std::set<std::string> seen;
  for (const LabelRecord& r : records) {
    if (r.patientId.empty()) throw ValidationError("study " + r.studyId + " has no patient id");
    if (!seen.insert(r.studyId).second) throw ValidationError("duplicate study id " + r.studyId);
    Patient& p = patients[r.patientId];
    p.studies.push_back(r.studyId);
    p.positive = p.positive || positiveOf(r);
  }

  // [0] positive, [1] negative; std::map iteration keeps patients sorted by id.
  std::array<std::vector<const Patient*>, 2> strata;
  for (const auto& entry : patients) strata[entry.second.positive ? 0 : 1].push_back(&entry.second);

  SplitManifest manifest;
  manifest.seed = seed;
  for (std::size_t s = 0; s < 2; ++s) {
    std::vector<std::size_t> order(strata[s].size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::substream(seed, s);
    rng.shuffle(std::span<std::size_t>(order));
    const std::size_t quota = tune_quota(order.size(), tuneFraction);
    for (std::size_t k = 0; k < order.size(); ++k) {
      auto& side = k < quota ? manifest.tuneIds : manifest.trainIds;
      for (const std::string& study : strata[s][order[k]]->studies) side.insert(study);
    }
  }
  return manifest;
}

}  // namespace trx
