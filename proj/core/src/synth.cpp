#include "trx/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>
#include "trx/error.hpp"
#include "trx/rng.hpp"

namespace trx {

namespace {

using Json = nlohmann::ordered_json;

double capacity_of(FindingKind kind, const CohortSpec& spec) {
  return expected_kind(kind) == OutputKind::Mask ? static_cast<double>(spec.width * spec.height) : 1.0;
}

std::string study_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%06zu", index);
  return buf;
}

std::string patient_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%06zu", index);
  return buf;
}

// Streams of the master seed. Studies use 1 + index.
constexpr std::uint64_t kPatientStream = 0;

ScoredBox random_box(Rng& rng, std::size_t width, std::size_t height, double confidence) {
  const double w = std::max(2.0, rng.uniform(0.1, 0.4) * static_cast<double>(width));
  const double h = std::max(2.0, rng.uniform(0.1, 0.4) * static_cast<double>(height));
  const double x1 = rng.uniform(0.0, static_cast<double>(width) - w);
  const double y1 = rng.uniform(0.0, static_cast<double>(height) - h);
  return {x1, y1, x1 + w, y1 + h, confidence};
}

MaskGrid gaussian_cam(Rng& rng, std::size_t size, double peak) {
  const double cx = rng.uniform(0.0, static_cast<double>(size - 1));
  const double cy = rng.uniform(0.0, static_cast<double>(size - 1));
  const double sigma = std::max(1.0, static_cast<double>(size) / 4.0);
  std::vector<float> cells(size * size);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double v = peak * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      cells[y * size + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return MaskGrid(size, size, std::move(cells));
}

}  // namespace

void CohortSpec::validate() const {
  if (nStudies < 1) throw ValidationError("cohort needs at least one study");
  for (FindingKind kind : kAllFindings) {
    if (!(prevalence[kind] >= 0.0 && prevalence[kind] <= 1.0)) {
      throw ValidationError("prevalence of " + std::string(slug(kind)) + " outside [0, 1]");
    }
  }
  if (!(signalStrength >= 0.0 && signalStrength <= 1.0)) {
    throw ValidationError("signal strength outside [0, 1]");
  }
  if (width < 1 || height < 1) throw ValidationError("image dimensions must be positive");
  if (camSize < 1 || camSize > std::min(width, height)) {
    throw ValidationError("CAM size must lie in [1, min(width, height)]");
  }
  for (FindingKind kind : kAllFindings) score_bands(cutpoints[kind], capacity_of(kind, *this));
}

ScoreBands score_bands(double cutpoint, double capacity) {
  if (!(cutpoint > 0.0 && cutpoint < capacity)) {
    throw ValidationError("cutpoint " + std::to_string(cutpoint) + " outside (0, " + std::to_string(capacity) +
                          ")");
  }
  const double room = std::min(cutpoint, capacity - cutpoint);
  const double margin = 0.05 * room;
  const double width = 0.9 * room;
  return {cutpoint - margin - width, cutpoint - margin, cutpoint + margin, cutpoint + margin + width};
}

MaskGrid synth_blob_mask(std::size_t width, std::size_t height, double target, std::uint64_t seed) {
  const std::size_t cells = width * height;
  if (!(target >= 0.0 && target <= static_cast<double>(cells))) {
    throw ValidationError("mask target outside [0, width * height]");
  }
  Rng rng(seed);
  const double cx = rng.uniform(0.0, static_cast<double>(width));
  const double cy = rng.uniform(0.0, static_cast<double>(height));
  const auto full = static_cast<std::size_t>(std::floor(target));
  const double frac = target - static_cast<double>(full);
  const std::size_t needed = std::min(cells, full + 1);

  std::vector<std::size_t> order(cells);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto dist2 = [&](std::size_t i) {
    const double dx = static_cast<double>(i % width) + 0.5 - cx;
    const double dy = static_cast<double>(i / width) + 0.5 - cy;
    return dx * dx + dy * dy;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(needed), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double da = dist2(a);
                      const double db = dist2(b);
                      return da < db || (da == db && a < b);
                    });
  std::vector<float> values(cells, 0.0f);
  for (std::size_t k = 0; k < full; ++k) values[order[k]] = 1.0f;
  if (full < cells) values[order[full]] = static_cast<float>(frac);
  return MaskGrid(width, height, std::move(values));
}

SyntheticCohort synth_cohort(const CohortSpec& spec) {
  spec.validate();
  FindingMap<ScoreBands> bands;
  for (FindingKind kind : kAllFindings) bands[kind] = score_bands(spec.cutpoints[kind], capacity_of(kind, spec));

  SyntheticCohort cohort;
  cohort.outputs.reserve(spec.nStudies);
  cohort.labels.reserve(spec.nStudies);

  Rng patients = Rng::substream(spec.seed, kPatientStream);
  std::size_t patientIndex = 0;
  std::size_t remainingForPatient = 0;
  Sex sex = Sex::Unknown;
  int age = 0;

  for (std::size_t i = 0; i < spec.nStudies; ++i) {
    if (remainingForPatient == 0) {
      remainingForPatient = 1 + static_cast<std::size_t>(patients.uniform_below(3));
      sex = patients.bernoulli(0.5) ? Sex::Female : Sex::Male;
      age = 18 + static_cast<int>(patients.uniform_below(73));
      ++patientIndex;
    }
    --remainingForPatient;

    Rng rng = Rng::substream(spec.seed, 1 + i);
    LabelRecord label;
    label.studyId = study_id(i);
    label.patientId = patient_id(patientIndex - 1);
    label.view = ViewPosition::PA;
    label.sex = sex;
    label.age = age;

    FindingMap<double> scores;
    for (FindingKind kind : kAllFindings) {
      const bool positive = rng.bernoulli(spec.prevalence[kind]);
      const bool informative = rng.bernoulli(spec.signalStrength);
      const bool high = informative ? positive : rng.bernoulli(0.5);
      const ScoreBands& b = bands[kind];
      scores[kind] = high ? rng.uniform(b.highMin, b.highMax) : rng.uniform(b.lowMin, b.lowMax);
      label.categories[std::string(display_name(kind))] =
          positive ? LabelState::ConfirmedPositive : LabelState::ConfirmedNegative;
    }

    const std::uint64_t maskSeed = rng.next();
    const std::uint64_t effusionSeed = rng.next();
    FindingMap<RawOutput> outputs(
        synth_blob_mask(spec.width, spec.height, scores[FindingKind::Pneumothorax], maskSeed),
        synth_blob_mask(spec.width, spec.height, scores[FindingKind::PleuralEffusion], effusionSeed),
        SoftmaxPair(1.0 - scores[FindingKind::LungOpacity], scores[FindingKind::LungOpacity]),
        BoxList({random_box(rng, spec.width, spec.height, scores[FindingKind::Fracture])}));
    MaskGrid cam = gaussian_cam(rng, spec.camSize, scores[FindingKind::LungOpacity]);
    cohort.outputs.emplace_back(label.studyId, std::move(outputs), std::move(cam));
    cohort.labels.push_back(std::move(label));
  }
  return cohort;
}

std::string cohort_spec_to_json(const CohortSpec& spec) {
  Json j;
  j["n_studies"] = spec.nStudies;
  Json prev = Json::object();
  for (FindingKind kind : kAllFindings) prev[std::string(slug(kind))] = spec.prevalence[kind];
  j["prevalence"] = prev;
  j["signal_strength"] = spec.signalStrength;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["cam_size"] = spec.camSize;
  j["seed"] = spec.seed;
  Json cuts = Json::object();
  for (FindingKind kind : kAllFindings) cuts[std::string(slug(kind))] = spec.cutpoints[kind];
  j["cutpoints"] = cuts;
  return j.dump(2) + "\n";
}

namespace {

void read_finding_map(const Json& value, FindingMap<double>& out, const char* key) {
  if (value.is_number()) {
    for (FindingKind kind : kAllFindings) out[kind] = value.get<double>();
    return;
  }
  if (!value.is_object()) throw ValidationError(std::string("cohort spec: '") + key + "' must be a number or object");
  for (const auto& [name, v] : value.items()) {
    const auto kind = parse_finding(name);
    if (!kind) throw ValidationError(std::string("cohort spec: unknown finding '") + name + "' in '" + key + "'");
    if (!v.is_number()) throw ValidationError(std::string("cohort spec: '") + key + "." + name + "' is not a number");
    out[*kind] = v.get<double>();
  }
}

template <class T>
void read_unsigned(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ValidationError(std::string("cohort spec: '") + key + "' must be a non-negative integer");
  }
  out = v.get<T>();
}

}  // namespace

CohortSpec cohort_spec_from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("cohort spec: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("cohort spec must be a JSON object");
  static const std::vector<std::string> known = {"n_studies", "prevalence", "signal_strength", "width",
                                                 "height",    "cam_size",   "seed",            "cutpoints"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError("cohort spec: unknown key '" + key + "'");
    }
  }
  CohortSpec spec;
  read_unsigned(j, "n_studies", spec.nStudies);
  read_unsigned(j, "width", spec.width);
  read_unsigned(j, "height", spec.height);
  read_unsigned(j, "cam_size", spec.camSize);
  read_unsigned(j, "seed", spec.seed);
  if (j.contains("prevalence")) read_finding_map(j.at("prevalence"), spec.prevalence, "prevalence");
  if (j.contains("cutpoints")) read_finding_map(j.at("cutpoints"), spec.cutpoints, "cutpoints");
  if (j.contains("signal_strength")) {
    if (!j.at("signal_strength").is_number()) throw ValidationError("cohort spec: 'signal_strength' must be a number");
    spec.signalStrength = j.at("signal_strength").get<double>();
  }
  spec.validate();
  return spec;
}

}  // namespace trx
