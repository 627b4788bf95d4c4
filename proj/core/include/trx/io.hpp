#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trx/compositor.hpp"
#include "trx/labelset.hpp"
#include "trx/types.hpp"

namespace trx::io {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Raw model outputs
//
// A cohort directory holds one subdirectory per study, named by study id:
//
//   <dir>/<studyId>/pneumothorax.trxm         mask, binary
//   <dir>/<studyId>/pleural_effusion.trxm     mask, binary
//   <dir>/<studyId>/lung_opacity.softmax      "neg" and "pos" on two lines
//   <dir>/<studyId>/fracture.boxes            "x1 y1 x2 y2 conf" per line
//   <dir>/<studyId>/lung_opacity_cam.trxm     optional activation map
//
// Mask files: magic "TRXM", width and height as little-endian uint32, then
// width*height little-endian float32 cells in row-major order.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kMaskMagic = "TRXM";
inline constexpr std::string_view kCamFileName = "lung_opacity_cam.trxm";

/// File name holding a finding's output within a study directory.
std::string output_file_name(FindingKind kind);

std::string encode_mask(const MaskGrid& grid);
MaskGrid decode_mask(std::string_view bytes);

void write_mask(const fs::path& path, const MaskGrid& grid);
MaskGrid read_mask(const fs::path& path);

void write_softmax(const fs::path& path, const SoftmaxPair& pair);
SoftmaxPair read_softmax(const fs::path& path);

void write_boxes(const fs::path& path, const BoxList& boxes);
BoxList read_boxes(const fs::path& path);

/// Writes <dir>/<studyId>/... for one study.
void write_study(const fs::path& dir, const StudyOutputs& outputs);
StudyOutputs read_study(const fs::path& studyDir);

void write_raw_outputs(const fs::path& dir, std::span<const StudyOutputs> studies);

/// Every subdirectory of dir is a study; results are sorted by study id.
/// Errors name the study and file.
std::vector<StudyOutputs> load_raw_outputs(const fs::path& dir);

// ---------------------------------------------------------------------------
// Threshold configuration: JSON object keyed by finding slug, in finding
// order, e.g. {"pneumothorax": 144.43, "pleural_effusion": 3440.5, ...}.
// ---------------------------------------------------------------------------

std::string thresholds_to_json(const ThresholdConfig& cfg);
ThresholdConfig thresholds_from_json(std::string_view text);
void write_thresholds(const fs::path& path, const ThresholdConfig& cfg);
ThresholdConfig read_thresholds(const fs::path& path);

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC 4180 subset: comma separated, optional double quotes with "" escapes.
CsvTable parse_csv(std::string_view text);
std::string format_csv(const CsvTable& table);

/// Labels CSV: studyId,patientId,sex,age,view followed by one column per
/// category. Category cells are 1 / 0 / -1 / blank (1.0, 0.0, -1.0 also
/// accepted). Columns whose name ends in "_target" are ignored on read.
/// Blank cells read back as explicit Empty entries.
std::vector<LabelRecord> labels_from_csv(const CsvTable& table);
/// Category columns default to the sorted union of all record categories.
CsvTable labels_to_csv(std::span<const LabelRecord> records,
                       std::vector<std::string> categoryColumns = {});

std::vector<LabelRecord> read_labels_csv(const fs::path& path);
void write_labels_csv(const fs::path& path, std::span<const LabelRecord> records,
                      std::vector<std::string> categoryColumns = {});

LabelState parse_label_state(std::string_view cell);
std::string format_label_state(LabelState state);

// ---------------------------------------------------------------------------
// Split manifests, triage results, heatmaps
// ---------------------------------------------------------------------------

std::string manifest_to_json(const SplitManifest& manifest);
SplitManifest manifest_from_json(std::string_view text);

/// studyId, score_<finding> x4, flag_<finding> x4, abnormal (0/1).
CsvTable triage_to_csv(std::span<const TriageResult> results);
std::vector<TriageResult> triage_from_csv(const CsvTable& table);

/// 8-bit RGBA PNG.
void write_png(const fs::path& path, const HeatLayer& layer);
HeatLayer read_png(const fs::path& path);

// ---------------------------------------------------------------------------
// Plain file helpers
// ---------------------------------------------------------------------------

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view contents);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace trx::io
