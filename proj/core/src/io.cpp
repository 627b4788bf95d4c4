#include "trx/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include "trx/error.hpp"

namespace trx::io {

using Json = nlohmann::ordered_json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw ValidationError("write failed for " + path.string());
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty()) {
    throw ValidationError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

// ---------------------------------------------------------------------------
// Raw outputs

std::string output_file_name(FindingKind kind) {
  switch (expected_kind(kind)) {
    case OutputKind::Mask:
      return std::string(slug(kind)) + ".trxm";
    case OutputKind::Softmax:
      return std::string(slug(kind)) + ".softmax";
    case OutputKind::Boxes:
      return std::string(slug(kind)) + ".boxes";
  }
  return std::string(slug(kind));
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + k])) << (8 * k);
  }
  return v;
}

std::vector<std::string_view> whitespace_tokens(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  const auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (i < text.size()) {
    while (i < text.size() && space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !space(text[i])) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

template <class F>
auto with_context(const fs::path& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace

std::string encode_mask(const MaskGrid& grid) {
  std::string out(kMaskMagic);
  put_u32(out, static_cast<std::uint32_t>(grid.width()));
  put_u32(out, static_cast<std::uint32_t>(grid.height()));
  out.reserve(out.size() + 4 * grid.cells().size());
  for (float v : grid.cells()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

MaskGrid decode_mask(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != kMaskMagic) {
    throw ValidationError("corrupt mask header");
  }
  const std::uint32_t w = get_u32(bytes, 4);
  const std::uint32_t h = get_u32(bytes, 8);
  const std::uint64_t cells = static_cast<std::uint64_t>(w) * h;
  if (w == 0 || h == 0 || bytes.size() != 12 + 4 * cells) {
    throw ValidationError("corrupt mask header: " + std::to_string(w) + "x" + std::to_string(h) +
                          " does not match payload of " + std::to_string(bytes.size() - 12) + " bytes");
  }
  std::vector<float> values(cells);
  for (std::uint64_t i = 0; i < cells; ++i) {
    values[i] = std::bit_cast<float>(get_u32(bytes, 12 + 4 * i));
    if (!(values[i] >= 0.0f && values[i] <= 1.0f)) {
      throw ValidationError("value out of range at cell " + std::to_string(i));
    }
  }
  return MaskGrid(w, h, std::move(values));
}

void write_mask(const fs::path& path, const MaskGrid& grid) { write_file(path, encode_mask(grid)); }

MaskGrid read_mask(const fs::path& path) {
  return with_context(path, [&] { return decode_mask(read_file(path)); });
}

void write_softmax(const fs::path& path, const SoftmaxPair& pair) {
  write_file(path, format_double(pair.negative()) + "\n" + format_double(pair.positive()) + "\n");
}

SoftmaxPair read_softmax(const fs::path& path) {
  return with_context(path, [&] {
    const std::string text = read_file(path);
    const auto tokens = whitespace_tokens(text);
    if (tokens.size() != 2) throw ValidationError("softmax file needs exactly two values");
    const double neg = parse_double(tokens[0]);
    const double pos = parse_double(tokens[1]);
    if (!(neg >= 0.0 && neg <= 1.0 && pos >= 0.0 && pos <= 1.0)) {
      throw ValidationError("value out of range");
    }
    return SoftmaxPair(neg, pos);
  });
}

void write_boxes(const fs::path& path, const BoxList& boxes) {
  std::string out;
  for (const ScoredBox& b : boxes.boxes()) {
    out += format_double(b.x1) + " " + format_double(b.y1) + " " + format_double(b.x2) + " " +
           format_double(b.y2) + " " + format_double(b.confidence) + "\n";
  }
  write_file(path, out);
}

BoxList read_boxes(const fs::path& path) {
  return with_context(path, [&] {
    const std::string text = read_file(path);
    std::vector<ScoredBox> boxes;
    std::size_t lineNo = 0;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      ++lineNo;
      const auto tokens = whitespace_tokens(line);
      if (tokens.empty()) continue;
      if (tokens.size() != 5) {
        throw ValidationError("line " + std::to_string(lineNo) + ": expected 5 values");
      }
      ScoredBox b{parse_double(tokens[0]), parse_double(tokens[1]), parse_double(tokens[2]),
                  parse_double(tokens[3]), parse_double(tokens[4])};
      if (!(b.confidence >= 0.0 && b.confidence <= 1.0)) {
        throw ValidationError("line " + std::to_string(lineNo) + ": value out of range");
      }
      boxes.push_back(b);
    }
    return BoxList(std::move(boxes));
  });
}

void write_study(const fs::path& dir, const StudyOutputs& outputs) {
  const fs::path studyDir = dir / outputs.study_id();
  fs::create_directories(studyDir);
  for (FindingKind kind : kAllFindings) {
    const fs::path file = studyDir / output_file_name(kind);
    const RawOutput& out = outputs.output(kind);
    switch (kind_of(out)) {
      case OutputKind::Mask:
        write_mask(file, std::get<MaskGrid>(out));
        break;
      case OutputKind::Softmax:
        write_softmax(file, std::get<SoftmaxPair>(out));
        break;
      case OutputKind::Boxes:
        write_boxes(file, std::get<BoxList>(out));
        break;
    }
  }
  const fs::path cam = studyDir / kCamFileName;
  if (outputs.opacity_cam()) {
    write_mask(cam, *outputs.opacity_cam());
  } else if (fs::exists(cam)) {
    fs::remove(cam);
  }
}

StudyOutputs read_study(const fs::path& studyDir) {
  const std::string id = studyDir.filename().string();
  const auto load = [&](FindingKind kind) -> RawOutput {
    const fs::path file = studyDir / output_file_name(kind);
    if (!fs::exists(file)) {
      throw ValidationError("study " + id + ": missing finding file " + file.filename().string());
    }
    try {
      switch (expected_kind(kind)) {
        case OutputKind::Mask:
          return read_mask(file);
        case OutputKind::Softmax:
          return read_softmax(file);
        case OutputKind::Boxes:
          return read_boxes(file);
      }
    } catch (const ValidationError& e) {
      throw ValidationError("study " + id + ": " + e.what());
    }
    throw ValidationError("unreachable");
  };
  FindingMap<RawOutput> perFinding(load(FindingKind::Pneumothorax), load(FindingKind::PleuralEffusion),
                                   load(FindingKind::LungOpacity), load(FindingKind::Fracture));
  std::optional<MaskGrid> cam;
  const fs::path camFile = studyDir / kCamFileName;
  if (fs::exists(camFile)) {
    try {
      cam = read_mask(camFile);
    } catch (const ValidationError& e) {
      throw ValidationError("study " + id + ": " + e.what());
    }
  }
  return StudyOutputs(id, std::move(perFinding), std::move(cam));
}

void write_raw_outputs(const fs::path& dir, std::span<const StudyOutputs> studies) {
  fs::create_directories(dir);
  for (const StudyOutputs& s : studies) write_study(dir, s);
}

std::vector<StudyOutputs> load_raw_outputs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir.string());
  std::vector<fs::path> studyDirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) studyDirs.push_back(entry.path());
  }
  std::sort(studyDirs.begin(), studyDirs.end());
  std::vector<StudyOutputs> out;
  out.reserve(studyDirs.size());
  for (const fs::path& p : studyDirs) out.push_back(read_study(p));
  return out;
}

// ---------------------------------------------------------------------------
// Thresholds

std::string thresholds_to_json(const ThresholdConfig& cfg) {
  Json j = Json::object();
  for (FindingKind kind : kAllFindings) j[std::string(slug(kind))] = cfg.cutpoint(kind);
  return j.dump(2) + "\n";
}

ThresholdConfig thresholds_from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("thresholds: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("thresholds must be a JSON object");
  std::array<double, 4> values{};
  std::set<FindingKind> seen;
  for (const auto& [key, value] : j.items()) {
    const auto kind = parse_finding(key);
    if (!kind) throw ValidationError("thresholds: unknown finding '" + key + "'");
    if (!value.is_number()) throw ValidationError("thresholds: '" + key + "' is not a number");
    values[static_cast<std::size_t>(*kind)] = value.get<double>();
    seen.insert(*kind);
  }
  if (seen.size() != kAllFindings.size()) throw ValidationError("thresholds: all four findings are required");
  return ThresholdConfig(FindingMap<double>(values));
}

void write_thresholds(const fs::path& path, const ThresholdConfig& cfg) {
  write_file(path, thresholds_to_json(cfg));
}

ThresholdConfig read_thresholds(const fs::path& path) {
  return with_context(path, [&] { return thresholds_from_json(read_file(path)); });
}

// ---------------------------------------------------------------------------
// CSV

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool fieldStarted = false;
  std::size_t i = 0;
  const auto endField = [&] {
    row.push_back(std::move(field));
    field.clear();
    fieldStarted = false;
  };
  const auto endRow = [&] {
    endField();
    if (!(row.size() == 1 && row[0].empty())) records.push_back(std::move(row));
    row.clear();
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && !fieldStarted) {
      quoted = true;
      fieldStarted = true;
    } else if (c == ',') {
      endField();
    } else if (c == '\n') {
      endRow();
    } else if (c != '\r') {
      field.push_back(c);
      fieldStarted = true;
    }
    ++i;
  }
  if (quoted) throw ValidationError("CSV ends inside a quoted field");
  if (fieldStarted || !field.empty() || !row.empty()) endRow();

  CsvTable table;
  if (records.empty()) return table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw ValidationError("CSV row " + std::to_string(r + 1) + " has " + std::to_string(records[r].size()) +
                            " fields, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

namespace {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void append_csv_row(std::string& out, const std::vector<std::string>& row) {
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (k) out.push_back(',');
    out += csv_escape(row[k]);
  }
  out.push_back('\n');
}

const std::array<std::string_view, 5> kLabelBaseColumns = {"studyId", "patientId", "sex", "age", "view"};

Sex parse_sex(std::string_view s) {
  if (s == "Female" || s == "female" || s == "F" || s == "f") return Sex::Female;
  if (s == "Male" || s == "male" || s == "M" || s == "m") return Sex::Male;
  if (s.empty() || s == "Unknown" || s == "unknown" || s == "U" || s == "Other") return Sex::Unknown;
  throw ValidationError("unrecognized sex '" + std::string(s) + "'");
}

ViewPosition parse_view(std::string_view s) {
  if (s == "PA") return ViewPosition::PA;
  if (s == "AP") return ViewPosition::AP;
  if (s == "Lateral" || s == "LL" || s == "LAT" || s == "lateral") return ViewPosition::Lateral;
  if (s.empty() || s == "Unknown") return ViewPosition::Unknown;
  throw ValidationError("unrecognized view '" + std::string(s) + "'");
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

std::string format_csv(const CsvTable& table) {
  std::string out;
  append_csv_row(out, table.header);
  for (const auto& row : table.rows) append_csv_row(out, row);
  return out;
}

LabelState parse_label_state(std::string_view cell) {
  while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
  while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
  if (cell.empty()) return LabelState::Empty;
  if (cell == "1" || cell == "1.0") return LabelState::ConfirmedPositive;
  if (cell == "0" || cell == "0.0") return LabelState::ConfirmedNegative;
  if (cell == "-1" || cell == "-1.0") return LabelState::Uncertain;
  throw ValidationError("malformed label state '" + std::string(cell) + "'");
}

std::string format_label_state(LabelState state) {
  switch (state) {
    case LabelState::ConfirmedPositive:
      return "1";
    case LabelState::ConfirmedNegative:
      return "0";
    case LabelState::Uncertain:
      return "-1";
    case LabelState::Empty:
      return "";
  }
  return "";
}

std::vector<LabelRecord> labels_from_csv(const CsvTable& table) {
  if (table.header.size() < kLabelBaseColumns.size()) {
    throw ValidationError("labels CSV must start with studyId,patientId,sex,age,view");
  }
  for (std::size_t k = 0; k < kLabelBaseColumns.size(); ++k) {
    if (table.header[k] != kLabelBaseColumns[k]) {
      throw ValidationError("labels CSV column " + std::to_string(k + 1) + " must be '" +
                            std::string(kLabelBaseColumns[k]) + "', found '" + table.header[k] + "'");
    }
  }
  std::vector<LabelRecord> out;
  std::set<std::string> ids;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = "labels row " + std::to_string(r + 2);
    try {
      LabelRecord rec;
      rec.studyId = row[0];
      rec.patientId = row[1];
      if (rec.studyId.empty()) throw ValidationError("empty studyId");
      if (rec.patientId.empty()) throw ValidationError("empty patientId");
      if (!ids.insert(rec.studyId).second) throw ValidationError("duplicate studyId " + rec.studyId);
      rec.sex = parse_sex(row[2]);
      if (!row[3].empty()) {
        const double age = parse_double(row[3]);
        if (!(age >= 0.0) || age != std::floor(age) || age > 200.0) {
          throw ValidationError("age must be a non-negative integer");
        }
        rec.age = static_cast<int>(age);
      }
      rec.view = parse_view(row[4]);
      for (std::size_t c = kLabelBaseColumns.size(); c < row.size(); ++c) {
        if (ends_with(table.header[c], "_target")) continue;
        try {
          rec.categories[table.header[c]] = parse_label_state(row[c]);
        } catch (const ValidationError& e) {
          throw ValidationError("column '" + table.header[c] + "': " + e.what());
        }
      }
      out.push_back(std::move(rec));
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return out;
}

CsvTable labels_to_csv(std::span<const LabelRecord> records, std::vector<std::string> categoryColumns) {
  if (categoryColumns.empty()) {
    std::set<std::string> all;
    for (const LabelRecord& r : records) {
      for (const auto& entry : r.categories) all.insert(entry.first);
    }
    categoryColumns.assign(all.begin(), all.end());
  }
  CsvTable table;
  table.header.assign(kLabelBaseColumns.begin(), kLabelBaseColumns.end());
  table.header.insert(table.header.end(), categoryColumns.begin(), categoryColumns.end());
  for (const LabelRecord& r : records) {
    std::vector<std::string> row = {r.studyId, r.patientId, std::string(to_string(r.sex)),
                                    std::to_string(r.age), std::string(to_string(r.view))};
    for (const std::string& c : categoryColumns) row.push_back(format_label_state(r.state(c)));
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<LabelRecord> read_labels_csv(const fs::path& path) {
  return with_context(path, [&] { return labels_from_csv(parse_csv(read_file(path))); });
}

void write_labels_csv(const fs::path& path, std::span<const LabelRecord> records,
                      std::vector<std::string> categoryColumns) {
  write_file(path, format_csv(labels_to_csv(records, std::move(categoryColumns))));
}

// ---------------------------------------------------------------------------
// Manifest and triage

std::string manifest_to_json(const SplitManifest& manifest) {
  Json j = Json::object();
  j["seed"] = manifest.seed;
  j["train"] = manifest.trainIds;
  j["tune"] = manifest.tuneIds;
  return j.dump(2) + "\n";
}

SplitManifest manifest_from_json(std::string_view text) {
  try {
    const Json j = Json::parse(text);
    SplitManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.trainIds = j.at("train").get<std::set<std::string>>();
    m.tuneIds = j.at("tune").get<std::set<std::string>>();
    return m;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
}

CsvTable triage_to_csv(std::span<const TriageResult> results) {
  CsvTable table;
  table.header.push_back("studyId");
  for (FindingKind kind : kAllFindings) table.header.push_back("score_" + std::string(slug(kind)));
  for (FindingKind kind : kAllFindings) table.header.push_back("flag_" + std::string(slug(kind)));
  table.header.push_back("abnormal");
  for (const TriageResult& r : results) {
    std::vector<std::string> row{r.studyId};
    for (FindingKind kind : kAllFindings) row.push_back(format_double(r.scores[kind]));
    for (FindingKind kind : kAllFindings) row.push_back(r.flags[kind] ? "1" : "0");
    row.push_back(r.abnormal ? "1" : "0");
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<TriageResult> triage_from_csv(const CsvTable& table) {
  if (table.header.size() != 10) throw ValidationError("triage CSV must have 10 columns");
  const auto flag = [](const std::string& s) {
    if (s == "1") return true;
    if (s == "0") return false;
    throw ValidationError("triage flag must be 0 or 1");
  };
  std::vector<TriageResult> out;
  for (const auto& row : table.rows) {
    TriageResult r;
    r.studyId = row[0];
    for (std::size_t k = 0; k < kAllFindings.size(); ++k) {
      r.scores[kAllFindings[k]] = parse_double(row[1 + k]);
      r.flags[kAllFindings[k]] = flag(row[5 + k]);
    }
    r.abnormal = flag(row[9]);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// PNG

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(png_structp, png_const_charp message) {
  throw ValidationError(std::string("PNG: ") + message);
}

void png_warn(png_structp, png_const_charp) {}

}  // namespace

void write_png(const fs::path& path, const HeatLayer& layer) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw ValidationError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw ValidationError("PNG: out of memory");
  }
  try {
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(layer.width()), static_cast<png_uint_32>(layer.height()), 8,
                 PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(layer.width() * 4);
    for (std::size_t y = 0; y < layer.height(); ++y) {
      for (std::size_t x = 0; x < layer.width(); ++x) {
        const Rgba& p = layer.at(x, y);
        row[4 * x] = p.r;
        row[4 * x + 1] = p.g;
        row[4 * x + 2] = p.b;
        row[4 * x + 3] = p.a;
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

HeatLayer read_png(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw ValidationError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ValidationError("PNG: out of memory");
  }
  try {
    png_init_io(png, file.get());
    png_read_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    if (png_get_color_type(png, info) != PNG_COLOR_TYPE_RGBA || png_get_bit_depth(png, info) != 8) {
      throw ValidationError("PNG: expected 8-bit RGBA");
    }
    HeatLayer layer(w, h);
    std::vector<png_byte> row(static_cast<std::size_t>(w) * 4);
    for (png_uint_32 y = 0; y < h; ++y) {
      png_read_row(png, row.data(), nullptr);
      for (png_uint_32 x = 0; x < w; ++x) {
        layer.at(x, y) = {row[4 * x], row[4 * x + 1], row[4 * x + 2], row[4 * x + 3]};
      }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return layer;
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
}

}  // namespace trx::io
