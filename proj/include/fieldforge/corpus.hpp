#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "fieldforge/image.hpp"
#include "fieldforge/png_io.hpp"

namespace fieldforge::corpus {

enum class ClassLabel { healthy = 0, multiple_diseases = 1, rust = 2, scab = 3 };

inline constexpr std::size_t kClassCount = 4;

inline constexpr std::array<ClassLabel, kClassCount> all_classes{
    ClassLabel::healthy, ClassLabel::multiple_diseases, ClassLabel::rust,
    ClassLabel::scab};

constexpr std::size_t class_index(ClassLabel c) {
  return static_cast<std::size_t>(c);
}

constexpr const char* to_string(ClassLabel c) {
  switch (c) {
  case ClassLabel::healthy: return "healthy";
  case ClassLabel::multiple_diseases: return "multiple_diseases";
  case ClassLabel::rust: return "rust";
  case ClassLabel::scab: return "scab";
  }
  return "?";
}

inline std::optional<ClassLabel> label_from_string(std::string_view s) {
  for (ClassLabel c : all_classes)
    if (s == to_string(c))
      return c;
  return std::nullopt;
}

inline std::vector<std::string> class_names() {
  return {"healthy", "multiple_diseases", "rust", "scab"};
}

// Header is validated verbatim; catches column-order drift in exports.
inline constexpr std::string_view kLabelTableHeader =
    "image_id,healthy,multiple_diseases,rust,scab";

struct HighFidelityRecord {
  std::string image_id;
  ClassLabel label = ClassLabel::healthy;

  friend bool operator==(const HighFidelityRecord&,
                         const HighFidelityRecord&) = default;
};

// A record together with its decoded pixels, for the generators.
struct LabeledImage {
  HighFidelityRecord record;
  Image pixels;
};

class ClassDistribution {
public:
  std::size_t& operator[](ClassLabel c) { return counts_[class_index(c)]; }
  std::size_t count(ClassLabel c) const { return counts_[class_index(c)]; }

  std::size_t total() const {
    std::size_t t = 0;
    for (std::size_t c : counts_)
      t += c;
    return t;
  }

  std::size_t max_count() const {
    std::size_t m = 0;
    for (std::size_t c : counts_)
      m = std::max(m, c);
    return m;
  }

  friend bool operator==(const ClassDistribution&,
                         const ClassDistribution&) = default;

private:
  std::array<std::size_t, kClassCount> counts_{};
};

// One-hot/header violations and duplicate or empty ids.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally malformed rows (wrong field count, non-binary flags).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos)
      end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size())
      break;
    start = end + 1;
  }
  // A trailing newline yields one empty final line; drop it.
  if (!lines.empty() && lines.back().empty())
    lines.pop_back();
  return lines;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

} // namespace detail

// Parses the label table (comma-separated, one-hot class flags). Accepts LF
// or CRLF. Input order is preserved.
inline std::vector<HighFidelityRecord> parse_label_table(std::string_view text) {
  const auto lines = detail::split_lines(text);
  if (lines.empty())
    throw SchemaError("label table: empty input, expected header '" +
                      std::string(kLabelTableHeader) + "'");
  if (lines[0] != kLabelTableHeader)
    throw SchemaError("label table: bad header '" + std::string(lines[0]) +
                      "', expected '" + std::string(kLabelTableHeader) + "'");

  std::vector<HighFidelityRecord> records;
  records.reserve(lines.size() - 1);
  std::unordered_set<std::string_view> seen;

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    if (line.empty())
      throw ParseError("label table line " + std::to_string(i + 1) +
                       ": empty row");
    const auto fields = detail::split_fields(line);
    if (fields.size() != 1 + kClassCount)
      throw ParseError("label table line " + std::to_string(i + 1) + " ('" +
                       std::string(line) + "'): expected 5 fields, got " +
                       std::to_string(fields.size()));

    const std::string_view id = fields[0];
    if (id.empty())
      throw SchemaError("label table line " + std::to_string(i + 1) +
                        ": empty image_id");

    int ones = 0;
    ClassLabel label = ClassLabel::healthy;
    for (std::size_t c = 0; c < kClassCount; ++c) {
      const std::string_view flag = fields[1 + c];
      if (flag == "1") {
        ++ones;
        label = all_classes[c];
      } else if (flag != "0") {
        throw ParseError("label table line " + std::to_string(i + 1) + " ('" +
                         std::string(id) + "'): non-binary flag '" +
                         std::string(flag) + "'");
      }
    }
    if (ones != 1)
      throw SchemaError("label table line " + std::to_string(i + 1) + " ('" +
                        std::string(id) + "'): " + std::to_string(ones) +
                        " class flags set, rows must be one-hot");
    if (!seen.insert(id).second)
      throw SchemaError("label table line " + std::to_string(i + 1) +
                        ": duplicate image_id '" + std::string(id) + "'");

    records.push_back({std::string(id), label});
  }
  return records;
}

inline std::string write_label_table(std::span<const HighFidelityRecord> records) {
  std::string out(kLabelTableHeader);
  out.push_back('\n');
  for (const auto& r : records) {
    out += r.image_id;
    for (ClassLabel c : all_classes) {
      out.push_back(',');
      out.push_back(c == r.label ? '1' : '0');
    }
    out.push_back('\n');
  }
  return out;
}

inline ClassDistribution
class_distribution(std::span<const HighFidelityRecord> records) {
  ClassDistribution dist;
  for (const auto& r : records)
    ++dist[r.label];
  return dist;
}

// 0 for healthy, 1 for any disease class.
constexpr int binarize(const HighFidelityRecord& r) {
  return r.label == ClassLabel::healthy ? 0 : 1;
}

constexpr int binarize(ClassLabel label) {
  return label == ClassLabel::healthy ? 0 : 1;
}

// Resolves image ids against a root directory. Pixels load lazily so that
// metadata-only workflows never touch the filesystem.
class ImageStore {
public:
  explicit ImageStore(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }

  std::filesystem::path resolve(const std::string& image_id) const {
    return root_ / image_id;
  }

  Image load(const std::string& image_id) const {
    const auto path = resolve(image_id);
    if (!std::filesystem::exists(path))
      throw std::runtime_error("image '" + image_id + "' not found under " +
                               root_.string());
    return read_png(path);
  }

private:
  std::filesystem::path root_;
};

} // namespace fieldforge::corpus
