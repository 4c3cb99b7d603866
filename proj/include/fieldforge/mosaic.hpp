#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fieldforge/corpus.hpp"
#include "fieldforge/image.hpp"
#include "fieldforge/rng.hpp"

namespace fieldforge::mosaic {

// Geometry of a synthetic far-field image: a grid_rows x grid_cols tiling of
// tile_w x tile_h cells, plus the soil:leaf mix ratio and the master seed.
struct MosaicSpec {
  int width_px = 1792;
  int height_px = 1204;
  int grid_cols = 28;
  int grid_rows = 28;
  int tile_w = 64;
  int tile_h = 43;
  int soil_ratio_num = 1; // soil : leaf; numerator 0 disables soil
  int soil_ratio_den = 5;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (grid_cols <= 0 || grid_rows <= 0 || tile_w <= 0 || tile_h <= 0)
      throw std::invalid_argument("MosaicSpec: non-positive grid geometry");
    if (grid_cols * tile_w != width_px || grid_rows * tile_h != height_px)
      throw std::invalid_argument(
          "MosaicSpec: grid does not tile the image exactly");
    if (soil_ratio_num < 0 || soil_ratio_den <= 0)
      throw std::invalid_argument("MosaicSpec: bad soil ratio");
  }

  double soil_probability() const {
    return static_cast<double>(soil_ratio_num) /
           static_cast<double>(soil_ratio_num + soil_ratio_den);
  }

  int cell_count() const { return grid_cols * grid_rows; }

  bool same_geometry(const MosaicSpec& o) const {
    return width_px == o.width_px && height_px == o.height_px &&
           grid_cols == o.grid_cols && grid_rows == o.grid_rows &&
           tile_w == o.tile_w && tile_h == o.tile_h;
  }

  friend bool operator==(const MosaicSpec&, const MosaicSpec&) = default;
};

// [x, y, w, h] in integer pixels, origin top-left.
struct Bbox {
  int x = 0, y = 0, w = 0, h = 0;

  friend bool operator==(const Bbox&, const Bbox&) = default;
};

struct MosaicAnnotation {
  std::string id; // source high-fidelity image id
  Bbox bbox;
  int sick = 0;

  friend bool operator==(const MosaicAnnotation&,
                         const MosaicAnnotation&) = default;
};

struct MosaicItem {
  Image image;
  std::vector<MosaicAnnotation> annotations; // row-major; soil cells omitted
  MosaicSpec spec;
};

struct NoSourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TextureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AnnotationFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Bbox cell_bbox(int row, int col, const MosaicSpec& spec) {
  if (row < 0 || row >= spec.grid_rows || col < 0 || col >= spec.grid_cols)
    throw std::out_of_range("cell_bbox: cell (" + std::to_string(row) + "," +
                            std::to_string(col) + ") outside " +
                            std::to_string(spec.grid_rows) + "x" +
                            std::to_string(spec.grid_cols) + " grid");
  return {col * spec.tile_w, row * spec.tile_h, spec.tile_w, spec.tile_h};
}

// Grid cell owning an annotation bbox, by its top-left corner.
inline std::pair<int, int> cell_of(const Bbox& b, const MosaicSpec& spec) {
  return {b.y / spec.tile_h, b.x / spec.tile_w};
}

// Annotation covering a grid cell, or nullptr for soil cells.
inline const MosaicAnnotation* annotation_at(const MosaicItem& item, int row,
                                             int col) {
  const Bbox want = cell_bbox(row, col, item.spec);
  for (const auto& a : item.annotations)
    if (a.bbox == want)
      return &a;
  return nullptr;
}

// Builds one synthetic field image. Every cell draws from an independent
// stream derived from (spec.rng_seed, row, col): first the soil/leaf coin,
// then either the soil slice position or the pool index. Leaf tiles are the
// source image resampled to tile size; annotations carry the source id and
// its binarized label, in row-major order.
inline MosaicItem generate_mosaic(std::span<const corpus::LabeledImage> pool,
                                  const Image& soil_texture,
                                  const MosaicSpec& spec) {
  spec.validate();
  if (pool.empty())
    throw NoSourceError("generate_mosaic: empty source pool");
  if (soil_texture.width() < spec.tile_w ||
      soil_texture.height() < spec.tile_h)
    throw TextureError("generate_mosaic: soil texture smaller than a tile");

  std::vector<Image> tiles(pool.size());
  std::vector<bool> resampled(pool.size(), false);
  const double p_soil = spec.soil_probability();

  MosaicItem item;
  item.spec = spec;
  item.image = Image(spec.width_px, spec.height_px);

  for (int row = 0; row < spec.grid_rows; ++row) {
    for (int col = 0; col < spec.grid_cols; ++col) {
      RandomStream rng = derive_stream(spec.rng_seed, row, col);
      const Bbox cell = cell_bbox(row, col, spec);
      if (rng.uniform01() < p_soil) {
        const int sx = static_cast<int>(
            rng.below(soil_texture.width() - spec.tile_w + 1));
        const int sy = static_cast<int>(
            rng.below(soil_texture.height() - spec.tile_h + 1));
        item.image.blit(soil_texture.crop(sx, sy, spec.tile_w, spec.tile_h),
                        cell.x, cell.y);
      } else {
        const std::size_t idx = rng.below(pool.size());
        if (!resampled[idx]) {
          tiles[idx] =
              resize_bilinear(pool[idx].pixels, spec.tile_w, spec.tile_h);
          resampled[idx] = true;
        }
        item.image.blit(tiles[idx], cell.x, cell.y);
        item.annotations.push_back({pool[idx].record.image_id, cell,
                                    corpus::binarize(pool[idx].record)});
      }
    }
  }
  return item;
}

inline constexpr std::string_view kAnnotationHeader = "id,bbox,class label";

// `id,"[x, y, w, h]",sick` — the bbox field is quoted because it contains
// commas. Rows follow the annotation list order (row-major for generated
// mosaics).
inline std::string
write_annotations(std::span<const MosaicAnnotation> annotations) {
  std::string out(kAnnotationHeader);
  out.push_back('\n');
  for (const auto& a : annotations) {
    out += a.id;
    out += ",\"[";
    out += std::to_string(a.bbox.x);
    out += ", ";
    out += std::to_string(a.bbox.y);
    out += ", ";
    out += std::to_string(a.bbox.w);
    out += ", ";
    out += std::to_string(a.bbox.h);
    out += "]\",";
    out += std::to_string(a.sick);
    out.push_back('\n');
  }
  return out;
}

namespace detail {

inline int parse_int_field(std::string_view s, std::string_view what,
                           std::size_t line_no) {
  if (s.empty())
    throw AnnotationFormatError("annotations line " + std::to_string(line_no) +
                                ": empty " + std::string(what));
  int value = 0;
  for (char ch : s) {
    if (ch < '0' || ch > '9')
      throw AnnotationFormatError("annotations line " +
                                  std::to_string(line_no) + ": bad " +
                                  std::string(what) + " '" + std::string(s) +
                                  "'");
    value = value * 10 + (ch - '0');
  }
  return value;
}

} // namespace detail

inline std::vector<MosaicAnnotation> parse_annotations(std::string_view text) {
  const auto lines = corpus::detail::split_lines(text);
  if (lines.empty() || lines[0] != kAnnotationHeader)
    throw AnnotationFormatError(
        "annotations: missing header '" + std::string(kAnnotationHeader) +
        "'");

  std::vector<MosaicAnnotation> out;
  out.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    const std::size_t c1 = line.find(",\"[");
    const std::size_t c2 = line.find("]\",", c1 == std::string_view::npos
                                                 ? 0
                                                 : c1 + 3);
    if (c1 == std::string_view::npos || c2 == std::string_view::npos)
      throw AnnotationFormatError("annotations line " + std::to_string(i + 1) +
                                  ": expected id,\"[x, y, w, h]\",sick");
    const std::string_view id = line.substr(0, c1);
    if (id.empty())
      throw AnnotationFormatError("annotations line " + std::to_string(i + 1) +
                                  ": empty id");
    const std::string_view bbox_text = line.substr(c1 + 3, c2 - (c1 + 3));
    const std::string_view sick_text = line.substr(c2 + 3);

    std::array<int, 4> v{};
    std::size_t start = 0;
    for (int k = 0; k < 4; ++k) {
      std::size_t end =
          k == 3 ? bbox_text.size() : bbox_text.find(", ", start);
      if (end == std::string_view::npos)
        throw AnnotationFormatError("annotations line " +
                                    std::to_string(i + 1) +
                                    ": bbox needs 4 components");
      v[k] = detail::parse_int_field(bbox_text.substr(start, end - start),
                                     "bbox component", i + 1);
      start = end + 2;
    }

    if (sick_text != "0" && sick_text != "1")
      throw AnnotationFormatError("annotations line " + std::to_string(i + 1) +
                                  ": sick flag must be 0 or 1, got '" +
                                  std::string(sick_text) + "'");

    out.push_back({std::string(id),
                   Bbox{v[0], v[1], v[2], v[3]},
                   sick_text == "1" ? 1 : 0});
  }
  return out;
}

// Seeded value-noise texture in brown hues; ships so generation can run
// without external soil assets.
inline Image procedural_soil_texture(int width, int height,
                                     std::uint64_t seed) {
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("procedural_soil_texture: bad size");

  constexpr int kLattice = 16;
  const int gw = width / kLattice + 2;
  const int gh = height / kLattice + 2;
  std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
  for (int gy = 0; gy < gh; ++gy)
    for (int gx = 0; gx < gw; ++gx)
      lattice[static_cast<std::size_t>(gy) * gw + gx] =
          derive_stream(seed, gx, gy).uniform01();

  const Rgb dark{92, 64, 38};
  const Rgb light{158, 122, 82};

  Image out(width, height);
  for (int y = 0; y < height; ++y) {
    const int gy = y / kLattice;
    const double fy = static_cast<double>(y % kLattice) / kLattice;
    for (int x = 0; x < width; ++x) {
      const int gx = x / kLattice;
      const double fx = static_cast<double>(x % kLattice) / kLattice;
      const auto v = [&](int ix, int iy) {
        return lattice[static_cast<std::size_t>(iy) * gw + ix];
      };
      const double top = v(gx, gy) + (v(gx + 1, gy) - v(gx, gy)) * fx;
      const double bot =
          v(gx, gy + 1) + (v(gx + 1, gy + 1) - v(gx, gy + 1)) * fx;
      double n = top + (bot - top) * fy;
      // Fine grain on top of the low-frequency field.
      n = 0.8 * n + 0.2 * derive_stream(seed, 0x9ea1u, x, y).uniform01();
      Rgb c;
      for (int ch = 0; ch < 3; ++ch)
        c[ch] = fieldforge::detail::to_u8(dark[ch] +
                                          (light[ch] - dark[ch]) * n);
      out.set(x, y, c);
    }
  }
  return out;
}

} // namespace fieldforge::mosaic
