#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fieldforge/image.hpp"
#include "fieldforge/mosaic.hpp"
#include "fieldforge/rng.hpp"

namespace fieldforge::augment {

struct CutMixConfig {
  double probability = 0.5;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(probability >= 0.0 && probability <= 1.0))
      throw std::invalid_argument(
          "CutMixConfig: probability must be in [0,1]");
  }
};

struct SpecMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AlignmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Occludes region∩image with a constant fill. Annotations are left alone:
// occlusion hides pixels, it does not relabel tiles.
inline mosaic::MosaicItem cutout(const mosaic::MosaicItem& item,
                                 const mosaic::Bbox& region,
                                 Rgb fill = {0, 0, 0}) {
  mosaic::MosaicItem out = item;
  if (region.w <= 0 || region.h <= 0)
    return out;
  out.image.fill_rect(region.x, region.y, region.w, region.h, fill);
  return out;
}

namespace detail {

// cell index -> annotation, nullptr for soil.
inline std::vector<const mosaic::MosaicAnnotation*>
cell_table(const mosaic::MosaicItem& item) {
  std::vector<const mosaic::MosaicAnnotation*> table(
      static_cast<std::size_t>(item.spec.cell_count()), nullptr);
  for (const auto& a : item.annotations) {
    const auto [row, col] = mosaic::cell_of(a.bbox, item.spec);
    table[static_cast<std::size_t>(row) * item.spec.grid_cols + col] = &a;
  }
  return table;
}

} // namespace detail

// Replaces the tiles inside a grid-aligned region, pixels and annotations
// both, with the donor's. The result's annotation list is rebuilt in
// row-major cell order.
inline mosaic::MosaicItem cutmix(const mosaic::MosaicItem& base,
                                 const mosaic::MosaicItem& donor,
                                 const mosaic::Bbox& region) {
  if (!base.spec.same_geometry(donor.spec))
    throw SpecMismatchError("cutmix: base and donor geometry differ");
  const auto& spec = base.spec;
  if (region.w < 0 || region.h < 0)
    throw AlignmentError("cutmix: negative region extent");
  if (region.x % spec.tile_w != 0 || region.y % spec.tile_h != 0 ||
      region.w % spec.tile_w != 0 || region.h % spec.tile_h != 0)
    throw AlignmentError("cutmix: region is not tile-aligned");
  if (region.x < 0 || region.y < 0 || region.x + region.w > spec.width_px ||
      region.y + region.h > spec.height_px)
    throw AlignmentError("cutmix: region outside the grid");

  mosaic::MosaicItem out;
  out.spec = spec;
  out.image = base.image;
  if (region.w == 0 || region.h == 0) {
    out.annotations = base.annotations;
    return out;
  }
  out.image.blit(donor.image.crop(region.x, region.y, region.w, region.h),
                 region.x, region.y);

  const int c0 = region.x / spec.tile_w;
  const int r0 = region.y / spec.tile_h;
  const int c1 = c0 + region.w / spec.tile_w;
  const int r1 = r0 + region.h / spec.tile_h;

  const auto base_cells = detail::cell_table(base);
  const auto donor_cells = detail::cell_table(donor);
  out.annotations.reserve(base.annotations.size());
  for (int row = 0; row < spec.grid_rows; ++row) {
    for (int col = 0; col < spec.grid_cols; ++col) {
      const bool inside = row >= r0 && row < r1 && col >= c0 && col < c1;
      const auto* a =
          (inside ? donor_cells
                  : base_cells)[static_cast<std::size_t>(row) *
                                    spec.grid_cols +
                                col];
      if (a)
        out.annotations.push_back(*a);
    }
  }
  return out;
}

struct CutMixResult {
  mosaic::MosaicItem item;
  bool mixed = false;
  mosaic::Bbox region;
};

// One training-time draw: with cfg.probability, swap a uniformly sampled
// grid-aligned rectangle in from a uniformly chosen donor. draw_index keys
// the substream so one seed covers a whole epoch of draws.
inline CutMixResult maybe_cutmix(const mosaic::MosaicItem& base,
                                 std::span<const mosaic::MosaicItem> donors,
                                 const CutMixConfig& cfg,
                                 std::uint64_t draw_index = 0) {
  cfg.validate();
  if (donors.empty())
    throw std::invalid_argument("maybe_cutmix: empty donor pool");

  RandomStream rng = derive_stream(cfg.rng_seed, draw_index);
  if (!rng.coin(cfg.probability))
    return {base, false, {}};

  const auto& donor = donors[rng.below(donors.size())];
  const auto& spec = base.spec;
  const int c0 = static_cast<int>(rng.below(spec.grid_cols));
  const int r0 = static_cast<int>(rng.below(spec.grid_rows));
  int w_cells = 1 + static_cast<int>(rng.below(spec.grid_cols));
  int h_cells = 1 + static_cast<int>(rng.below(spec.grid_rows));
  w_cells = std::min(w_cells, spec.grid_cols - c0);
  h_cells = std::min(h_cells, spec.grid_rows - r0);

  const mosaic::Bbox region{c0 * spec.tile_w, r0 * spec.tile_h,
                            w_cells * spec.tile_w, h_cells * spec.tile_h};
  return {cutmix(base, donor, region), true, region};
}

} // namespace fieldforge::augment
