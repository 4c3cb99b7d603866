#include <catch_amalgamated.hpp>

#include <vector>

#include "fieldforge/augment.hpp"
#include "fieldforge/mosaic.hpp"
#include "support.hpp"

using namespace fieldforge;
using mosaic::Bbox;
using mosaic::MosaicItem;

namespace {

MosaicItem make_item(std::uint64_t seed, int soil_num = 1) {
  auto pool = testsupport::tiny_pool();
  for (std::size_t i = 0; i < pool.size(); ++i)
    pool[i].pixels = testsupport::gradient_image(
        16, 12, static_cast<std::uint8_t>(17 * i + seed));
  const Image soil = mosaic::procedural_soil_texture(64, 48, seed + 100);
  return mosaic::generate_mosaic(pool, soil,
                                 testsupport::small_spec(seed, soil_num));
}

bool same_item(const MosaicItem& a, const MosaicItem& b) {
  return a.image == b.image && a.annotations == b.annotations;
}

} // namespace

TEST_CASE("cutout blanks exactly the requested pixels") {
  const auto item = make_item(1);
  const Bbox region{3, 2, 8, 6};
  const auto out = augment::cutout(item, region, {0, 0, 0});

  CHECK(out.annotations == item.annotations);
  int changed = 0;
  for (int y = 0; y < item.image.height(); ++y) {
    for (int x = 0; x < item.image.width(); ++x) {
      const bool inside = x >= region.x && x < region.x + region.w &&
                          y >= region.y && y < region.y + region.h;
      if (inside) {
        CHECK(out.image.at(x, y) == Rgb{0, 0, 0});
        if (item.image.at(x, y) != Rgb{0, 0, 0})
          ++changed;
      } else {
        REQUIRE(out.image.at(x, y) == item.image.at(x, y));
      }
    }
  }
  CHECK(changed <= region.w * region.h);
  CHECK(changed > 0);
}

TEST_CASE("cutout over one full default tile touches at most 2752 pixels") {
  const auto item = make_item(2);
  const auto out = augment::cutout(item, {0, 0, 64, 43});
  const int changed = testsupport::count_differing_pixels(item.image,
                                                          out.image);
  CHECK(changed <= 64 * 43);
  CHECK(64 * 43 == 2752);
}

TEST_CASE("cutout clips to the image and ignores zero-area regions") {
  const auto item = make_item(3);
  const auto clipped = augment::cutout(item, {28, 20, 50, 50});
  CHECK(clipped.image.at(31, 23) == Rgb{0, 0, 0});
  CHECK(clipped.image.at(0, 0) == item.image.at(0, 0));

  CHECK(same_item(augment::cutout(item, {4, 4, 0, 10}), item));
  CHECK(same_item(augment::cutout(item, {4, 4, 10, 0}), item));
}

TEST_CASE("cutout on the whole image leaves annotations intact") {
  const auto item = make_item(4);
  const auto out = augment::cutout(
      item, {0, 0, item.image.width(), item.image.height()});
  CHECK(out.annotations == item.annotations);
  for (int y = 0; y < out.image.height(); ++y)
    for (int x = 0; x < out.image.width(); ++x)
      REQUIRE(out.image.at(x, y) == Rgb{0, 0, 0});
}

TEST_CASE("cutmix with itself is the identity") {
  const auto item = make_item(5);
  for (const Bbox region :
       {Bbox{0, 0, 8, 6}, Bbox{8, 6, 16, 12}, Bbox{0, 0, 32, 24}}) {
    CHECK(same_item(augment::cutmix(item, item, region), item));
  }
}

TEST_CASE("cutmix with the full grid yields the donor") {
  const auto base = make_item(6);
  const auto donor = make_item(7);
  const auto out = augment::cutmix(base, donor, {0, 0, 32, 24});
  CHECK(out.image == donor.image);
  CHECK(out.annotations == donor.annotations);
}

TEST_CASE("cutmix with an empty region yields the base") {
  const auto base = make_item(8);
  const auto donor = make_item(9);
  CHECK(same_item(augment::cutmix(base, donor, {8, 6, 0, 0}), base));
}

TEST_CASE("single tile swap takes the donor cell verbatim") {
  const auto base = make_item(10, 0);
  const auto donor = make_item(11, 0);
  const auto out = augment::cutmix(base, donor, {0, 0, 8, 6});

  const auto* base_a = mosaic::annotation_at(base, 0, 0);
  const auto* donor_a = mosaic::annotation_at(donor, 0, 0);
  const auto* out_a = mosaic::annotation_at(out, 0, 0);
  REQUIRE(base_a != nullptr);
  REQUIRE(donor_a != nullptr);
  REQUIRE(out_a != nullptr);
  CHECK(*out_a == *donor_a);
  CHECK(out.image.crop(0, 0, 8, 6) == donor.image.crop(0, 0, 8, 6));
  CHECK(out.image.crop(8, 0, 24, 24) == base.image.crop(8, 0, 24, 24));
}

TEST_CASE("single tile swap picks up donor soil") {
  // Force a donor whose (0,0) cell is soil by searching seeds.
  const auto base = make_item(12, 0);
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    const auto donor = make_item(seed, 3);
    if (mosaic::annotation_at(donor, 0, 0) != nullptr)
      continue;
    const auto out = augment::cutmix(base, donor, {0, 0, 8, 6});
    CHECK(mosaic::annotation_at(out, 0, 0) == nullptr);
    CHECK(out.annotations.size() == base.annotations.size() - 1);
    return;
  }
  FAIL("no seed produced a soil tile at (0,0)");
}

TEST_CASE("cutmix validates geometry and alignment") {
  const auto base = make_item(13);
  const auto donor = make_item(14);

  auto other_spec = testsupport::small_spec(1);
  other_spec.grid_cols = 8;
  other_spec.tile_w = 4;
  MosaicItem other;
  other.spec = other_spec;
  other.image = Image(other_spec.width_px, other_spec.height_px);
  CHECK_THROWS_AS(augment::cutmix(base, other, {0, 0, 8, 6}),
                  augment::SpecMismatchError);

  CHECK_THROWS_AS(augment::cutmix(base, donor, {1, 0, 8, 6}),
                  augment::AlignmentError);
  CHECK_THROWS_AS(augment::cutmix(base, donor, {0, 0, 7, 6}),
                  augment::AlignmentError);
  CHECK_THROWS_AS(augment::cutmix(base, donor, {0, 0, 40, 6}),
                  augment::AlignmentError);
  CHECK_THROWS_AS(augment::cutmix(base, donor, {-8, 0, 8, 6}),
                  augment::AlignmentError);
}

TEST_CASE("cutmix conserves the tile partition") {
  const auto base = make_item(15);
  const auto donor = make_item(16);
  const auto out = augment::cutmix(base, donor, {8, 6, 16, 12});

  std::size_t soil = 0;
  for (int row = 0; row < out.spec.grid_rows; ++row)
    for (int col = 0; col < out.spec.grid_cols; ++col)
      if (mosaic::annotation_at(out, row, col) == nullptr)
        ++soil;
  CHECK(out.annotations.size() + soil ==
        static_cast<std::size_t>(out.spec.cell_count()));
}

TEST_CASE("a region and its complement rebuild the donor") {
  const auto base = make_item(17);
  const auto donor = make_item(18);
  const Bbox region{8, 6, 16, 12};

  auto mixed = augment::cutmix(base, donor, region);
  // Complement of the region as four grid-aligned strips.
  const int W = base.spec.width_px, H = base.spec.height_px;
  const std::vector<Bbox> strips = {
      {0, 0, W, region.y},                                          // top
      {0, region.y + region.h, W, H - region.y - region.h},         // bottom
      {0, region.y, region.x, region.h},                            // left
      {region.x + region.w, region.y, W - region.x - region.w,
       region.h},                                                   // right
  };
  for (const auto& strip : strips)
    if (strip.w > 0 && strip.h > 0)
      mixed = augment::cutmix(mixed, donor, strip);

  CHECK(mixed.image == donor.image);
  CHECK(mixed.annotations == donor.annotations);
}

TEST_CASE("maybe_cutmix respects probability zero and one") {
  const auto base = make_item(19);
  const std::vector<MosaicItem> donors = {make_item(20), make_item(21)};

  for (std::uint64_t draw = 0; draw < 16; ++draw) {
    const auto never =
        augment::maybe_cutmix(base, donors, {0.0, 77}, draw);
    CHECK_FALSE(never.mixed);
    CHECK(same_item(never.item, base));

    const auto always =
        augment::maybe_cutmix(base, donors, {1.0, 77}, draw);
    CHECK(always.mixed);
    CHECK(always.region.w > 0);
    CHECK(always.region.h > 0);
  }
}

TEST_CASE("maybe_cutmix is deterministic per seed and draw index") {
  const auto base = make_item(22);
  const std::vector<MosaicItem> donors = {make_item(23), make_item(24)};

  const auto a = augment::maybe_cutmix(base, donors, {0.5, 9}, 4);
  const auto b = augment::maybe_cutmix(base, donors, {0.5, 9}, 4);
  CHECK(a.mixed == b.mixed);
  CHECK(a.region == b.region);
  CHECK(same_item(a.item, b.item));

  bool any_diff = false;
  for (std::uint64_t draw = 0; draw < 32 && !any_diff; ++draw) {
    const auto x = augment::maybe_cutmix(base, donors, {0.5, 9}, draw);
    const auto y = augment::maybe_cutmix(base, donors, {0.5, 10}, draw);
    any_diff = x.mixed != y.mixed || !(x.region == y.region);
  }
  CHECK(any_diff);
}

TEST_CASE("maybe_cutmix mixing frequency sits near one half") {
  const auto base = make_item(25);
  const std::vector<MosaicItem> donors = {make_item(26)};

  std::size_t mixed = 0;
  const std::size_t trials = 10000;
  for (std::size_t draw = 0; draw < trials; ++draw) {
    const auto r = augment::maybe_cutmix(base, donors, {0.5, 321}, draw);
    if (r.mixed) {
      ++mixed;
      // Conservation on every mixed output.
      std::size_t soil = 0;
      for (int row = 0; row < r.item.spec.grid_rows; ++row)
        for (int col = 0; col < r.item.spec.grid_cols; ++col)
          if (mosaic::annotation_at(r.item, row, col) == nullptr)
            ++soil;
      REQUIRE(r.item.annotations.size() + soil ==
              static_cast<std::size_t>(r.item.spec.cell_count()));
    }
  }
  const double rate = static_cast<double>(mixed) / trials;
  CHECK(rate > 0.485);
  CHECK(rate < 0.515);
}

TEST_CASE("maybe_cutmix requires donors and a valid probability") {
  const auto base = make_item(27);
  CHECK_THROWS_AS(augment::maybe_cutmix(base, {}, {0.5, 1}, 0),
                  std::invalid_argument);
  const std::vector<MosaicItem> donors = {make_item(28)};
  CHECK_THROWS_AS(augment::maybe_cutmix(base, donors, {1.5, 1}, 0),
                  std::invalid_argument);
}
