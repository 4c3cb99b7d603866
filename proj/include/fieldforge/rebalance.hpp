#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fieldforge/corpus.hpp"
#include "fieldforge/image.hpp"
#include "fieldforge/png_io.hpp"
#include "fieldforge/rng.hpp"

namespace fieldforge::rebalance {

using corpus::ClassLabel;

// Images to synthesize per class to reach the balance target.
struct BalanceQuota {
  std::array<std::size_t, corpus::kClassCount> per_class{};

  std::size_t& of(ClassLabel c) { return per_class[corpus::class_index(c)]; }
  std::size_t of(ClassLabel c) const {
    return per_class[corpus::class_index(c)];
  }
  std::size_t total() const {
    std::size_t t = 0;
    for (std::size_t q : per_class)
      t += q;
    return t;
  }

  friend bool operator==(const BalanceQuota&, const BalanceQuota&) = default;
};

struct InvalidTargetError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InsufficientSourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Default target is the majority class count, the smallest quota that
// makes the distribution uniform.
inline BalanceQuota balance_plan(const corpus::ClassDistribution& dist,
                                 std::optional<std::size_t> target = {}) {
  const std::size_t goal = target.value_or(dist.max_count());
  if (goal < dist.max_count())
    throw InvalidTargetError(
        "balance_plan: target " + std::to_string(goal) +
        " is below the majority class count " +
        std::to_string(dist.max_count()));
  BalanceQuota quota;
  for (ClassLabel c : corpus::all_classes)
    quota.of(c) = goal - dist.count(c);
  return quota;
}

// Per-class synthetic image source. Implementations must be deterministic
// given (seed_image, rng_seed) and must preserve image dimensions; the
// output carries the same class as the input.
class Generator {
public:
  virtual ~Generator() = default;
  virtual Image generate(const Image& seed_image, ClassLabel label,
                         std::uint64_t rng_seed) const = 0;
};

struct BuiltinGeneratorConfig {
  bool flip = true;
  std::set<int> rotate_degrees = {0, 90, 180, 270};
  double brightness_jitter = 0.1;

  bool is_identity() const {
    const bool rotates =
        !rotate_degrees.empty() &&
        (rotate_degrees.size() > 1 || *rotate_degrees.begin() != 0);
    return !flip && !rotates && brightness_jitter == 0.0;
  }
};

// Classical flip/rotate/jitter augmenter. Samples one transform combination
// per call from the seeded stream. Rotations that swap the aspect are
// resampled back to the source dimensions.
class BuiltinGenerator final : public Generator {
public:
  explicit BuiltinGenerator(BuiltinGeneratorConfig config)
      : config_(std::move(config)) {
    for (int deg : config_.rotate_degrees)
      if (deg != 0 && deg != 90 && deg != 180 && deg != 270)
        throw std::invalid_argument(
            "BuiltinGenerator: rotate_degrees must be within {0,90,180,270}");
    if (config_.brightness_jitter < 0.0 || config_.brightness_jitter > 0.5)
      throw std::invalid_argument(
          "BuiltinGenerator: brightness_jitter must lie in [0, 0.5]");
    rotations_.assign(config_.rotate_degrees.begin(),
                      config_.rotate_degrees.end());
    if (rotations_.empty())
      rotations_.push_back(0);
  }

  const BuiltinGeneratorConfig& config() const { return config_; }

  Image generate(const Image& seed_image, ClassLabel /*label*/,
                 std::uint64_t rng_seed) const override {
    RandomStream rng(rng_seed);
    const bool flip = config_.flip && rng.coin(0.5);
    const int rotation = rotations_[rng.below(rotations_.size())];
    const double jitter = config_.brightness_jitter;
    const double scale =
        jitter > 0.0 ? rng.uniform(1.0 - jitter, 1.0 + jitter) : 1.0;

    Image out = seed_image;
    if (flip)
      out = flip_horizontal(out);
    switch (rotation) {
    case 90: out = rotate90_cw(out); break;
    case 180: out = rotate180(out); break;
    case 270: out = rotate270_cw(out); break;
    default: break;
    }
    if (out.width() != seed_image.width() ||
        out.height() != seed_image.height())
      out = resize_bilinear(out, seed_image.width(), seed_image.height());
    if (scale != 1.0)
      out = scale_brightness(out, scale);
    return out;
  }

private:
  BuiltinGeneratorConfig config_;
  std::vector<int> rotations_;
};

// Adapter for externally generated images: serves files from
// <dir>/<class>/*.png, chosen deterministically from the seed. Lets a GAN
// run offline and drop its output in.
class DirectoryGenerator final : public Generator {
public:
  explicit DirectoryGenerator(std::filesystem::path dir) : dir_(std::move(dir)) {
    for (ClassLabel c : corpus::all_classes) {
      const auto class_dir = dir_ / corpus::to_string(c);
      auto& files = files_[corpus::class_index(c)];
      if (std::filesystem::is_directory(class_dir)) {
        for (const auto& entry :
             std::filesystem::directory_iterator(class_dir))
          if (entry.is_regular_file() && entry.path().extension() == ".png")
            files.push_back(entry.path());
        std::sort(files.begin(), files.end());
      }
    }
  }

  Image generate(const Image& seed_image, ClassLabel label,
                 std::uint64_t rng_seed) const override {
    const auto& files = files_[corpus::class_index(label)];
    if (files.empty())
      throw InsufficientSourceError(
          std::string("DirectoryGenerator: no .png files under ") +
          (dir_ / corpus::to_string(label)).string());
    RandomStream rng(rng_seed);
    Image img = read_png(files[rng.below(files.size())]);
    if (img.width() != seed_image.width() ||
        img.height() != seed_image.height())
      img = resize_bilinear(img, seed_image.width(), seed_image.height());
    return img;
  }

private:
  std::filesystem::path dir_;
  std::array<std::vector<std::filesystem::path>, corpus::kClassCount> files_;
};

// Resolves an image id to pixels (typically corpus::ImageStore::load).
using ImageProvider = std::function<Image(const std::string& image_id)>;

struct SynthesizedImage {
  corpus::HighFidelityRecord record;
  Image image;
};

inline std::string synth_image_id(ClassLabel c, std::size_t k) {
  return "synth_" + std::string(corpus::to_string(c)) + "_" +
         std::to_string(k) + ".png";
}

// Fills each class quota with novel images. Each (class, k) slot draws from
// an independent stream derived from (rng_seed, class, k), so results do not
// depend on evaluation order.
inline std::vector<SynthesizedImage>
synthesize(std::span<const corpus::HighFidelityRecord> pool,
           const ImageProvider& load_image, const BalanceQuota& quota,
           const Generator& gen, std::uint64_t rng_seed) {
  std::array<std::vector<const corpus::HighFidelityRecord*>,
             corpus::kClassCount>
      by_class;
  for (const auto& r : pool)
    by_class[corpus::class_index(r.label)].push_back(&r);

  std::vector<SynthesizedImage> out;
  out.reserve(quota.total());
  for (ClassLabel c : corpus::all_classes) {
    const std::size_t want = quota.of(c);
    const auto& sources = by_class[corpus::class_index(c)];
    if (want > 0 && sources.empty())
      throw InsufficientSourceError(
          std::string("synthesize: class '") + corpus::to_string(c) +
          "' has a positive quota but no source records");
    for (std::size_t k = 0; k < want; ++k) {
      RandomStream stream =
          derive_stream(rng_seed, corpus::class_index(c), k);
      const corpus::HighFidelityRecord& src =
          *sources[stream.below(sources.size())];
      const Image seed_image = load_image(src.image_id);
      Image novel = gen.generate(seed_image, c, stream.next());
      if (novel.width() != seed_image.width() ||
          novel.height() != seed_image.height())
        throw std::logic_error(
            "synthesize: generator changed image dimensions");
      out.push_back({{synth_image_id(c, k), c}, std::move(novel)});
    }
  }
  return out;
}

} // namespace fieldforge::rebalance
