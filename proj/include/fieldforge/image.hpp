#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace fieldforge {

using Rgb = std::array<std::uint8_t, 3>;

// 8-bit interleaved RGB raster, row-major, origin top-left.
class Image {
public:
  Image() = default;
  Image(int width, int height, Rgb fill = {0, 0, 0})
      : width_(width), height_(height) {
    if (width <= 0 || height <= 0)
      throw std::invalid_argument("Image: dimensions must be positive");
    pixels_.resize(static_cast<std::size_t>(width) * height * 3);
    this->fill(fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t* pixel(int x, int y) {
    return pixels_.data() + (static_cast<std::size_t>(y) * width_ + x) * 3;
  }
  const std::uint8_t* pixel(int x, int y) const {
    return pixels_.data() + (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  Rgb at(int x, int y) const {
    const std::uint8_t* p = pixel(x, y);
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    std::uint8_t* p = pixel(x, y);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  std::vector<std::uint8_t>& data() { return pixels_; }
  const std::vector<std::uint8_t>& data() const { return pixels_; }

  void fill(Rgb c) {
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
      pixels_[i] = c[0];
      pixels_[i + 1] = c[1];
      pixels_[i + 2] = c[2];
    }
  }

  // Fills the intersection of [x, x+w) x [y, y+h) with the image.
  void fill_rect(int x, int y, int w, int h, Rgb c) {
    const int x0 = std::max(0, x);
    const int y0 = std::max(0, y);
    const int x1 = std::min(width_, x + w);
    const int y1 = std::min(height_, y + h);
    for (int yy = y0; yy < y1; ++yy)
      for (int xx = x0; xx < x1; ++xx)
        set(xx, yy, c);
  }

  // Copies src wholesale to (dst_x, dst_y); the destination rectangle must
  // lie inside this image.
  void blit(const Image& src, int dst_x, int dst_y) {
    if (dst_x < 0 || dst_y < 0 || dst_x + src.width() > width_ ||
        dst_y + src.height() > height_)
      throw std::out_of_range("Image::blit: destination out of bounds");
    for (int y = 0; y < src.height(); ++y)
      std::memcpy(pixel(dst_x, dst_y + y), src.pixel(0, y),
                  static_cast<std::size_t>(src.width()) * 3);
  }

  Image crop(int x, int y, int w, int h) const {
    if (x < 0 || y < 0 || w <= 0 || h <= 0 || x + w > width_ ||
        y + h > height_)
      throw std::out_of_range("Image::crop: rectangle out of bounds");
    Image out(w, h);
    for (int yy = 0; yy < h; ++yy)
      std::memcpy(out.pixel(0, yy), pixel(x, y + yy),
                  static_cast<std::size_t>(w) * 3);
    return out;
  }

  friend bool operator==(const Image& a, const Image& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ &&
           a.pixels_ == b.pixels_;
  }

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

namespace detail {

inline std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

} // namespace detail

// Bilinear resample with half-pixel centers. Resizing to the source
// dimensions is the identity.
inline Image resize_bilinear(const Image& src, int w, int h) {
  if (src.empty())
    throw std::invalid_argument("resize_bilinear: empty source");
  Image out(w, h);
  const double sx = static_cast<double>(src.width()) / w;
  const double sy = static_cast<double>(src.height()) / h;
  for (int y = 0; y < h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(src.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(src.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      std::uint8_t* dst = out.pixel(x, y);
      const std::uint8_t* p00 = src.pixel(x0, y0);
      const std::uint8_t* p10 = src.pixel(x1, y0);
      const std::uint8_t* p01 = src.pixel(x0, y1);
      const std::uint8_t* p11 = src.pixel(x1, y1);
      for (int c = 0; c < 3; ++c) {
        const double top = p00[c] + (p10[c] - p00[c]) * wx;
        const double bot = p01[c] + (p11[c] - p01[c]) * wx;
        dst[c] = detail::to_u8(top + (bot - top) * wy);
      }
    }
  }
  return out;
}

inline Image flip_horizontal(const Image& src) {
  Image out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x)
      out.set(src.width() - 1 - x, y, src.at(x, y));
  return out;
}

inline Image flip_vertical(const Image& src) {
  Image out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x)
      out.set(x, src.height() - 1 - y, src.at(x, y));
  return out;
}

inline Image rotate180(const Image& src) {
  Image out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x)
      out.set(src.width() - 1 - x, src.height() - 1 - y, src.at(x, y));
  return out;
}

// Clockwise quarter turn; output is height x width.
inline Image rotate90_cw(const Image& src) {
  Image out(src.height(), src.width());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x)
      out.set(src.height() - 1 - y, x, src.at(x, y));
  return out;
}

inline Image rotate270_cw(const Image& src) {
  Image out(src.height(), src.width());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x)
      out.set(y, src.width() - 1 - x, src.at(x, y));
  return out;
}

inline Image scale_brightness(const Image& src, double factor) {
  Image out = src;
  for (auto& v : out.data())
    v = detail::to_u8(v * factor);
  return out;
}

inline double mean_intensity(const Image& img) {
  if (img.empty())
    return 0.0;
  double sum = 0.0;
  for (std::uint8_t v : img.data())
    sum += v;
  return sum / static_cast<double>(img.data().size());
}

} // namespace fieldforge
