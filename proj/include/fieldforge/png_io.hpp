#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "fieldforge/image.hpp"

namespace fieldforge {

struct PngError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

struct MemReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

inline void png_mem_read(png_structp png, png_bytep out, png_size_t count) {
  auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
  if (r->pos + count > r->size)
    png_error(png, "unexpected end of PNG stream");
  std::memcpy(out, r->data + r->pos, count);
  r->pos += count;
}

inline void png_mem_write(png_structp png, png_bytep data, png_size_t count) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + count);
}

inline void png_mem_flush(png_structp) {}

} // namespace detail

// Decodes any libpng-readable stream to 8-bit RGB (palette, gray and alpha
// variants are expanded/stripped).
inline Image decode_png(const std::uint8_t* bytes, std::size_t size) {
  if (size < 8 || png_sig_cmp(bytes, 0, 8) != 0)
    throw PngError("decode_png: not a PNG stream");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png)
    throw PngError("decode_png: png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw PngError("decode_png: png_create_info_struct failed");
  }

  detail::MemReader reader{bytes, size, 0};
  Image img;
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw PngError("decode_png: corrupt PNG stream");
  }

  png_set_read_fn(png, &reader, detail::png_mem_read);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE)
    png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS))
    png_set_tRNS_to_alpha(png);
  if (bit_depth == 16)
    png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_GRAY ||
      color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  if (png_get_channels(png, info) != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw PngError("decode_png: could not normalize stream to RGB");
  }

  img = Image(w, h);
  rows.resize(h);
  for (int y = 0; y < h; ++y)
    rows[y] = img.pixel(0, y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline Image decode_png(const std::vector<std::uint8_t>& bytes) {
  return decode_png(bytes.data(), bytes.size());
}

inline std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.empty())
    throw PngError("encode_png: empty image");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  if (!png)
    throw PngError("encode_png: png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw PngError("encode_png: png_create_info_struct failed");
  }

  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows(img.height());

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw PngError("encode_png: libpng write failure");
  }

  png_set_write_fn(png, &out, detail::png_mem_write, detail::png_mem_flush);
  png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height(); ++y)
    rows[y] = const_cast<png_bytep>(img.pixel(0, y));
  png_write_image(png, rows.data());
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  return out;
}

inline Image read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw PngError("read_png: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

inline void write_png(const Image& img, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw PngError("write_png: cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw PngError("write_png: short write to " + path.string());
}

} // namespace fieldforge
