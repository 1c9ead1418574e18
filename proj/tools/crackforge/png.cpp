#include "png.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace crackforge::cli {

namespace {

using File = std::unique_ptr<std::FILE, decltype(&std::fclose)>;

File open(const std::filesystem::path& p, const char* mode) {
  File f(std::fopen(p.c_str(), mode), &std::fclose);
  if (!f) throw Error("cannot open " + p.string());
  return f;
}

}  // namespace

std::uint8_t quantize(float v, double lo, double hi) {
  const double t = std::round(255.0 * (static_cast<double>(v) - lo) / (hi - lo));
  return static_cast<std::uint8_t>(std::clamp(t, 0.0, 255.0));
}

Image8 gray_image(const VoxelVolume& slice, double lo, double hi) {
  if (slice.dims().nz != 1) throw Error("gray_image: expects a 2D slice");
  if (!(hi > lo)) throw ConfigError("gray window must satisfy hi > lo");
  Image8 img{static_cast<int>(slice.dims().nx), static_cast<int>(slice.dims().ny), 1, {}};
  img.pixels.resize(slice.size());
  for (std::size_t i = 0; i < slice.size(); ++i) img.pixels[i] = quantize(slice[i], lo, hi);
  return img;
}

Image8 overlay_image(const VoxelVolume& slice, const BinaryMask& mask, double lo, double hi) {
  require_same_dims(slice.dims(), mask.dims(), "overlay");
  const Image8 g = gray_image(slice, lo, hi);
  Image8 img{g.width, g.height, 3, std::vector<std::uint8_t>(g.pixels.size() * 3)};
  for (std::size_t i = 0; i < g.pixels.size(); ++i) {
    const unsigned v = g.pixels[i];
    std::uint8_t* px = img.pixels.data() + 3 * i;
    if (mask[i]) {
      px[0] = static_cast<std::uint8_t>((v + 255) / 2);
      px[1] = px[2] = static_cast<std::uint8_t>(v / 2);
    } else {
      px[0] = px[1] = px[2] = static_cast<std::uint8_t>(v);
    }
  }
  return img;
}

// libpng reports errors by longjmp; the two helpers below keep only trivially
// destructible locals between setjmp and the libpng calls.
namespace {

bool write_rows(std::FILE* f, const Image8& img) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.channels);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, img.pixels.data() + static_cast<std::size_t>(y) * stride);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

// Fills img from an 8-bit gray or RGB file; other formats are rejected.
bool read_rows(std::FILE* f, Image8& img) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, f);
  png_read_info(png, info);
  const auto type = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) != 8 || (type != PNG_COLOR_TYPE_GRAY && type != PNG_COLOR_TYPE_RGB)) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  const std::size_t stride = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.channels);
  img.pixels.resize(stride * static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) png_read_row(png, img.pixels.data() + static_cast<std::size_t>(y) * stride, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

}  // namespace

void write_png(const Image8& img, const std::filesystem::path& p) {
  File f = open(p, "wb");
  if (!write_rows(f.get(), img)) throw Error("png: failed to write " + p.string());
}

Image8 read_png(const std::filesystem::path& p) {
  File f = open(p, "rb");
  Image8 img;
  if (!read_rows(f.get(), img)) throw Error("png: failed to read " + p.string() + " (8-bit gray or RGB only)");
  return img;
}

}  // namespace crackforge::cli
