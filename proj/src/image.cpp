#include "lpvce/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace lpvce {

Eigen::VectorXd Image::to_vector() const {
  Eigen::VectorXd v(value_count());
  for (int i = 0; i < v.size(); ++i) v[i] = data[i];
  return v;
}

Image Image::from_vector(const Eigen::VectorXd& v, int height, int width, int channels) {
  if (static_cast<int>(v.size()) != height * width * channels)
    throw std::invalid_argument("Image::from_vector: size mismatch");
  Image img;
  img.height = height;
  img.width = width;
  img.channels = channels;
  img.data.assign(v.data(), v.data() + v.size());
  return img;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("read_png: cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("read_png: init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("read_png: init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_png: decode failed for " + path);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_png: unsupported channel count in " + path);
  }

  Image img;
  img.height = static_cast<int>(height);
  img.width = static_cast<int>(width);
  img.channels = channels;
  img.data.resize(img.value_count());

  std::vector<png_byte> row(png_get_rowbytes(png, info));
  for (png_uint_32 y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < width * static_cast<png_uint_32>(channels); ++x)
      img.data[y * width * channels + x] = row[x] / 255.0;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const Image& image, const std::string& path) {
  if (image.channels != 1 && image.channels != 3)
    throw std::invalid_argument("write_png: channels must be 1 or 3");
  if (static_cast<int>(image.data.size()) != image.value_count())
    throw std::invalid_argument("write_png: data size mismatch");

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("write_png: cannot open " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("write_png: init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("write_png: init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("write_png: encode failed for " + path);
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, image.width, image.height, 8,
               image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_byte> row(static_cast<std::size_t>(image.width) * image.channels);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width * image.channels; ++x) {
      const double v = image.data[static_cast<std::size_t>(y) * image.width * image.channels + x];
      const double clamped = std::min(1.0, std::max(0.0, v));
      row[x] = static_cast<png_byte>(std::lround(255.0 * clamped));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image hconcat(const std::vector<Image>& parts) {
  if (parts.empty()) throw std::invalid_argument("hconcat: no images");
  int total_width = 0;
  for (const Image& part : parts) {
    if (part.height != parts.front().height || part.channels != parts.front().channels)
      throw std::invalid_argument("hconcat: mismatched heights or channels");
    total_width += part.width;
  }
  Image out;
  out.height = parts.front().height;
  out.width = total_width;
  out.channels = parts.front().channels;
  out.data.resize(out.value_count());
  int offset = 0;
  for (const Image& part : parts) {
    for (int y = 0; y < part.height; ++y)
      for (int x = 0; x < part.width; ++x)
        for (int c = 0; c < part.channels; ++c) out.at(y, offset + x, c) = part.at(y, x, c);
    offset += part.width;
  }
  return out;
}

}  // namespace lpvce
