#include "trinuseg/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace trinuseg {
namespace {

namespace fs = std::filesystem;

using FilePtr = std::unique_ptr<std::FILE, int (*)(std::FILE*)>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode), &std::fclose);
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

struct Raw {
  int width = 0, height = 0, channels = 0, bit_depth = 0;
  std::vector<std::uint16_t> samples;  // interleaved
};

Raw read_raw(const fs::path& path) {
  FilePtr f = open_file(path, "rb");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError("not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed for " + path.string());
  }
  Raw raw;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("corrupt PNG: " + path.string());
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_swap(png);  // little-endian host
  png_read_update_info(png, info);
  raw.width = int(png_get_image_width(png, info));
  raw.height = int(png_get_image_height(png, info));
  raw.channels = png_get_channels(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * raw.height);
  rows.resize(raw.height);
  for (int y = 0; y < raw.height; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n = std::size_t(raw.width) * raw.height * raw.channels;
  raw.samples.resize(n);
  if (raw.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      raw.samples[i] = std::uint16_t(buffer[2 * i] | (buffer[2 * i + 1] << 8));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) raw.samples[i] = buffer[i];
  }
  return raw;
}

void write_raw(const fs::path& path, int width, int height, int color_type, int bit_depth,
               const std::vector<unsigned char>& buffer) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng init failed for " + path.string());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t rowbytes = buffer.size() / std::size_t(std::max(height, 1));
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(buffer.data() + rowbytes * y));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

unsigned char to_byte(float v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

Image read_image_png(const fs::path& path) {
  const Raw raw = read_raw(path);
  const int keep = raw.channels >= 3 ? 3 : 1;
  const float scale = raw.bit_depth == 16 ? 1.0f / 65535.0f : 1.0f / 255.0f;
  Image img(raw.height, raw.width, keep);
  for (std::size_t p = 0; p < std::size_t(raw.width) * raw.height; ++p) {
    for (int c = 0; c < keep; ++c) img.data[p * keep + c] = raw.samples[p * raw.channels + c] * scale;
  }
  return img;
}

void write_image_png(const fs::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw IoError("write_image_png: expected 1 or 3 channels, got " + std::to_string(image.channels));
  }
  std::vector<unsigned char> buf(image.data.size());
  std::transform(image.data.begin(), image.data.end(), buf.begin(), to_byte);
  write_raw(path, image.width, image.height,
            image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, 8, buf);
}

InstanceMask read_instances_png(const fs::path& path) {
  const Raw raw = read_raw(path);
  if (raw.channels != 1) throw IoError("instance mask must be single-channel: " + path.string());
  InstanceMask m(raw.height, raw.width);
  for (std::size_t i = 0; i < m.ids.size(); ++i) m.ids[i] = raw.samples[i];
  return m;
}

void write_instances_png(const fs::path& path, const InstanceMask& mask) {
  std::vector<unsigned char> buf(mask.ids.size() * 2);
  for (std::size_t i = 0; i < mask.ids.size(); ++i) {
    if (mask.ids[i] < 0 || mask.ids[i] > 65535) {
      throw IoError("instance id out of 16-bit range in " + path.string());
    }
    buf[2 * i] = static_cast<unsigned char>(mask.ids[i] >> 8);  // PNG is big-endian
    buf[2 * i + 1] = static_cast<unsigned char>(mask.ids[i] & 0xff);
  }
  write_raw(path, mask.width, mask.height, PNG_COLOR_TYPE_GRAY, 16, buf);
}

BinaryMask read_mask_png(const fs::path& path) {
  const Raw raw = read_raw(path);
  BinaryMask m(raw.height, raw.width);
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = raw.samples[i * raw.channels] > 0 ? 1 : 0;
  return m;
}

void write_mask_png(const fs::path& path, const BinaryMask& mask) {
  std::vector<unsigned char> buf(mask.data.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = mask.data[i] ? 255 : 0;
  write_raw(path, mask.width, mask.height, PNG_COLOR_TYPE_GRAY, 8, buf);
}

void write_dataset_sample(const fs::path& root, const std::string& id, const Image& image,
                          const InstanceMask& instances, const LabelTriplet& labels) {
  write_image_png(root / "images" / (id + ".png"), image);
  write_instances_png(root / "instances" / (id + ".png"), instances);
  write_mask_png(root / "labels" / (id + "_nuclei.png"), labels.nuclei);
  write_mask_png(root / "labels" / (id + "_edge.png"), labels.edge);
  write_mask_png(root / "labels" / (id + "_cluster.png"), labels.cluster_edge);
}

}  // namespace trinuseg
