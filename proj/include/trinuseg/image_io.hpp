#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "trinuseg/image.hpp"
#include "trinuseg/labels.hpp"

namespace trinuseg {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8 or 16-bit gray/RGB(A) PNG to floats in [0, 1]; alpha is dropped.
Image read_image_png(const std::filesystem::path& path);
/// 8-bit gray (channels 1) or RGB (channels 3); values are clamped to [0, 1].
void write_image_png(const std::filesystem::path& path, const Image& image);

/// 16-bit single-channel id map.
InstanceMask read_instances_png(const std::filesystem::path& path);
void write_instances_png(const std::filesystem::path& path, const InstanceMask& mask);

/// 8-bit, 0 / 255.
BinaryMask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);

/// Writes <root>/images/<id>.png, <root>/instances/<id>.png and
/// <root>/labels/<id>_{nuclei,edge,cluster}.png.
void write_dataset_sample(const std::filesystem::path& root, const std::string& id,
                          const Image& image, const InstanceMask& instances,
                          const LabelTriplet& labels);

}  // namespace trinuseg
