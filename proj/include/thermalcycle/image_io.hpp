#pragma once

#include <filesystem>
#include <stdexcept>

#include "thermalcycle/tensor.hpp"

namespace thermalcycle {

/// Raised for unreadable, corrupt or unsupported image files.
class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Decodes an 8-bit PNG or baseline JPEG into [1, 3, H, W] with values
/// byte / 255. Grayscale is replicated to three channels, alpha dropped.
Tensor load_image(const std::filesystem::path& path);

/// Writes [1, 3, H, W] (or [1, 1, H, W]) values in [0, 1] as 8-bit PNG,
/// rounding to nearest and clamping.
void save_png(const Tensor& image, const std::filesystem::path& path);

}  // namespace thermalcycle
