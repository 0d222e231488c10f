#pragma once

#include <filesystem>

#include "core/image.hpp"

namespace uclearn {

// 8-bit RGB PNG, fixed encoder settings so identical pixels give identical bytes.
void write_png_rgb8(const std::filesystem::path& path, const Image& img);
Image read_png_rgb8(const std::filesystem::path& path);

} // namespace uclearn
