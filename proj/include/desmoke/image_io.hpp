#pragma once

#include <filesystem>

#include "desmoke/image.hpp"

namespace desmoke {

// Loads an RGB PNG (8- or 16-bit; alpha stripped, palette expanded). Values
// are scaled to [0,1] by 2^B-1. Grayscale input raises ChannelError.
ImageRgb load_image(const std::filesystem::path& path);

// Loads a grayscale PNG as a single plane.
Plane load_plane(const std::filesystem::path& path);

// Loads an RGBA PNG written by save_image(ImageStack4) back into a stack.
ImageStack4 load_stack4(const std::filesystem::path& path);

// All writers emit 8-bit PNG, quantized as round(v*255).
void save_image(const ImageRgb& img, const std::filesystem::path& path);
void save_image(const Plane& img, const std::filesystem::path& path);
void save_image(const ImageStack4& img, const std::filesystem::path& path);

}  // namespace desmoke
