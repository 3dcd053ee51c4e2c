// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "splatstyle/image.hpp"

namespace splatstyle {

// 8-bit sRGB PNG at the boundary, linear doubles inside.
ImageRGB read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageRGB& img);

double srgb_to_linear(double u);
double linear_to_srgb(double v);

} // namespace splatstyle
