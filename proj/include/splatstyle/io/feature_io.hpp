// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "splatstyle/losses.hpp"

namespace splatstyle {

// Flat binary feature/descriptor file: magic, h, w, c as unsigned 32-bit
// little-endian, then h*w*c row-major 32-bit floats. Descriptors are stored
// as 1x1xk maps.
inline constexpr std::uint32_t kFeatureMagic = 0x46564E41u; // "ANVF"

FeatureMap load_feature_map(const std::filesystem::path& path);
void save_feature_map(const std::filesystem::path& path, const FeatureMap& fm);

} // namespace splatstyle
