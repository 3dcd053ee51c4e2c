// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "splatstyle/scene.hpp"

namespace splatstyle {

// Standard 3DGS PLY vertex layout, binary little-endian, all float32:
// x y z, f_dc_0..2, opacity, scale_0..2, rot_0..3. Opacity and scale fields
// hold the logit/log parameterizations directly; f_dc maps to color through
// the SH0 affine map c = 0.2820948 * f_dc + 0.5. Save inverts the mapping, so
// any scene that came from disk round-trips bit-exactly.
inline constexpr double kSh0Scale = 0.2820948;

GaussianScene load_ply(const std::filesystem::path& path);
void save_ply(const GaussianScene& scene, const std::filesystem::path& path);

} // namespace splatstyle
