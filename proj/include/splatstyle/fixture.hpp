// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "splatstyle/image.hpp"
#include "splatstyle/scene.hpp"

namespace splatstyle {

// Synthetic desk-scale scene: a Gaussian cloud near the origin, cameras on a
// ring, a procedural style image. All parameters are drawn at float32
// precision so the PLY interchange is lossless.
struct FixtureSpec {
    int gaussians = 100;
    int cameras = 8;
    int resolution = 64;
    std::uint64_t seed = 7;
};

GaussianScene fixture_scene(const FixtureSpec& spec);
std::vector<Camera> fixture_cameras(const FixtureSpec& spec);
ImageRGB fixture_style_image(const FixtureSpec& spec);

// Writes scene.ply, colmap/{cameras,images}.txt and style.png under dir.
void write_fixture(const std::filesystem::path& dir, const FixtureSpec& spec);

} // namespace splatstyle
