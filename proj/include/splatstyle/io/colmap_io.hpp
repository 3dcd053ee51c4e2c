// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "splatstyle/scene.hpp"

namespace splatstyle {

struct ColmapModel {
    std::vector<Camera> cameras;          // ordered by image id
    std::vector<std::string> image_names; // aligned with cameras
};

// COLMAP text model: cameras.txt (PINHOLE / SIMPLE_PINHOLE) plus images.txt.
// Pose quaternions are normalized on load.
ColmapModel load_colmap(const std::filesystem::path& dir);
void save_colmap(const std::filesystem::path& dir, const std::vector<Camera>& cameras,
                 const std::vector<std::string>& image_names);

Quat quat_from_rotation(const Mat3& r);

} // namespace splatstyle
