// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "splatstyle/vec.hpp"

namespace splatstyle {

// One splat. Scale lives in log space and opacity in logit space so plain
// gradient steps cannot leave the valid ranges.
struct Gaussian3D {
    Vec3 position;
    Quat rotation;            // unit quaternion (w, x, y, z)
    Vec3 log_scale;
    double opacity_logit = 0.0;
    Vec3 color;               // degree-0 RGB in [0, 1]

    Vec3 scale() const {
        return {std::exp(log_scale.x), std::exp(log_scale.y), std::exp(log_scale.z)};
    }
    double opacity() const { return 1.0 / (1.0 + std::exp(-opacity_logit)); }
};

struct GaussianScene {
    std::vector<Gaussian3D> gaussians;
    Vec3 background_color{1.0, 1.0, 1.0};

    std::size_t size() const { return gaussians.size(); }
};

// Pinhole camera with world-to-camera rigid transform: x_cam = R * x_world + t.
struct Camera {
    Mat3 rotation = Mat3::identity();
    Vec3 translation;
    double fx = 0.0, fy = 0.0;
    double cx = 0.0, cy = 0.0;
    int width = 0, height = 0;

    Vec3 world_to_camera(const Vec3& p) const { return rotation * p + translation; }
    Vec3 center() const { return rotation.transposed() * (translation * -1.0); }
};

// Sigma = R S S^T R^T with S = diag(exp(log_scale)); symmetric positive definite.
Mat3 covariance_from_rs(const Gaussian3D& g);

// exp(-1/2 (x - mu)^T Sigma^-1 (x - mu)), in (0, 1].
double gaussian_density(const Gaussian3D& g, const Vec3& x);

} // namespace splatstyle
