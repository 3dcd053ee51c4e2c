// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <vector>

#include "splatstyle/image.hpp"
#include "splatstyle/scene.hpp"

namespace splatstyle {

struct RasterConfig {
    double near_plane = 0.01;
    double lowpass = 0.3;          // px^2 added to cov2d
    double alpha_max = 0.999;
    double cutoff_sigma = 8.0;     // contribution window, shared by culling / binning / shading
    double min_transmittance = 1e-14;
    int tile_size = 16;
    int threads = 1;
};

struct ProjectedGaussian {
    Vec2 mean2d;
    Mat2 cov2d;        // after low-pass dilation
    double depth = 0.0;
    Vec3 color;
    double opacity = 0.0;

    // caches derived at projection time
    Mat2 inv_cov;
    int col_min = 0, col_max = -1; // inclusive pixel ranges covered by the cutoff window
    int row_min = 0, row_max = -1;
    int source_index = -1;
};

struct RenderGradients {
    std::vector<Vec3> position;
    std::vector<std::array<double, 4>> rotation; // (w, x, y, z)
    std::vector<Vec3> log_scale;
    std::vector<double> opacity_logit;
    std::vector<Vec3> color;

    explicit RenderGradients(std::size_t n = 0)
        : position(n), rotation(n, {0, 0, 0, 0}), log_scale(n), opacity_logit(n, 0.0), color(n) {}
};

struct TileIndex {
    int tile_size = 16;
    int tiles_x = 0, tiles_y = 0;
    std::vector<std::vector<int>> lists; // per tile, indices into the projected list, input order

    int tile_at(int tx, int ty) const { return ty * tiles_x + tx; }
};

// Projects one Gaussian; nullopt means culled (behind the near plane or its
// cutoff window covers no pixel sample).
std::optional<ProjectedGaussian> project_gaussian(const Gaussian3D& g, const Camera& cam,
                                                  const RasterConfig& cfg = {});

// Bins projected Gaussians into fixed-size tiles; every Gaussian is listed in
// each tile whose pixel range its cutoff window overlaps.
TileIndex tile_bin(const std::vector<ProjectedGaussian>& projected, const Camera& cam,
                   const RasterConfig& cfg = {});

// Projection + global front-to-back order (depth, then source index).
struct RenderContext {
    Camera camera;
    RasterConfig config;
    std::vector<ProjectedGaussian> sorted; // surviving splats, front to back
    TileIndex tiles;
};

RenderContext prepare_render(const GaussianScene& scene, const Camera& cam,
                             const RasterConfig& cfg = {});

// Tiled path (production) and untiled per-pixel loop (correctness oracle).
// Both composite identically; the tiled image is bit-equal to the untiled one.
ImageRGB render(const GaussianScene& scene, const Camera& cam, const RasterConfig& cfg = {});
ImageRGB render_untiled(const GaussianScene& scene, const Camera& cam, const RasterConfig& cfg = {});

// Analytic gradients of sum(upstream * pixels) w.r.t. every Gaussian parameter.
RenderGradients render_backward(const GaussianScene& scene, const Camera& cam,
                                const ImageRGB& upstream, const RasterConfig& cfg = {});

} // namespace splatstyle
