// SPDX-License-Identifier: Apache-2.0
#include "splatstyle/raster.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "splatstyle/error.hpp"

namespace splatstyle {

namespace {

struct ProjectionScratch {
    Vec3 t;        // camera-frame position
    Mat3 rot;      // R(q_hat)
    Vec3 scale;    // exp(log_scale)
    double quat_norm = 1.0;
    Quat q_hat;
};

// J is the Jacobian of the pinhole map at the camera-frame point t; only the
// top two rows matter for the 2x2 screen covariance.
void perspective_jacobian(const Camera& cam, const Vec3& t, double j[2][3]) {
    const double inv_z = 1.0 / t.z;
    j[0][0] = cam.fx * inv_z;
    j[0][1] = 0.0;
    j[0][2] = -cam.fx * t.x * inv_z * inv_z;
    j[1][0] = 0.0;
    j[1][1] = cam.fy * inv_z;
    j[1][2] = -cam.fy * t.y * inv_z * inv_z;
}

std::optional<ProjectedGaussian> project_impl(const Gaussian3D& g, const Camera& cam,
                                              const RasterConfig& cfg, ProjectionScratch* scratch) {
    const Vec3 t = cam.world_to_camera(g.position);
    if (t.z <= cfg.near_plane) return std::nullopt;

    const Quat q_hat = g.rotation.normalized();
    const Mat3 rot = rotation_from_unit_quat(q_hat);
    const Vec3 s = g.scale();
    Mat3 m = rot;
    for (int i = 0; i < 3; ++i) {
        m(i, 0) *= s.x;
        m(i, 1) *= s.y;
        m(i, 2) *= s.z;
    }
    const Mat3 cov3d = m * m.transposed();

    double j[2][3];
    perspective_jacobian(cam, t, j);
    // a = J * R_cam (2x3), cov2d = a * cov3d * a^T
    double a[2][3];
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c)
            a[r][c] = j[r][0] * cam.rotation(0, c) + j[r][1] * cam.rotation(1, c) +
                      j[r][2] * cam.rotation(2, c);
    double av[2][3];
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c)
            av[r][c] = a[r][0] * cov3d(0, c) + a[r][1] * cov3d(1, c) + a[r][2] * cov3d(2, c);
    Mat2 cov2d;
    cov2d.a = av[0][0] * a[0][0] + av[0][1] * a[0][1] + av[0][2] * a[0][2] + cfg.lowpass;
    cov2d.b = av[0][0] * a[1][0] + av[0][1] * a[1][1] + av[0][2] * a[1][2];
    cov2d.c = cov2d.b;
    cov2d.d = av[1][0] * a[1][0] + av[1][1] * a[1][1] + av[1][2] * a[1][2] + cfg.lowpass;

    ProjectedGaussian p;
    p.mean2d = {cam.fx * t.x / t.z + cam.cx, cam.fy * t.y / t.z + cam.cy};
    p.cov2d = cov2d;
    p.depth = t.z;
    p.color = g.color;
    p.opacity = g.opacity();
    p.inv_cov = cov2d.inverse();

    const double rx = cfg.cutoff_sigma * std::sqrt(cov2d.a);
    const double ry = cfg.cutoff_sigma * std::sqrt(cov2d.d);
    // pixel c samples at c + 0.5; inclusive index range covered by the window
    p.col_min = std::max(0, static_cast<int>(std::ceil(p.mean2d.x - rx - 0.5)));
    p.col_max = std::min(cam.width - 1, static_cast<int>(std::floor(p.mean2d.x + rx - 0.5)));
    p.row_min = std::max(0, static_cast<int>(std::ceil(p.mean2d.y - ry - 0.5)));
    p.row_max = std::min(cam.height - 1, static_cast<int>(std::floor(p.mean2d.y + ry - 0.5)));
    if (p.col_min > p.col_max || p.row_min > p.row_max) return std::nullopt;

    if (scratch) {
        scratch->t = t;
        scratch->rot = rot;
        scratch->scale = s;
        scratch->quat_norm = g.rotation.norm();
        scratch->q_hat = q_hat;
    }
    return p;
}

struct Contribution {
    int slot;      // position in the per-pixel candidate list
    double alpha;
    double weight; // pre-clamp alpha
    double power;
    Vec2 d;
    double t_before;
};

// Shared compositing kernel. `candidates` must be front-to-back; returns the
// pixel color and optionally the per-splat contributions for the backward pass.
template <typename GetSplat>
Vec3 composite_pixel(double px, double py, int n_candidates, GetSplat&& get,
                     const RasterConfig& cfg, const Vec3& background,
                     std::vector<Contribution>* contribs) {
    const double cutoff_power = 0.5 * cfg.cutoff_sigma * cfg.cutoff_sigma;
    const double col = px - 0.5, row = py - 0.5; // pixel indices
    Vec3 color{0, 0, 0};
    double transmittance = 1.0;
    for (int k = 0; k < n_candidates; ++k) {
        const ProjectedGaussian& pg = get(k);
        if (col < pg.col_min || col > pg.col_max || row < pg.row_min || row > pg.row_max) continue;
        const Vec2 d{px - pg.mean2d.x, py - pg.mean2d.y};
        const double power =
            0.5 * (pg.inv_cov.a * d.x * d.x + (pg.inv_cov.b + pg.inv_cov.c) * d.x * d.y +
                   pg.inv_cov.d * d.y * d.y);
        if (power > cutoff_power) continue;
        const double weight = pg.opacity * std::exp(-power);
        const double alpha = std::min(weight, cfg.alpha_max);
        color += pg.color * (alpha * transmittance);
        if (contribs) contribs->push_back({k, alpha, weight, power, d, transmittance});
        transmittance *= 1.0 - alpha;
        if (transmittance < cfg.min_transmittance) break;
    }
    color += background * transmittance;
    return color;
}

int thread_count(const RasterConfig& cfg) {
    if (cfg.threads > 0) return cfg.threads;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(first_tile, last_tile) over a static partition of [0, n_tiles).
template <typename Fn>
void parallel_tiles(int n_tiles, int threads, Fn&& fn) {
    threads = std::min(threads, n_tiles);
    if (threads <= 1) {
        if (n_tiles > 0) fn(0, n_tiles);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const int chunk = (n_tiles + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(n_tiles, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

} // namespace

std::optional<ProjectedGaussian> project_gaussian(const Gaussian3D& g, const Camera& cam,
                                                  const RasterConfig& cfg) {
    return project_impl(g, cam, cfg, nullptr);
}

TileIndex tile_bin(const std::vector<ProjectedGaussian>& projected, const Camera& cam,
                   const RasterConfig& cfg) {
    TileIndex idx;
    idx.tile_size = cfg.tile_size;
    idx.tiles_x = (cam.width + cfg.tile_size - 1) / cfg.tile_size;
    idx.tiles_y = (cam.height + cfg.tile_size - 1) / cfg.tile_size;
    idx.lists.assign(static_cast<std::size_t>(idx.tiles_x) * idx.tiles_y, {});
    for (int i = 0; i < static_cast<int>(projected.size()); ++i) {
        const ProjectedGaussian& p = projected[i];
        if (p.col_min > p.col_max || p.row_min > p.row_max) continue;
        const int tx0 = p.col_min / cfg.tile_size, tx1 = p.col_max / cfg.tile_size;
        const int ty0 = p.row_min / cfg.tile_size, ty1 = p.row_max / cfg.tile_size;
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx) idx.lists[idx.tile_at(tx, ty)].push_back(i);
    }
    return idx;
}

RenderContext prepare_render(const GaussianScene& scene, const Camera& cam,
                             const RasterConfig& cfg) {
    if (scene.gaussians.empty()) throw Error(ErrorCode::EmptyScene, "cannot render an empty scene");
    RenderContext ctx;
    ctx.camera = cam;
    ctx.config = cfg;
    ctx.sorted.reserve(scene.size());
    for (int i = 0; i < static_cast<int>(scene.size()); ++i) {
        auto p = project_impl(scene.gaussians[i], cam, cfg, nullptr);
        if (p) {
            p->source_index = i;
            ctx.sorted.push_back(*p);
        }
    }
    std::sort(ctx.sorted.begin(), ctx.sorted.end(), [](const ProjectedGaussian& a, const ProjectedGaussian& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.source_index < b.source_index; // equal depths tie-break by index
    });
    ctx.tiles = tile_bin(ctx.sorted, cam, cfg);
    return ctx;
}

ImageRGB render(const GaussianScene& scene, const Camera& cam, const RasterConfig& cfg) {
    RenderContext ctx = prepare_render(scene, cam, cfg);
    ImageRGB img(cam.width, cam.height);
    const int n_tiles = ctx.tiles.tiles_x * ctx.tiles.tiles_y;
    parallel_tiles(n_tiles, thread_count(cfg), [&](int lo, int hi) {
        for (int tile = lo; tile < hi; ++tile) {
            const auto& list = ctx.tiles.lists[tile];
            const int tx = tile % ctx.tiles.tiles_x, ty = tile / ctx.tiles.tiles_x;
            const int c0 = tx * cfg.tile_size, c1 = std::min(cam.width, c0 + cfg.tile_size);
            const int r0 = ty * cfg.tile_size, r1 = std::min(cam.height, r0 + cfg.tile_size);
            for (int r = r0; r < r1; ++r)
                for (int c = c0; c < c1; ++c) {
                    const Vec3 out = composite_pixel(
                        c + 0.5, r + 0.5, static_cast<int>(list.size()),
                        [&](int k) -> const ProjectedGaussian& { return ctx.sorted[list[k]]; },
                        cfg, scene.background_color, nullptr);
                    img.at(r, c, 0) = out.x;
                    img.at(r, c, 1) = out.y;
                    img.at(r, c, 2) = out.z;
                }
        }
    });
    return img;
}

ImageRGB render_untiled(const GaussianScene& scene, const Camera& cam, const RasterConfig& cfg) {
    RenderContext ctx = prepare_render(scene, cam, cfg);
    ImageRGB img(cam.width, cam.height);
    for (int r = 0; r < cam.height; ++r)
        for (int c = 0; c < cam.width; ++c) {
            const Vec3 out = composite_pixel(
                c + 0.5, r + 0.5, static_cast<int>(ctx.sorted.size()),
                [&](int k) -> const ProjectedGaussian& { return ctx.sorted[k]; }, cfg,
                scene.background_color, nullptr);
            img.at(r, c, 0) = out.x;
            img.at(r, c, 1) = out.y;
            img.at(r, c, 2) = out.z;
        }
    return img;
}

namespace {

// Per-splat screen-space gradient accumulator.
struct ScreenGrad {
    Vec2 d_mean2d;
    double d_cov2d[2][2] = {{0, 0}, {0, 0}};
    Vec3 d_color;
    double d_opacity_logit = 0.0;
};

// Chains one splat's accumulated screen-space gradients back to its 3D
// parameters. Mirrors the forward computation in project_impl.
void chain_to_parameters(const Gaussian3D& g, const Camera& cam, const ScreenGrad& sg,
                         std::size_t i, RenderGradients& out) {
    const Vec3 t = cam.world_to_camera(g.position);
    const Quat q_hat = g.rotation.normalized();
    const Mat3 rot = rotation_from_unit_quat(q_hat);
    const Vec3 s = g.scale();
    Mat3 m = rot;
    for (int r = 0; r < 3; ++r) {
        m(r, 0) *= s.x;
        m(r, 1) *= s.y;
        m(r, 2) *= s.z;
    }
    const Mat3 cov3d = m * m.transposed();

    double j[2][3];
    perspective_jacobian(cam, t, j);
    double a[2][3];
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c)
            a[r][c] = j[r][0] * cam.rotation(0, c) + j[r][1] * cam.rotation(1, c) +
                      j[r][2] * cam.rotation(2, c);

    // dL/dV (3x3) = a^T G a, with G the full 2x2 screen-covariance gradient
    const double(&g2)[2][2] = sg.d_cov2d;
    Mat3 d_cov3d;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double acc = 0;
            for (int u = 0; u < 2; ++u)
                for (int v = 0; v < 2; ++v) acc += a[u][r] * g2[u][v] * a[v][c];
            d_cov3d(r, c) = acc;
        }

    // dL/dA = (G + G^T) A V
    double gsym[2][2] = {{2 * g2[0][0], g2[0][1] + g2[1][0]}, {g2[0][1] + g2[1][0], 2 * g2[1][1]}};
    double d_a[2][3];
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) {
            double acc = 0;
            for (int u = 0; u < 2; ++u)
                for (int v = 0; v < 3; ++v) acc += gsym[r][u] * a[u][v] * cov3d(v, c);
            d_a[r][c] = acc;
        }
    // dL/dJ = dL/dA * R_cam^T
    double d_j[2][3];
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c)
            d_j[r][c] = d_a[r][0] * cam.rotation(c, 0) + d_a[r][1] * cam.rotation(c, 1) +
                        d_a[r][2] * cam.rotation(c, 2);

    // camera-frame position gradient: mean2d path (Jacobian of the pinhole map
    // is exactly J) plus the dependence of J itself on t
    const double inv_z = 1.0 / t.z, inv_z2 = inv_z * inv_z, inv_z3 = inv_z2 * inv_z;
    Vec3 d_t{
        j[0][0] * sg.d_mean2d.x + j[1][0] * sg.d_mean2d.y,
        j[0][1] * sg.d_mean2d.x + j[1][1] * sg.d_mean2d.y,
        j[0][2] * sg.d_mean2d.x + j[1][2] * sg.d_mean2d.y,
    };
    d_t.x += d_j[0][2] * (-cam.fx * inv_z2);
    d_t.y += d_j[1][2] * (-cam.fy * inv_z2);
    d_t.z += d_j[0][0] * (-cam.fx * inv_z2) + d_j[1][1] * (-cam.fy * inv_z2) +
             d_j[0][2] * (2.0 * cam.fx * t.x * inv_z3) + d_j[1][2] * (2.0 * cam.fy * t.y * inv_z3);
    out.position[i] += cam.rotation.transposed() * d_t;

    // dL/dM = (dV + dV^T) M, then split into rotation and scale parts
    Mat3 d_m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double acc = 0;
            for (int k = 0; k < 3; ++k) acc += (d_cov3d(r, k) + d_cov3d(k, r)) * m(k, c);
            d_m(r, c) = acc;
        }
    const double sv[3] = {s.x, s.y, s.z};
    for (int k = 0; k < 3; ++k) {
        double d_scale = rot(0, k) * d_m(0, k) + rot(1, k) * d_m(1, k) + rot(2, k) * d_m(2, k);
        double d_log = d_scale * sv[k];
        if (k == 0) out.log_scale[i].x += d_log;
        if (k == 1) out.log_scale[i].y += d_log;
        if (k == 2) out.log_scale[i].z += d_log;
    }
    Mat3 d_rot;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) d_rot(r, c) = d_m(r, c) * sv[c];

    // dR/dq_hat contraction, unit-quaternion rotation formula
    const double w = q_hat.w, x = q_hat.x, y = q_hat.y, z = q_hat.z;
    const auto contract = [&](const Mat3& dr) {
        double acc = 0;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) acc += d_rot(r, c) * dr(r, c);
        return acc;
    };
    Mat3 dw, dx, dy, dz;
    dw.m = {0, -2 * z, 2 * y, 2 * z, 0, -2 * x, -2 * y, 2 * x, 0};
    dx.m = {0, 2 * y, 2 * z, 2 * y, -4 * x, -2 * w, 2 * z, 2 * w, -4 * x};
    dy.m = {-4 * y, 2 * x, 2 * w, 2 * x, 0, 2 * z, -2 * w, 2 * z, -4 * y};
    dz.m = {-4 * z, -2 * w, 2 * x, 2 * w, -4 * z, 2 * y, 2 * x, 2 * y, 0};
    const double dq_hat[4] = {contract(dw), contract(dx), contract(dy), contract(dz)};

    // through the normalization q_hat = q / |q|
    const double qn = g.rotation.norm();
    const double qh[4] = {w, x, y, z};
    double dot = 0;
    for (int k = 0; k < 4; ++k) dot += dq_hat[k] * qh[k];
    for (int k = 0; k < 4; ++k) out.rotation[i][k] += (dq_hat[k] - dot * qh[k]) / qn;

    out.color[i] += sg.d_color;
    out.opacity_logit[i] += sg.d_opacity_logit;
}

} // namespace

RenderGradients render_backward(const GaussianScene& scene, const Camera& cam,
                                const ImageRGB& upstream, const RasterConfig& cfg) {
    if (upstream.width != cam.width || upstream.height != cam.height)
        throw Error(ErrorCode::MismatchedForward, "upstream gradient shape does not match camera");
    RenderContext ctx = prepare_render(scene, cam, cfg);
    const int n_tiles = ctx.tiles.tiles_x * ctx.tiles.tiles_y;

    // per-tile accumulators indexed by position in the tile list; merged in
    // fixed tile order afterwards so results do not depend on the thread count
    std::vector<std::vector<ScreenGrad>> tile_grads(n_tiles);

    parallel_tiles(n_tiles, thread_count(cfg), [&](int lo, int hi) {
        std::vector<Contribution> contribs;
        for (int tile = lo; tile < hi; ++tile) {
            const auto& list = ctx.tiles.lists[tile];
            tile_grads[tile].assign(list.size(), ScreenGrad{});
            if (list.empty()) continue;
            const int tx = tile % ctx.tiles.tiles_x, ty = tile / ctx.tiles.tiles_x;
            const int c0 = tx * cfg.tile_size, c1 = std::min(cam.width, c0 + cfg.tile_size);
            const int r0 = ty * cfg.tile_size, r1 = std::min(cam.height, r0 + cfg.tile_size);
            for (int r = r0; r < r1; ++r)
                for (int c = c0; c < c1; ++c) {
                    contribs.clear();
                    composite_pixel(
                        c + 0.5, r + 0.5, static_cast<int>(list.size()),
                        [&](int k) -> const ProjectedGaussian& { return ctx.sorted[list[k]]; },
                        cfg, scene.background_color, &contribs);
                    if (contribs.empty()) continue;
                    const Vec3 up{upstream.at(r, c, 0), upstream.at(r, c, 1), upstream.at(r, c, 2)};

                    // walk back to front; behind[] is the color composited
                    // behind the current splat, starting from the background
                    double t_final = contribs.back().t_before * (1.0 - contribs.back().alpha);
                    Vec3 behind = scene.background_color * t_final;
                    for (int k = static_cast<int>(contribs.size()) - 1; k >= 0; --k) {
                        const Contribution& cb = contribs[k];
                        const ProjectedGaussian& pg = ctx.sorted[list[cb.slot]];
                        ScreenGrad& acc = tile_grads[tile][cb.slot];

                        const Vec3 d_alpha_vec = pg.color * cb.t_before - behind * (1.0 / (1.0 - cb.alpha));
                        const double d_alpha = up.dot(d_alpha_vec);
                        acc.d_color += up * (cb.alpha * cb.t_before);
                        behind += pg.color * (cb.alpha * cb.t_before);

                        if (cb.weight >= cfg.alpha_max) continue; // clamped: no flow into weight
                        const double d_weight = d_alpha;
                        const double d_opacity = d_weight * std::exp(-cb.power);
                        acc.d_opacity_logit += d_opacity * pg.opacity * (1.0 - pg.opacity);
                        const double d_power = -cb.weight * d_weight;
                        // d(power)/dd = inv_cov * d; mean2d moves opposite to d
                        const Vec2 invd = pg.inv_cov * cb.d;
                        acc.d_mean2d.x -= d_power * invd.x;
                        acc.d_mean2d.y -= d_power * invd.y;
                        // d(power)/dinv = 1/2 d d^T, then dL/dcov = -inv dL/dinv inv
                        const double di[2][2] = {
                            {0.5 * d_power * cb.d.x * cb.d.x, 0.5 * d_power * cb.d.x * cb.d.y},
                            {0.5 * d_power * cb.d.y * cb.d.x, 0.5 * d_power * cb.d.y * cb.d.y}};
                        const double ic[2][2] = {{pg.inv_cov.a, pg.inv_cov.b},
                                                 {pg.inv_cov.c, pg.inv_cov.d}};
                        for (int u = 0; u < 2; ++u)
                            for (int v = 0; v < 2; ++v) {
                                double acc2 = 0;
                                for (int p2 = 0; p2 < 2; ++p2)
                                    for (int q2 = 0; q2 < 2; ++q2)
                                        acc2 += ic[u][p2] * di[p2][q2] * ic[q2][v];
                                acc.d_cov2d[u][v] -= acc2;
                            }
                    }
                }
        }
    });

    // deterministic merge: tile order, then list order within each tile
    std::vector<ScreenGrad> merged(ctx.sorted.size());
    for (int tile = 0; tile < n_tiles; ++tile) {
        const auto& list = ctx.tiles.lists[tile];
        for (std::size_t k = 0; k < list.size(); ++k) {
            const ScreenGrad& sgt = tile_grads[tile][k];
            ScreenGrad& dst = merged[list[k]];
            dst.d_mean2d = dst.d_mean2d + sgt.d_mean2d;
            for (int u = 0; u < 2; ++u)
                for (int v = 0; v < 2; ++v) dst.d_cov2d[u][v] += sgt.d_cov2d[u][v];
            dst.d_color += sgt.d_color;
            dst.d_opacity_logit += sgt.d_opacity_logit;
        }
    }

    RenderGradients out(scene.size());
    for (std::size_t k = 0; k < ctx.sorted.size(); ++k) {
        const int src = ctx.sorted[k].source_index;
        chain_to_parameters(scene.gaussians[src], cam, merged[k], src, out);
    }
    return out;
}

} // namespace splatstyle
