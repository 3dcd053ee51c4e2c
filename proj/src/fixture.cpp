// SPDX-License-Identifier: Apache-2.0
#include "splatstyle/fixture.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "splatstyle/io/colmap_io.hpp"
#include "splatstyle/io/ply_io.hpp"
#include "splatstyle/io/png_io.hpp"
#include "splatstyle/rng.hpp"

namespace splatstyle {

namespace {

// Rounds to float32 through a volatile store. The fixture promises exactly
// float-representable parameters (so the PLY interchange is lossless), and
// gcc's SLP vectorizer at -O3 otherwise drops grouped double->float->double
// narrowing chains.
double f32_exact(double v) {
    volatile float f = static_cast<float>(v);
    return static_cast<double>(f);
}

} // namespace

GaussianScene fixture_scene(const FixtureSpec& spec) {
    Rng rng(derive_seed(spec.seed, "fixture.scene"));
    GaussianScene scene;
    scene.background_color = {1.0, 1.0, 1.0};
    scene.gaussians.reserve(spec.gaussians);
    for (int i = 0; i < spec.gaussians; ++i) {
        Gaussian3D g;
        g.position = {f32_exact(rng.normal() * 0.6), f32_exact(rng.normal() * 0.6),
                      f32_exact(rng.normal() * 0.6)};
        Quat q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
        q = q.normalized();
        g.rotation = {f32_exact(q.w), f32_exact(q.x), f32_exact(q.y), f32_exact(q.z)};
        const double lo = std::log(0.05), hi = std::log(0.18);
        g.log_scale = {f32_exact(rng.uniform(lo, hi)), f32_exact(rng.uniform(lo, hi)),
                       f32_exact(rng.uniform(lo, hi))};
        g.opacity_logit = f32_exact(rng.uniform(0.5, 2.5));
        // colors derived from float32 f_dc values so the PLY mapping inverts exactly
        for (int ch = 0; ch < 3; ++ch) {
            const double f_dc = f32_exact(rng.uniform(-1.2, 1.2));
            const double c = kSh0Scale * f_dc + 0.5;
            if (ch == 0) g.color.x = c;
            if (ch == 1) g.color.y = c;
            if (ch == 2) g.color.z = c;
        }
        scene.gaussians.push_back(g);
    }
    return scene;
}

std::vector<Camera> fixture_cameras(const FixtureSpec& spec) {
    std::vector<Camera> cams;
    cams.reserve(spec.cameras);
    const double radius = 4.0;
    const double height = 0.8;
    for (int i = 0; i < spec.cameras; ++i) {
        const double angle = 2.0 * M_PI * i / spec.cameras;
        const Vec3 pos{radius * std::cos(angle), radius * std::sin(angle), height};
        const Vec3 target{0, 0, 0};
        const Vec3 up{0, 0, 1};

        Vec3 fwd = target - pos;
        fwd = fwd * (1.0 / fwd.norm());
        Vec3 right{fwd.y * up.z - fwd.z * up.y, fwd.z * up.x - fwd.x * up.z,
                   fwd.x * up.y - fwd.y * up.x};
        right = right * (1.0 / right.norm());
        const Vec3 down{fwd.y * right.z - fwd.z * right.y, fwd.z * right.x - fwd.x * right.z,
                        fwd.x * right.y - fwd.y * right.x};

        Camera cam;
        cam.rotation.m = {right.x, right.y, right.z, down.x, down.y, down.z, fwd.x, fwd.y, fwd.z};
        cam.translation = (cam.rotation * pos) * -1.0;
        cam.width = cam.height = spec.resolution;
        cam.fx = cam.fy = spec.resolution; // ~53 degree field of view
        cam.cx = cam.cy = spec.resolution / 2.0;
        cams.push_back(cam);
    }
    return cams;
}

ImageRGB fixture_style_image(const FixtureSpec& spec) {
    Rng rng(derive_seed(spec.seed, "fixture.style"));
    const int n = spec.resolution;
    ImageRGB img(n, n);
    // diagonal stripes through a small seeded palette, plus two soft blobs
    const int palette_size = 5;
    std::vector<Vec3> palette(palette_size);
    for (Vec3& c : palette) c = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
    const double bx = rng.uniform(0.2, 0.8) * n, by = rng.uniform(0.2, 0.8) * n;
    const Vec3 blob_color{rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)};
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const Vec3 base = palette[((r + c) / 6) % palette_size];
            const double d2 = ((c - bx) * (c - bx) + (r - by) * (r - by)) / (0.02 * n * n);
            const double blob = std::exp(-d2);
            for (int ch = 0; ch < 3; ++ch)
                img.at(r, c, ch) = std::min(1.0, base[ch] * (1.0 - blob) + blob_color[ch] * blob);
        }
    return img;
}

void write_fixture(const std::filesystem::path& dir, const FixtureSpec& spec) {
    std::filesystem::create_directories(dir);
    save_ply(fixture_scene(spec), dir / "scene.ply");

    const auto cams = fixture_cameras(spec);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < cams.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "view_%03zu.png", i);
        names.emplace_back(buf);
    }
    save_colmap(dir / "colmap", cams, names);
    write_png(dir / "style.png", fixture_style_image(spec));
}

} // namespace splatstyle
