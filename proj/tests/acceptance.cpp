// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one pass/fail line per criterion. Exercise the library
// kernels directly and the CLI end to end; exits nonzero if any criterion
// fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "splatstyle/diffusion.hpp"
#include "splatstyle/error.hpp"
#include "splatstyle/fixture.hpp"
#include "splatstyle/grouping.hpp"
#include "splatstyle/io/atomic_file.hpp"
#include "splatstyle/io/colmap_io.hpp"
#include "splatstyle/io/ply_io.hpp"
#include "splatstyle/losses.hpp"
#include "splatstyle/metrics.hpp"
#include "splatstyle/pipeline.hpp"
#include "splatstyle/raster.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace splatstyle;
using namespace testutil;

namespace {

struct Failure {
    std::ostringstream msg;
};

#define REQUIRE_MSG(cond, ...)                         \
    do {                                               \
        if (!(cond)) {                                 \
            char buf[512];                             \
            std::snprintf(buf, sizeof(buf), __VA_ARGS__); \
            Failure f;                                 \
            f.msg << buf;                              \
            throw f;                                   \
        }                                              \
    } while (0)

int g_failures = 0;

void criterion(int number, const char* name, const std::function<void()>& body) {
    const auto start = std::chrono::steady_clock::now();
    try {
        body();
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[PASS] criterion %2d: %s (%.1fs)\n", number, name, secs);
    } catch (const Failure& f) {
        ++g_failures;
        std::printf("[FAIL] criterion %2d: %s -- %s\n", number, name, f.msg.str().c_str());
    } catch (const std::exception& e) {
        ++g_failures;
        std::printf("[FAIL] criterion %2d: %s -- exception: %s\n", number, name, e.what());
    }
}

struct CommandResult {
    int exit_code = -1;
    std::string output;
};

CommandResult run_command(const std::string& cmd) {
    CommandResult res;
    FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
    if (!pipe) return res;
    char buf[4096];
    while (std::fgets(buf, sizeof(buf), pipe)) res.output += buf;
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

bool images_bit_equal(const ImageRGB& a, const ImageRGB& b) {
    return a.same_shape(b) && std::memcmp(a.px.data(), b.px.data(), a.px.size() * sizeof(double)) == 0;
}

bool mats_equal(const Mat& a, const Mat& b) {
    return a.same_shape(b) && std::memcmp(a.v.data(), b.v.data(), a.v.size() * sizeof(double)) == 0;
}

double max_abs_diff(const Mat& a, const Mat& b) {
    double mx = 0;
    for (std::size_t i = 0; i < a.v.size(); ++i) mx = std::max(mx, std::abs(a.v[i] - b.v[i]));
    return mx;
}

std::string g_cli;
fs::path g_work;

// ---------------------------------------------------------------------------

void criterion_gradients() {
    const auto start = std::chrono::steady_clock::now();
    RasterConfig cfg;
    int total_params = 0;
    for (int scene_idx = 0; scene_idx < 50; ++scene_idx) {
        Rng rng(derive_seed(1000, "acceptance.grad", scene_idx));
        const Camera cam = orbit_camera(rng, 16, 16);
        const int n = 5 + static_cast<int>(rng.index(16)); // 5..20 Gaussians
        GaussianScene scene = gradcheck_scene(rng, cam, n);
        const ImageRGB upstream = random_image(rng, 16, 16);
        const int mismatches = count_gradient_mismatches(scene, cam, upstream, cfg);
        total_params += n * 14;
        REQUIRE_MSG(mismatches == 0, "scene %d: %d gradient mismatches", scene_idx, mismatches);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    REQUIRE_MSG(secs < 120.0, "gradient suite took %.1fs (budget 120s)", secs);
    std::printf("       checked %d parameters over 50 scenes\n", total_params);
}

void criterion_compositing() {
    RasterConfig cfg;
    for (int scene_idx = 0; scene_idx < 20; ++scene_idx) {
        Rng rng(derive_seed(2000, "acceptance.composite", scene_idx));
        const Camera cam = orbit_camera(rng, 48, 48);
        GaussianScene scene = gradcheck_scene(rng, cam, 18);
        const ImageRGB tiled = render(scene, cam, cfg);
        const ImageRGB untiled = render_untiled(scene, cam, cfg);
        REQUIRE_MSG(images_bit_equal(tiled, untiled), "scene %d: tiled != untiled", scene_idx);
        for (double v : tiled.px)
            REQUIRE_MSG(v >= 0.0 && v <= 1.0, "scene %d: pixel %f out of [0,1]", scene_idx, v);

        // transmittance walk along the sorted order at every pixel
        const RenderContext ctx = prepare_render(scene, cam, cfg);
        const double cutoff = 0.5 * cfg.cutoff_sigma * cfg.cutoff_sigma;
        for (int r = 0; r < cam.height; ++r)
            for (int c = 0; c < cam.width; ++c) {
                double t = 1.0;
                for (const ProjectedGaussian& p : ctx.sorted) {
                    if (c < p.col_min || c > p.col_max || r < p.row_min || r > p.row_max) continue;
                    const double dx = c + 0.5 - p.mean2d.x, dy = r + 0.5 - p.mean2d.y;
                    const double power = 0.5 * (p.inv_cov.a * dx * dx +
                                                (p.inv_cov.b + p.inv_cov.c) * dx * dy +
                                                p.inv_cov.d * dy * dy);
                    if (power > cutoff) continue;
                    const double alpha = std::min(p.opacity * std::exp(-power), cfg.alpha_max);
                    const double next = t * (1.0 - alpha);
                    REQUIRE_MSG(next <= t && next >= 0.0 && next <= 1.0,
                                "transmittance not monotone in [0,1]");
                    t = next;
                    if (t < cfg.min_transmittance) break;
                }
            }
    }
}

void criterion_nv_attention() {
    Rng rng(derive_seed(3000, "acceptance.nv"));
    // (a) singleton group == plain self-attention, bit-exact
    for (int trial = 0; trial < 20; ++trial) {
        const Mat q = Mat::seeded_normal(6, 16, rng.next_u64(), 1.0);
        const Mat k = Mat::seeded_normal(5, 16, rng.next_u64(), 1.0);
        const Mat v = Mat::seeded_normal(5, 16, rng.next_u64(), 1.0);
        const auto out = nv_attention({q}, {k}, {v});
        const int d = q.cols;
        Mat expected(q.rows, v.cols);
        for (int qr = 0; qr < q.rows; ++qr) {
            std::vector<double> score(k.rows);
            double mx = -1e300;
            for (int kr = 0; kr < k.rows; ++kr) {
                double s = 0;
                for (int c = 0; c < d; ++c) s += q(qr, c) * k(kr, c);
                score[kr] = s / std::sqrt(static_cast<double>(d));
                mx = std::max(mx, score[kr]);
            }
            double denom = 0;
            for (double& s : score) {
                s = std::exp(s - mx);
                denom += s;
            }
            for (int kr = 0; kr < k.rows; ++kr)
                for (int c = 0; c < v.cols; ++c) expected(qr, c) += score[kr] / denom * v(kr, c);
        }
        REQUIRE_MSG(mats_equal(out[0], expected), "singleton group != self-attention (trial %d)", trial);
    }
    // (b) permutation of group order moves nothing beyond 1e-6
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Mat> q, k, v;
        for (int j = 0; j < 4; ++j) {
            q.push_back(Mat::seeded_normal(3, 16, rng.next_u64(), 1.0));
            k.push_back(Mat::seeded_normal(3, 16, rng.next_u64(), 1.0));
            v.push_back(Mat::seeded_normal(3, 16, rng.next_u64(), 1.0));
        }
        const auto base = nv_attention(q, k, v);
        const std::vector<Mat> kp{k[3], k[1], k[0], k[2]};
        const std::vector<Mat> vp{v[3], v[1], v[0], v[2]};
        const auto perm = nv_attention(q, kp, vp);
        for (int j = 0; j < 4; ++j)
            REQUIRE_MSG(max_abs_diff(base[j], perm[j]) <= 1e-6, "permutation moved view %d by %g", j,
                        max_abs_diff(base[j], perm[j]));
    }
    // (c) N_g = 2 hand-sized case vs dense softmax oracle at 1e-12
    for (int trial = 0; trial < 50; ++trial) {
        Mat q(2, 4), k1(2, 4), v1(2, 4), k2(2, 4), v2(2, 4);
        for (Mat* m : {&q, &k1, &v1, &k2, &v2})
            for (double& x : m->v) x = rng.uniform(-1.5, 1.5);
        const auto out = nv_attention({q, q}, {k1, k2}, {v1, v2});
        for (int qr = 0; qr < 2; ++qr) {
            double scores[4];
            for (int j = 0; j < 4; ++j) {
                const Mat& k = j < 2 ? k1 : k2;
                double s = 0;
                for (int c = 0; c < 4; ++c) s += q(qr, c) * k(j % 2, c);
                scores[j] = s / 2.0;
            }
            const double mx = std::max(std::max(scores[0], scores[1]), std::max(scores[2], scores[3]));
            double w[4], denom = 0;
            for (int j = 0; j < 4; ++j) {
                w[j] = std::exp(scores[j] - mx);
                denom += w[j];
            }
            for (int c = 0; c < 4; ++c) {
                double expected = 0;
                for (int j = 0; j < 4; ++j) expected += w[j] / denom * (j < 2 ? v1 : v2)(j % 2, c);
                REQUIRE_MSG(std::abs(out[0](qr, c) - expected) <= 1e-12,
                            "dense oracle mismatch %g", std::abs(out[0](qr, c) - expected));
            }
        }
    }
}

void criterion_ddim() {
    Rng rng(derive_seed(4000, "acceptance.ddim"));
    SchedulerConfig sched;
    for (int draw = 0; draw < 1000; ++draw) {
        const double a_t = rng.uniform(0.02, 1.0);
        const double a_next = rng.uniform(0.01, a_t);
        LatentGrid z;
        z.grid_h = 2;
        z.grid_w = 2;
        z.tokens = Mat::seeded_normal(4, 8, rng.next_u64(), 1.0);
        const Mat eps = Mat::seeded_normal(4, 8, rng.next_u64(), 1.0);
        const Mat zero(4, 8);

        // identity 1: eps = 0 scaling, exact
        sched.alphas = {a_t, a_next};
        const LatentGrid scaled = ddim_step(z, zero, 0, sched);
        const double ratio = std::sqrt(a_next / a_t);
        for (std::size_t i = 0; i < scaled.tokens.v.size(); ++i)
            REQUIRE_MSG(scaled.tokens.v[i] == ratio * z.tokens.v[i], "eps=0 identity violated");

        // identity 2: alpha fixed point, exact
        sched.alphas = {a_t, a_t};
        const LatentGrid fixed = ddim_step(z, eps, 0, sched);
        for (std::size_t i = 0; i < fixed.tokens.v.size(); ++i)
            REQUIRE_MSG(fixed.tokens.v[i] == z.tokens.v[i], "fixed-point identity violated");

        // general case vs per-element formula oracle
        sched.alphas = {a_t, a_next};
        const LatentGrid step = ddim_step(z, eps, 0, sched);
        for (std::size_t i = 0; i < step.tokens.v.size(); ++i) {
            const double expected =
                std::sqrt(a_next) * (z.tokens.v[i] - std::sqrt(1 - a_t) * eps.v[i]) / std::sqrt(a_t) +
                std::sqrt(1 - a_next) * eps.v[i];
            REQUIRE_MSG(std::abs(step.tokens.v[i] - expected) <= 1e-12, "oracle mismatch %g",
                        std::abs(step.tokens.v[i] - expected));
        }
    }
}

void criterion_nnfm() {
    Rng rng(derive_seed(5000, "acceptance.nnfm"));
    auto random_features = [&](int h, int w, int c) {
        FeatureMap f(h, w, c);
        for (double& v : f.data) v = rng.uniform(-1.0, 1.0);
        return f;
    };
    auto oracle = [](const FeatureMap& fr, const FeatureMap& fs) {
        double total = 0;
        for (int i = 0; i < fr.positions(); ++i) {
            double best = 1e300;
            for (int j = 0; j < fs.positions(); ++j) {
                double dot = 0, na = 0, nb = 0;
                for (int k = 0; k < fr.channels; ++k) {
                    const double a = fr.data[static_cast<std::size_t>(i) * fr.channels + k];
                    const double b = fs.data[static_cast<std::size_t>(j) * fs.channels + k];
                    dot += a * b;
                    na += a * a;
                    nb += b * b;
                }
                best = std::min(best, 1.0 - dot / (std::sqrt(na) * std::sqrt(nb)));
            }
            total += best;
        }
        return total / fr.positions();
    };
    auto min_margin = [](const FeatureMap& fr, const FeatureMap& fs) {
        double margin = 1e300;
        for (int i = 0; i < fr.positions(); ++i) {
            double best = 1e300, second = 1e300;
            for (int j = 0; j < fs.positions(); ++j) {
                double dot = 0, na = 0, nb = 0;
                for (int k = 0; k < fr.channels; ++k) {
                    const double a = fr.data[static_cast<std::size_t>(i) * fr.channels + k];
                    const double b = fs.data[static_cast<std::size_t>(j) * fs.channels + k];
                    dot += a * b;
                    na += a * a;
                    nb += b * b;
                }
                const double dist = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
                if (dist < best) {
                    second = best;
                    best = dist;
                } else {
                    second = std::min(second, dist);
                }
            }
            margin = std::min(margin, second - best);
        }
        return margin;
    };

    // zero on identical maps
    for (int trial = 0; trial < 10; ++trial) {
        const FeatureMap f = random_features(3, 3, 4);
        REQUIRE_MSG(std::abs(nnfm_loss(f, f).loss) <= 1e-12, "nonzero on identical maps");
    }
    // 100 oracle comparisons
    for (int trial = 0; trial < 100; ++trial) {
        const FeatureMap fr = random_features(3, 3, 4);
        const FeatureMap fs = random_features(3, 3, 4);
        const double got = nnfm_loss(fr, fs).loss;
        REQUIRE_MSG(std::abs(got - oracle(fr, fs)) <= 1e-12, "oracle mismatch %g",
                    std::abs(got - oracle(fr, fs)));
    }
    // invariances
    for (int trial = 0; trial < 20; ++trial) {
        const FeatureMap fr = random_features(3, 3, 4);
        FeatureMap fs = random_features(3, 3, 4);
        const double base = nnfm_loss(fr, fs).loss;
        FeatureMap reversed = fs;
        for (int i = 0; i < fs.positions(); ++i)
            for (int k = 0; k < 4; ++k)
                reversed.data[static_cast<std::size_t>(fs.positions() - 1 - i) * 4 + k] =
                    fs.data[static_cast<std::size_t>(i) * 4 + k];
        REQUIRE_MSG(nnfm_loss(fr, reversed).loss == base, "style permutation changed the loss");
        FeatureMap rescaled = fs;
        for (int i = 0; i < fs.positions(); ++i) {
            const double s = rng.uniform(0.2, 5.0);
            for (int k = 0; k < 4; ++k) rescaled.data[static_cast<std::size_t>(i) * 4 + k] *= s;
        }
        REQUIRE_MSG(std::abs(nnfm_loss(fr, rescaled).loss - base) <= 1e-12,
                    "per-vector rescaling changed the loss");
    }
    // gradient vs finite differences, away from argmin ties
    int checked = 0;
    for (int trial = 0; trial < 40 && checked < 10; ++trial) {
        FeatureMap fr = random_features(3, 3, 4);
        const FeatureMap fs = random_features(3, 3, 4);
        if (min_margin(fr, fs) < 1e-3) continue;
        ++checked;
        const NnfmResult res = nnfm_loss(fr, fs);
        const double h = 1e-5;
        for (std::size_t i = 0; i < fr.data.size(); ++i) {
            const double orig = fr.data[i];
            fr.data[i] = orig + h;
            const double fp = nnfm_loss(fr, fs).loss;
            fr.data[i] = orig - h;
            const double fm = nnfm_loss(fr, fs).loss;
            fr.data[i] = orig;
            REQUIRE_MSG(grad_close(res.grad.data[i], (fp - fm) / (2 * h)),
                        "gradient mismatch at entry %zu", i);
        }
    }
    REQUIRE_MSG(checked >= 10, "not enough tie-free samples");
}

void criterion_grouping() {
    Rng rng(derive_seed(6000, "acceptance.group"));
    auto camera_at = [](const Vec3& c) {
        Camera cam;
        cam.translation = c * -1.0;
        cam.width = cam.height = 8;
        cam.fx = cam.fy = 8;
        return cam;
    };
    // partition & size invariants on 200 random sets
    for (int trial = 0; trial < 200; ++trial) {
        const int n_cams = 1 + static_cast<int>(rng.index(40));
        const int n = 1 + static_cast<int>(rng.index(20));
        std::vector<Camera> cams;
        for (int i = 0; i < n_cams; ++i)
            cams.push_back(camera_at({rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)}));
        const auto groups = group_views(cams, n);
        std::vector<int> seen(n_cams, 0);
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            if (gi + 1 < groups.size())
                REQUIRE_MSG(static_cast<int>(groups[gi].view_indices.size()) == n,
                            "non-final group of wrong size");
            for (int v : groups[gi].view_indices) ++seen[v];
        }
        for (int v : seen) REQUIRE_MSG(v == 1, "partition property violated");
    }
    // two clusters of size N never straddle
    const int n = 15;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Camera> cams;
        for (int i = 0; i < 2 * n; ++i) {
            const Vec3 base = i < n ? Vec3{0, 0, 0} : Vec3{50, 0, 0};
            cams.push_back(
                camera_at(base + Vec3{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}));
        }
        const auto groups = group_views(cams, n);
        REQUIRE_MSG(groups.size() == 2, "expected exactly two groups");
        for (const auto& g : groups)
            for (int v : g.view_indices)
                REQUIRE_MSG((v < n) == (g.view_indices[0] < n), "group straddles the clusters");

        // beats 100/100 uniformly random equal-size partitions
        const double ours = mean_within_group_distance(cams, groups);
        std::vector<int> perm(cams.size());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
        for (int t = 0; t < 100; ++t) {
            for (std::size_t k = perm.size(); k > 1; --k) std::swap(perm[k - 1], perm[rng.index(k)]);
            std::vector<ViewGroup> random_groups(2);
            for (int i = 0; i < 2 * n; ++i) random_groups[i / n].view_indices.push_back(perm[i]);
            REQUIRE_MSG(ours <= mean_within_group_distance(cams, random_groups),
                        "random partition beat the greedy grouping");
        }
    }
}

void criterion_metrics() {
    Rng rng(derive_seed(7000, "acceptance.metrics"));
    const FeatureExtractor ext = FeatureExtractor::seeded(derive_seed(7, "extractor"));
    for (int trial = 0; trial < 5; ++trial) {
        const ImageRGB img = random_image(rng, 16, 16);
        REQUIRE_MSG(std::abs(cfsd(img, img, ext)) <= 1e-9, "cfsd(x,x) != 0");
    }
    // 2x2 oracle
    {
        FeatureMap fc(2, 2, 2), fs(2, 2, 2);
        for (double& v : fc.data) v = rng.uniform(-1, 1);
        for (double& v : fs.data) v = rng.uniform(-1, 1);
        const double got = cfsd_features(fc, fs);
        auto rows = [](const FeatureMap& f, double s[4][4]) {
            for (int i = 0; i < 4; ++i) {
                double mx = -1e300;
                for (int j = 0; j < 4; ++j) {
                    s[i][j] = f.data[i * 2] * f.data[j * 2] + f.data[i * 2 + 1] * f.data[j * 2 + 1];
                    mx = std::max(mx, s[i][j]);
                }
                double denom = 0;
                for (int j = 0; j < 4; ++j) {
                    s[i][j] = std::exp(s[i][j] - mx);
                    denom += s[i][j];
                }
                for (int j = 0; j < 4; ++j) s[i][j] /= denom;
            }
        };
        double sc[4][4], scs[4][4];
        rows(fc, sc);
        rows(fs, scs);
        double expected = 0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) expected += sc[i][j] * std::log(sc[i][j] / scs[i][j]);
        expected /= 4.0;
        REQUIRE_MSG(std::abs(got - expected) <= 1e-12, "2x2 cfsd oracle mismatch %g",
                    std::abs(got - expected));
    }
    // csd / clip-dc invariances
    for (int trial = 0; trial < 20; ++trial) {
        Descriptor a, b;
        for (int k = 0; k < 6; ++k) {
            a.values.push_back(rng.uniform(-1, 1));
            b.values.push_back(rng.uniform(-1, 1));
        }
        const double base = csd_score(a, b);
        Descriptor a_scaled = a;
        for (double& v : a_scaled.values) v *= 7.5;
        REQUIRE_MSG(std::abs(csd_score(a_scaled, b) - base) <= 1e-12, "csd scale variance");

        std::vector<Descriptor> orig(3), styl(3);
        for (int f = 0; f < 3; ++f)
            for (int k = 0; k < 6; ++k) {
                orig[f].values.push_back(rng.uniform(-1, 1));
                styl[f].values.push_back(rng.uniform(-1, 1));
            }
        const double dc = clip_dc(orig, styl).score;
        std::vector<Descriptor> styl_scaled = styl;
        for (std::size_t k = 0; k < 6; ++k)
            styl_scaled[1].values[k] =
                orig[1].values[k] + 3.0 * (styl[1].values[k] - orig[1].values[k]);
        REQUIRE_MSG(std::abs(clip_dc(orig, styl_scaled).score - dc) <= 1e-12,
                    "clip-dc direction-scale variance");
    }
    // degenerate path
    {
        std::vector<Descriptor> frames(4);
        for (int f = 0; f < 4; ++f)
            for (int k = 0; k < 5; ++k) frames[f].values.push_back(rng.uniform(-1, 1));
        const ClipDcResult res = clip_dc(frames, frames);
        REQUIRE_MSG(res.score == 1.0, "degenerate clip-dc score != 1.0");
        REQUIRE_MSG(res.degenerate_pairs == 3, "degenerate counter %d != 3", res.degenerate_pairs);
    }
}

void criterion_end_to_end() {
    const auto start = std::chrono::steady_clock::now();
    const fs::path work = g_work / "e2e";
    fs::remove_all(work);
    fs::create_directories(work);

    auto run_once = [&](const fs::path& dir) {
        fs::create_directories(dir);
        CommandResult r = run_command(g_cli + " --seed 7 fixture --out " + (dir / "fx").string());
        REQUIRE_MSG(r.exit_code == 0, "fixture failed: %s", r.output.c_str());
        r = run_command(g_cli + " --seed 7 stylize --scene " + (dir / "fx/scene.ply").string() +
                        " --colmap " + (dir / "fx/colmap").string() + " --style " +
                        (dir / "fx/style.png").string() + " --out " + (dir / "targets").string() +
                        " --n-views 4");
        REQUIRE_MSG(r.exit_code == 0, "stylize failed: %s", r.output.c_str());
        REQUIRE_MSG(r.output.find("stylized 8 views in 2 groups") != std::string::npos,
                    "unexpected stylize summary: %s", r.output.c_str());
        int n_targets = 0;
        for (const auto& e : fs::directory_iterator(dir / "targets"))
            if (e.path().extension() == ".png") ++n_targets;
        REQUIRE_MSG(n_targets == 8, "expected 8 targets, got %d", n_targets);

        r = run_command(g_cli + " --seed 7 finetune --scene " + (dir / "fx/scene.ply").string() +
                        " --colmap " + (dir / "fx/colmap").string() + " --style " +
                        (dir / "fx/style.png").string() + " --targets " + (dir / "targets").string() +
                        " --out " + (dir / "stylized.ply").string() + " --iters 200");
        REQUIRE_MSG(r.exit_code == 0, "finetune failed: %s", r.output.c_str());
        double first = 0, last = 0;
        const auto pos = r.output.find("loss ");
        REQUIRE_MSG(pos != std::string::npos &&
                        std::sscanf(r.output.c_str() + pos, "loss %lf -> %lf", &first, &last) == 2,
                    "could not parse losses from: %s", r.output.c_str());
        REQUIRE_MSG(last <= 0.7 * first, "loss only went %f -> %f (needs >= 30%% reduction)", first,
                    last);
    };

    run_once(work / "run1");
    run_once(work / "run2");

    // CLI error surface: unknown subcommands fail with a nonzero exit
    const CommandResult bad = run_command(g_cli + " frobnicate");
    REQUIRE_MSG(bad.exit_code != 0, "unknown subcommand did not fail");
    REQUIRE_MSG(bad.output.find("error:") != std::string::npos, "no machine-parseable error line");

    // byte-identical repeated runs
    for (int i = 0; i < 8; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "view_%03d.png", i);
        REQUIRE_MSG(read_bytes(work / "run1/targets" / name) == read_bytes(work / "run2/targets" / name),
                    "target %s differs between runs", name);
    }
    REQUIRE_MSG(read_bytes(work / "run1/stylized.ply") == read_bytes(work / "run2/stylized.ply"),
                "finetuned scenes differ between runs");

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    REQUIRE_MSG(secs < 300.0, "end-to-end smoke took %.1fs (budget 300s)", secs);
}

void criterion_ablation() {
    FixtureSpec spec;
    spec.seed = 7;
    spec.gaussians = 40;
    spec.cameras = 8;
    spec.resolution = 32;
    StylizationRun base;
    base.scene = fixture_scene(spec);
    base.cameras = fixture_cameras(spec);
    base.style_image = fixture_style_image(spec);
    base.config.seed = 7;
    base.config.n_views = 4;
    base.config.diffusion.ddim_steps = 3;
    base.config.diffusion.token_dim = 32;
    base.config.diffusion.mlp_hidden = 64;
    base.config.diffusion.blocks = 2;
    base.config.finetune.iterations = 10;
    base.config.finetune.scratch_gaussians = 200;
    base.config.finalize();

    auto scenes_equal = [](const GaussianScene& a, const GaussianScene& b) {
        return a.size() == b.size() &&
               std::memcmp(a.gaussians.data(), b.gaussians.data(), a.size() * sizeof(Gaussian3D)) == 0;
    };

    // w/o NNFM == directly configured w_nnfm = 0
    {
        const auto outcome = run_ablation(base, AblationVariant::NoNnfm);
        StylizationRun manual = base;
        manual.config.loss.w_nnfm = 0.0;
        dataset_update(manual);
        finetune(manual);
        REQUIRE_MSG(scenes_equal(outcome[0].scene, manual.scene), "no-nnfm path != w_nnfm=0 path");
    }
    // w/o NV == singleton groups
    {
        StylizationRun no_nv = base;
        no_nv.ablation.no_nv_attention = true;
        dataset_update(no_nv);
        StylizationRun singles = base;
        singles.config.n_views = 1;
        dataset_update(singles);
        REQUIRE_MSG(no_nv.targets.size() == singles.targets.size(), "target counts differ");
        for (std::size_t i = 0; i < no_nv.targets.size(); ++i)
            REQUIRE_MSG(images_bit_equal(no_nv.targets[i], singles.targets[i]),
                        "no-nv target %zu != singleton-group target", i);
    }
    // train-from-scratch uses a fresh initialization
    {
        const auto scratch = run_ablation(base, AblationVariant::FromScratch);
        REQUIRE_MSG(scratch[0].scene.size() == 200, "scratch scene size %zu != 200",
                    scratch[0].scene.size());
        const auto defaults = run_ablation(base, AblationVariant::Default);
        REQUIRE_MSG(defaults[0].scene.size() == base.scene.size(), "default run resized the scene");
        REQUIRE_MSG(!scenes_equal(scratch[0].scene, defaults[0].scene),
                    "scratch and default runs coincide");
    }
    // default variant == plain pipeline
    {
        const auto outcome = run_ablation(base, AblationVariant::Default);
        StylizationRun manual = base;
        dataset_update(manual);
        finetune(manual);
        REQUIRE_MSG(scenes_equal(outcome[0].scene, manual.scene), "default variant != plain finetune");
    }
}

void criterion_io() {
    const fs::path work = g_work / "io";
    fs::remove_all(work);
    fs::create_directories(work);

    // 50 random float-exact scenes round-trip bit-exactly
    for (int trial = 0; trial < 50; ++trial) {
        FixtureSpec spec;
        spec.seed = 9000 + trial;
        spec.gaussians = 20 + trial;
        const GaussianScene scene = fixture_scene(spec);
        const fs::path path = work / "scene.ply";
        save_ply(scene, path);
        const GaussianScene loaded = load_ply(path);
        REQUIRE_MSG(loaded.size() == scene.size(), "size changed in round trip");
        REQUIRE_MSG(std::memcmp(loaded.gaussians.data(), scene.gaussians.data(),
                                scene.size() * sizeof(Gaussian3D)) == 0,
                    "ply round trip not bit-exact (trial %d)", trial);
    }

    // COLMAP write -> read equality
    {
        FixtureSpec spec;
        spec.cameras = 6;
        const auto cams = fixture_cameras(spec);
        std::vector<std::string> names;
        for (int i = 0; i < 6; ++i) names.push_back("v" + std::to_string(i) + ".png");
        save_colmap(work / "colmap", cams, names);
        const ColmapModel model = load_colmap(work / "colmap");
        REQUIRE_MSG(model.cameras.size() == cams.size(), "camera count changed");
        for (std::size_t i = 0; i < cams.size(); ++i) {
            const Camera &a = cams[i], &b = model.cameras[i];
            REQUIRE_MSG(a.fx == b.fx && a.fy == b.fy && a.cx == b.cx && a.cy == b.cy &&
                            a.width == b.width && a.height == b.height,
                        "intrinsics changed");
            REQUIRE_MSG(a.translation.x == b.translation.x && a.translation.y == b.translation.y &&
                            a.translation.z == b.translation.z,
                        "translation changed");
            for (int k = 0; k < 9; ++k)
                REQUIRE_MSG(std::abs(a.rotation.m[k] - b.rotation.m[k]) <= 1e-12,
                            "rotation error %g", std::abs(a.rotation.m[k] - b.rotation.m[k]));
        }
    }

    // atomic write behavior under an injected interrupt
    {
        const fs::path target = work / "atomic.bin";
        atomic_write_file(target, [](std::ostream& out) { out << "safe"; });
        bool threw = false;
        try {
            atomic_write_file(target, [](std::ostream& out) {
                out << "partial";
                throw std::runtime_error("interrupt");
            });
        } catch (const std::runtime_error&) {
            threw = true;
        }
        REQUIRE_MSG(threw, "interrupt did not propagate");
        REQUIRE_MSG(read_bytes(target) == "safe", "target corrupted by interrupted write");
        int strays = 0;
        for (const auto& e : fs::directory_iterator(work))
            if (e.path().filename().string().find("atomic.bin.tmp") != std::string::npos) ++strays;
        REQUIRE_MSG(strays == 0, "stray temp files left behind");
    }
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: acceptance <path-to-splatstyle-cli> <workdir>\n");
        return 2;
    }
    g_cli = argv[1];
    g_work = argv[2];
    fs::create_directories(g_work);

    criterion(1, "rasterizer gradient suite (50 scenes, f64, FD 1e-4)", criterion_gradients);
    criterion(2, "tiled/untiled compositing bit-equality and transmittance bounds", criterion_compositing);
    criterion(3, "NV attention equivalences", criterion_nv_attention);
    criterion(4, "DDIM algebraic identities and formula oracle", criterion_ddim);
    criterion(5, "NNFM oracle, invariances and gradient", criterion_nnfm);
    criterion(6, "view grouping partition quality", criterion_grouping);
    criterion(7, "metric kernels", criterion_metrics);
    criterion(8, "end-to-end CLI smoke on the bundled fixture", criterion_end_to_end);
    criterion(9, "ablation flag semantics", criterion_ablation);
    criterion(10, "I/O round trips and atomic writes", criterion_io);

    if (g_failures == 0) {
        std::printf("acceptance: all 10 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criteria FAILED\n", g_failures);
    return 1;
}
