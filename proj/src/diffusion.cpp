// SPDX-License-Identifier: Apache-2.0
#include "splatstyle/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "splatstyle/error.hpp"
#include "splatstyle/rng.hpp"

namespace splatstyle {

namespace {

// rows of `tokens` through the linear map W: tokens * W^T
Mat apply_linear(const Mat& tokens, const Mat& w) { return matmul_bt(tokens, w); }

Mat relu(Mat x) {
    for (double& v : x.v) v = v > 0.0 ? v : 0.0;
    return x;
}

// Patch-mean colors over complete patches; returns (n_patches x 3).
Mat patch_means(const ImageRGB& img, int patch, int* out_h = nullptr, int* out_w = nullptr) {
    const int gh = img.height / patch;
    const int gw = img.width / patch;
    Mat m(gh * gw, 3);
    const double inv = 1.0 / (patch * patch);
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx) {
            double acc[3] = {0, 0, 0};
            for (int r = 0; r < patch; ++r)
                for (int c = 0; c < patch; ++c)
                    for (int ch = 0; ch < 3; ++ch) acc[ch] += img.at(gy * patch + r, gx * patch + c, ch);
            for (int ch = 0; ch < 3; ++ch) m(gy * gw + gx, ch) = acc[ch] * inv;
        }
    if (out_h) *out_h = gh;
    if (out_w) *out_w = gw;
    return m;
}

// Gram-Schmidt over the columns of a seeded normal matrix.
Mat orthonormal_columns(int rows, int cols, std::uint64_t seed) {
    Mat m = Mat::seeded_normal(rows, cols, seed, 1.0);
    for (int c = 0; c < cols; ++c) {
        for (int p = 0; p < c; ++p) {
            double dot = 0;
            for (int r = 0; r < rows; ++r) dot += m(r, c) * m(r, p);
            for (int r = 0; r < rows; ++r) m(r, c) -= dot * m(r, p);
        }
        double norm = 0;
        for (int r = 0; r < rows; ++r) norm += m(r, c) * m(r, c);
        norm = std::sqrt(norm);
        for (int r = 0; r < rows; ++r) m(r, c) /= norm;
    }
    return m;
}

// Attention-pooled tokens: each seeded query head takes a softmax-weighted
// mean of the embedded patches.
Mat pool_heads(const Mat& embedded, const Mat& queries, double scale) {
    const int d = embedded.cols;
    Mat out(queries.rows, d);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    for (int h = 0; h < queries.rows; ++h) {
        std::vector<double> score(embedded.rows);
        double mx = -1e300;
        for (int p = 0; p < embedded.rows; ++p) {
            double s = 0;
            for (int k = 0; k < d; ++k) s += embedded(p, k) * queries(h, k);
            score[p] = s * inv_sqrt_d;
            mx = std::max(mx, score[p]);
        }
        double denom = 0;
        for (double& s : score) {
            s = std::exp(s - mx);
            denom += s;
        }
        for (int p = 0; p < embedded.rows; ++p)
            for (int k = 0; k < d; ++k) out(h, k) += score[p] / denom * embedded(p, k);
    }
    return out * scale;
}

Mat cross_attention(const DenoiserWeights::Attention& at, const Mat& x, const Mat& kv_src) {
    const Mat q = apply_linear(x, at.wq);
    const Mat k = apply_linear(kv_src, at.wk);
    const Mat v = apply_linear(kv_src, at.wv);
    const auto out = nv_attention({q}, {k}, {v});
    return apply_linear(out[0], at.wo);
}

// Sinusoidal timestep basis of dimension d.
std::vector<double> time_basis(int t, int d) {
    std::vector<double> s(d, 0.0);
    for (int k = 0; k * 2 < d; ++k) {
        const double freq = std::pow(10000.0, -2.0 * k / d);
        s[2 * k] = std::sin(t * freq);
        if (2 * k + 1 < d) s[2 * k + 1] = std::cos(t * freq);
    }
    return s;
}

DenoiserWeights::Attention seeded_attention(std::uint64_t base, const char* tag, int index, int d) {
    const double s_in = 1.0 / std::sqrt(static_cast<double>(d));
    const double s_out = 0.25 / std::sqrt(static_cast<double>(d));
    DenoiserWeights::Attention a;
    a.wq = Mat::seeded_normal(d, d, derive_seed(base, std::string(tag) + ".wq", index), s_in);
    a.wk = Mat::seeded_normal(d, d, derive_seed(base, std::string(tag) + ".wk", index), s_in);
    a.wv = Mat::seeded_normal(d, d, derive_seed(base, std::string(tag) + ".wv", index), s_in);
    a.wo = Mat::seeded_normal(d, d, derive_seed(base, std::string(tag) + ".wo", index), s_out);
    return a;
}

} // namespace

LatentCodec LatentCodec::seeded(const DiffusionConfig& cfg) {
    LatentCodec c;
    c.patch_size = cfg.patch_size;
    c.token_dim = cfg.token_dim;
    c.lift = orthonormal_columns(cfg.token_dim, 3, derive_seed(cfg.seed, "codec.lift"));
    return c;
}

LatentGrid latent_encode(const LatentCodec& codec, const ImageRGB& img) {
    if (img.width % codec.patch_size != 0 || img.height % codec.patch_size != 0)
        throw Error(ErrorCode::NonDivisibleResolution, "image dimensions must be divisible by patch size");
    LatentGrid z;
    const Mat means = patch_means(img, codec.patch_size, &z.grid_h, &z.grid_w);
    z.tokens = matmul_bt(means, codec.lift); // lift is (d x 3): means * lift^T -> (n x d)
    z.timestep = 0;
    return z;
}

ImageRGB latent_decode(const LatentCodec& codec, const LatentGrid& z) {
    ImageRGB img(z.grid_w * codec.patch_size, z.grid_h * codec.patch_size);
    for (int gy = 0; gy < z.grid_h; ++gy)
        for (int gx = 0; gx < z.grid_w; ++gx) {
            const int p = gy * z.grid_w + gx;
            double rgb[3];
            for (int ch = 0; ch < 3; ++ch) {
                double s = 0;
                for (int k = 0; k < codec.token_dim; ++k) s += codec.lift(k, ch) * z.tokens(p, k);
                rgb[ch] = s;
            }
            for (int r = 0; r < codec.patch_size; ++r)
                for (int c = 0; c < codec.patch_size; ++c)
                    for (int ch = 0; ch < 3; ++ch)
                        img.at(gy * codec.patch_size + r, gx * codec.patch_size + c, ch) = rgb[ch];
        }
    img.clamp01();
    return img;
}

SchedulerConfig SchedulerConfig::linear(int steps, double alpha_start, double alpha_end) {
    SchedulerConfig s;
    s.alphas.resize(steps + 1);
    for (int i = 0; i <= steps; ++i)
        s.alphas[i] = alpha_start + (alpha_end - alpha_start) * static_cast<double>(i) / steps;
    s.validate();
    return s;
}

void SchedulerConfig::validate() const {
    if (alphas.size() < 2) throw Error(ErrorCode::IndexOutOfRange, "scheduler needs at least two alphas");
    if (alphas.front() > 1.0) throw Error(ErrorCode::DegenerateAlpha, "alpha_0 must be <= 1");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (alphas[i] <= 0.0) throw Error(ErrorCode::DegenerateAlpha, "alphas must be positive");
        if (i > 0 && alphas[i] >= alphas[i - 1])
            throw Error(ErrorCode::DegenerateAlpha, "alphas must be strictly decreasing");
    }
}

LatentGrid ddim_step(const LatentGrid& z, const Mat& noise, int t, const SchedulerConfig& sched) {
    if (t < 0 || t + 1 >= static_cast<int>(sched.alphas.size()))
        throw Error(ErrorCode::IndexOutOfRange, "ddim timestep out of range");
    const double alpha_t = sched.alphas[t];
    const double alpha_next = sched.alphas[t + 1];
    if (alpha_t <= 0.0) throw Error(ErrorCode::DegenerateAlpha, "alpha_t must be positive");
    if (!z.tokens.same_shape(noise)) throw Error(ErrorCode::ShapeMismatch, "noise shape must match latent");

    // factored form of the update: both the eps = 0 scaling identity and the
    // alpha_{t+1} = alpha_t fixed point hold without rounding residue
    const double ratio = std::sqrt(alpha_next / alpha_t);
    const double sig_t = std::sqrt(1.0 - alpha_t);
    const double sig_next = std::sqrt(1.0 - alpha_next);
    const double eps_coeff = sig_next - ratio * sig_t;

    LatentGrid out = z;
    out.timestep = z.timestep + 1;
    for (std::size_t i = 0; i < out.tokens.v.size(); ++i)
        out.tokens.v[i] = ratio * z.tokens.v[i] + eps_coeff * noise.v[i];
    return out;
}

std::vector<Mat> nv_attention(const std::vector<Mat>& queries, const std::vector<Mat>& keys,
                              const std::vector<Mat>& values) {
    const std::size_t n_views = queries.size();
    if (n_views == 0 || keys.size() != n_views || values.size() != n_views)
        throw Error(ErrorCode::DimensionMismatch, "nv_attention needs matching per-view Q/K/V");
    const int d = queries[0].cols;
    for (std::size_t j = 0; j < n_views; ++j) {
        if (queries[j].cols != d || keys[j].cols != d)
            throw Error(ErrorCode::DimensionMismatch, "nv_attention token dims differ");
        if (keys[j].rows != values[j].rows)
            throw Error(ErrorCode::DimensionMismatch, "keys/values row count differ");
    }
    const int d_v = values[0].cols;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    std::vector<Mat> out(n_views);
    std::vector<double> score;
    for (std::size_t i = 0; i < n_views; ++i) {
        out[i] = Mat(queries[i].rows, d_v);
        for (int qr = 0; qr < queries[i].rows; ++qr) {
            score.clear();
            double mx = -1e300;
            for (std::size_t j = 0; j < n_views; ++j)
                for (int kr = 0; kr < keys[j].rows; ++kr) {
                    double s = 0;
                    for (int k = 0; k < d; ++k) s += queries[i](qr, k) * keys[j](kr, k);
                    s *= inv_sqrt_d;
                    score.push_back(s);
                    mx = std::max(mx, s);
                }
            double denom = 0;
            for (double& s : score) {
                s = std::exp(s - mx);
                denom += s;
            }
            std::size_t flat = 0;
            for (std::size_t j = 0; j < n_views; ++j)
                for (int kr = 0; kr < keys[j].rows; ++kr, ++flat) {
                    const double wgt = score[flat] / denom;
                    for (int k = 0; k < d_v; ++k) out[i](qr, k) += wgt * values[j](kr, k);
                }
        }
    }
    return out;
}

DenoiserWeights DenoiserWeights::seeded(const DiffusionConfig& cfg) {
    const int d = cfg.token_dim;
    const int hid = cfg.mlp_hidden;
    const double s_in = 1.0 / std::sqrt(static_cast<double>(d));
    const double s_hid = 0.25 / std::sqrt(static_cast<double>(hid));
    DenoiserWeights w;
    w.seed_id = cfg.seed;
    for (int b = 0; b < cfg.blocks; ++b) {
        Block blk;
        blk.self_attn = seeded_attention(cfg.seed, "denoiser.self", b, d);
        blk.cross_content = seeded_attention(cfg.seed, "denoiser.cross_content", b, d);
        blk.cross_style = seeded_attention(cfg.seed, "denoiser.cross_style", b, d);
        blk.mlp_in = Mat::seeded_normal(hid, d, derive_seed(cfg.seed, "denoiser.mlp_in", b), s_in);
        blk.mlp_out = Mat::seeded_normal(d, hid, derive_seed(cfg.seed, "denoiser.mlp_out", b), s_hid);
        w.blocks.push_back(std::move(blk));
    }
    w.time_embed = Mat::seeded_normal(d, d, derive_seed(cfg.seed, "denoiser.time_embed"), s_in);
    w.noise_out = Mat::seeded_normal(d, d, derive_seed(cfg.seed, "denoiser.noise_out"), s_in);

    w.ctrl_embed = Mat::seeded_normal(d, 3, derive_seed(cfg.seed, "ctrl.embed"), 1.0 / std::sqrt(3.0));
    for (int b = 0; b < cfg.blocks; ++b) {
        CtrlBlock blk;
        blk.self_attn = seeded_attention(cfg.seed, "ctrl.self", b, d);
        blk.cross_style = seeded_attention(cfg.seed, "ctrl.cross_style", b, d);
        blk.mlp_in = Mat::seeded_normal(hid, d, derive_seed(cfg.seed, "ctrl.mlp_in", b), s_in);
        blk.mlp_out = Mat::seeded_normal(d, hid, derive_seed(cfg.seed, "ctrl.mlp_out", b), s_hid);
        blk.residual_out = Mat::seeded_normal(d, d, derive_seed(cfg.seed, "ctrl.residual_out", b),
                                              0.25 / std::sqrt(static_cast<double>(d)));
        w.ctrl_blocks.push_back(std::move(blk));
    }

    w.style_embed = Mat::seeded_normal(d, 3, derive_seed(cfg.seed, "style.embed"), 1.0 / std::sqrt(3.0));
    w.style_queries = Mat::seeded_normal(cfg.style_tokens, d, derive_seed(cfg.seed, "style.queries"), s_in);
    w.content_embed = Mat::seeded_normal(d, 3, derive_seed(cfg.seed, "content.embed"), 1.0 / std::sqrt(3.0));
    w.content_queries =
        Mat::seeded_normal(cfg.content_tokens, d, derive_seed(cfg.seed, "content.queries"), s_in);
    return w;
}

DenoiserWeights DenoiserWeights::zeros(const DiffusionConfig& cfg) {
    DenoiserWeights w = seeded(cfg);
    auto clear = [](Mat& m) { std::fill(m.v.begin(), m.v.end(), 0.0); };
    for (auto& b : w.blocks) {
        for (Mat* m : {&b.self_attn.wq, &b.self_attn.wk, &b.self_attn.wv, &b.self_attn.wo,
                       &b.cross_content.wq, &b.cross_content.wk, &b.cross_content.wv, &b.cross_content.wo,
                       &b.cross_style.wq, &b.cross_style.wk, &b.cross_style.wv, &b.cross_style.wo,
                       &b.mlp_in, &b.mlp_out})
            clear(*m);
    }
    for (auto& b : w.ctrl_blocks) {
        for (Mat* m : {&b.self_attn.wq, &b.self_attn.wk, &b.self_attn.wv, &b.self_attn.wo,
                       &b.cross_style.wq, &b.cross_style.wk, &b.cross_style.wv, &b.cross_style.wo,
                       &b.mlp_in, &b.mlp_out, &b.residual_out})
            clear(*m);
    }
    for (Mat* m : {&w.time_embed, &w.noise_out, &w.ctrl_embed, &w.style_embed, &w.style_queries,
                   &w.content_embed, &w.content_queries})
        clear(*m);
    return w;
}

StyleControl encode_style(const DenoiserWeights& w, const DiffusionConfig& cfg, const ImageRGB& style_img) {
    const Mat means = patch_means(style_img, cfg.patch_size);
    if (means.rows == 0)
        throw Error(ErrorCode::TooSmallImage, "style image smaller than one patch");
    const Mat embedded = matmul_bt(means, w.style_embed);
    StyleControl d_s;
    d_s.tokens = pool_heads(embedded, w.style_queries, cfg.style_scale);
    return d_s;
}

namespace {

// Shared NV self-attention step for a group of per-view token grids.
void nv_self_site(const DenoiserWeights::Attention& at, std::vector<Mat>& states, bool nv_sharing) {
    const std::size_t n = states.size();
    std::vector<Mat> q(n), k(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Mat x = rms_norm(states[i]);
        q[i] = apply_linear(x, at.wq);
        k[i] = apply_linear(x, at.wk);
        v[i] = apply_linear(x, at.wv);
    }
    if (nv_sharing) {
        const auto attended = nv_attention(q, k, v);
        for (std::size_t i = 0; i < n; ++i) states[i] += apply_linear(attended[i], at.wo);
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const auto attended = nv_attention({q[i]}, {k[i]}, {v[i]});
            states[i] += apply_linear(attended[0], at.wo);
        }
    }
}

void mlp_site(const Mat& mlp_in, const Mat& mlp_out, Mat& state) {
    const Mat x = rms_norm(state);
    state += apply_linear(relu(apply_linear(x, mlp_in)), mlp_out);
}

} // namespace

std::vector<ContentControl> encode_content_group(const DenoiserWeights& w, const DiffusionConfig& cfg,
                                                 const std::vector<LatentGrid>& latents,
                                                 const std::vector<ImageRGB>& content_imgs,
                                                 const StyleControl& d_s) {
    const std::size_t n = latents.size();
    if (n == 0 || content_imgs.size() != n)
        throw Error(ErrorCode::DimensionMismatch, "latents/content image count mismatch");
    if (d_s.tokens.cols != cfg.token_dim)
        throw Error(ErrorCode::ShapeMismatch, "style token dim mismatch");

    std::vector<ContentControl> out(n);
    std::vector<Mat> state(n);
    for (std::size_t i = 0; i < n; ++i) {
        const ImageRGB& img = content_imgs[i];
        if (img.width % cfg.patch_size != 0 || img.height % cfg.patch_size != 0)
            throw Error(ErrorCode::ShapeMismatch, "content image not divisible by patch size");
        int gh = 0, gw = 0;
        const Mat means = patch_means(img, cfg.patch_size, &gh, &gw);
        if (gh != latents[i].grid_h || gw != latents[i].grid_w)
            throw Error(ErrorCode::ShapeMismatch, "content image grid does not match latent grid");
        const Mat embedded = matmul_bt(means, w.content_embed);
        out[i].proj_tokens = pool_heads(embedded, w.content_queries, cfg.content_scale);
        state[i] = latents[i].tokens + matmul_bt(means, w.ctrl_embed);
    }

    for (const auto& blk : w.ctrl_blocks) {
        nv_self_site(blk.self_attn, state, cfg.nv_sharing);
        for (std::size_t i = 0; i < n; ++i)
            state[i] += cross_attention(blk.cross_style, rms_norm(state[i]), d_s.tokens);
        for (std::size_t i = 0; i < n; ++i) mlp_site(blk.mlp_in, blk.mlp_out, state[i]);
        for (std::size_t i = 0; i < n; ++i)
            out[i].control_residuals.push_back(apply_linear(rms_norm(state[i]), blk.residual_out) *
                                               cfg.control_scale);
    }
    return out;
}

ContentControl encode_content(const DenoiserWeights& w, const DiffusionConfig& cfg, const LatentGrid& z,
                              const ImageRGB& content_img, const StyleControl& d_s) {
    return encode_content_group(w, cfg, {z}, {content_img}, d_s)[0];
}

std::vector<Mat> predict_noise(const DenoiserWeights& w, const DiffusionConfig& cfg,
                               const std::vector<LatentGrid>& latents, int t,
                               const std::vector<ContentControl>& controls, const StyleControl& d_s) {
    const std::size_t n = latents.size();
    if (n == 0 || controls.size() != n)
        throw Error(ErrorCode::DimensionMismatch, "latents/controls count mismatch");
    for (const LatentGrid& z : latents)
        if (z.timestep != t)
            throw Error(ErrorCode::TimestepMismatch, "all group members must be at the same timestep");

    const int d = cfg.token_dim;
    const std::vector<double> basis = time_basis(t, d);
    std::vector<double> e_t(d, 0.0);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) e_t[r] += w.time_embed(r, c) * basis[c];

    std::vector<Mat> state(n);
    for (std::size_t i = 0; i < n; ++i) {
        state[i] = latents[i].tokens;
        for (int r = 0; r < state[i].rows; ++r)
            for (int c = 0; c < d; ++c) state[i](r, c) += e_t[c];
    }

    for (std::size_t b = 0; b < w.blocks.size(); ++b) {
        const auto& blk = w.blocks[b];
        nv_self_site(blk.self_attn, state, cfg.nv_sharing);
        for (std::size_t i = 0; i < n; ++i)
            state[i] += cross_attention(blk.cross_content, rms_norm(state[i]), controls[i].proj_tokens);
        for (std::size_t i = 0; i < n; ++i)
            state[i] += cross_attention(blk.cross_style, rms_norm(state[i]), d_s.tokens);
        for (std::size_t i = 0; i < n; ++i) {
            if (b < controls[i].control_residuals.size()) {
                if (!controls[i].control_residuals[b].same_shape(state[i]))
                    throw Error(ErrorCode::ShapeMismatch, "control residual grid shape mismatch");
                state[i] += controls[i].control_residuals[b];
            }
        }
        for (std::size_t i = 0; i < n; ++i) mlp_site(blk.mlp_in, blk.mlp_out, state[i]);
    }

    std::vector<Mat> eps(n);
    for (std::size_t i = 0; i < n; ++i) eps[i] = apply_linear(rms_norm(state[i]), w.noise_out);
    return eps;
}

std::vector<ImageRGB> stylize_group(const DenoiserWeights& w, const DiffusionConfig& cfg,
                                    const std::vector<ImageRGB>& content_imgs,
                                    const ImageRGB& style_img) {
    if (content_imgs.empty()) throw Error(ErrorCode::DimensionMismatch, "stylize_group needs >= 1 view");
    const LatentCodec codec = LatentCodec::seeded(cfg);
    const StyleControl d_s = encode_style(w, cfg, style_img);

    // shared start noise: every view denoises the same canvas, so identical
    // content images stylize identically
    const int gh = content_imgs[0].height / cfg.patch_size;
    const int gw = content_imgs[0].width / cfg.patch_size;
    if (gh * cfg.patch_size != content_imgs[0].height || gw * cfg.patch_size != content_imgs[0].width)
        throw Error(ErrorCode::NonDivisibleResolution, "content images must be divisible by patch size");
    Mat start = Mat::seeded_normal(gh * gw, cfg.token_dim, derive_seed(cfg.seed, "init-noise"), 1.0);

    std::vector<LatentGrid> z(content_imgs.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (!content_imgs[i].same_shape(content_imgs[0]))
            throw Error(ErrorCode::ShapeMismatch, "group content images must share resolution");
        z[i].grid_h = gh;
        z[i].grid_w = gw;
        z[i].timestep = 0;
        z[i].tokens = start;
    }

    if (cfg.ddim_steps > 0) {
        const SchedulerConfig sched =
            SchedulerConfig::linear(cfg.ddim_steps, cfg.alpha_start, cfg.alpha_end);
        for (int t = 0; t < cfg.ddim_steps; ++t) {
            const auto controls = encode_content_group(w, cfg, z, content_imgs, d_s);
            const auto eps = predict_noise(w, cfg, z, t, controls, d_s);
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = ddim_step(z[i], eps[i], t, sched);
        }
    }

    std::vector<ImageRGB> out;
    out.reserve(z.size());
    for (const LatentGrid& zi : z) out.push_back(latent_decode(codec, zi));
    return out;
}

} // namespace splatstyle
