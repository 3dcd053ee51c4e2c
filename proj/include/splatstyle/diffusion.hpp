// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "splatstyle/image.hpp"
#include "splatstyle/tensor.hpp"

namespace splatstyle {

struct DiffusionConfig {
    int patch_size = 8;
    int token_dim = 64;
    int style_tokens = 4;
    int content_tokens = 4;
    int blocks = 4;
    int mlp_hidden = 256;
    int ddim_steps = 20;
    double alpha_start = 0.999;
    double alpha_end = 0.1;
    double content_scale = 1.0;
    double style_scale = 0.6;
    double control_scale = 1.0;
    std::uint64_t seed = 7;
    bool nv_sharing = true; // false forces singleton attention groups
};

// Token grid carried through the DDIM iteration; rows = h_l * w_l positions.
struct LatentGrid {
    int grid_h = 0;
    int grid_w = 0;
    int timestep = 0;
    Mat tokens; // (grid_h * grid_w) x token_dim
};

struct StyleControl {
    Mat tokens; // style_tokens x token_dim, already scaled by style_scale
};

struct ContentControl {
    Mat proj_tokens;                  // content_tokens x token_dim, scaled by content_scale
    std::vector<Mat> control_residuals; // one (hw x d) grid per denoiser block, scaled by control_scale
};

// Linear codec between images and token grids: per-patch mean pooling lifted
// through a seeded orthonormal basis. decode(encode(x)) is the patch-mean image.
struct LatentCodec {
    int patch_size;
    int token_dim;
    Mat lift; // token_dim x 3, orthonormal columns

    static LatentCodec seeded(const DiffusionConfig& cfg);
};

LatentGrid latent_encode(const LatentCodec& codec, const ImageRGB& img);
ImageRGB latent_decode(const LatentCodec& codec, const LatentGrid& z);

struct SchedulerConfig {
    std::vector<double> alphas; // strictly decreasing, in (0, 1]; size = steps + 1

    static SchedulerConfig linear(int steps, double alpha_start, double alpha_end);
    int steps() const { return static_cast<int>(alphas.size()) - 1; }
    void validate() const;
};

// One DDIM update z^{t+1} from z^t and the predicted noise, using the
// scheduler coefficients at t and t+1.
LatentGrid ddim_step(const LatentGrid& z, const Mat& noise, int t, const SchedulerConfig& sched);

// Attention with neighboring-view key/value sharing: view i's queries attend
// over the concatenated keys/values of the whole group. A single-view group
// is exactly plain self-attention.
std::vector<Mat> nv_attention(const std::vector<Mat>& queries, const std::vector<Mat>& keys,
                              const std::vector<Mat>& values);

// Fixed seeded weights standing in for the denoiser and the control
// branch; never trained, reproducible from the seed.
struct DenoiserWeights {
    struct Attention {
        Mat wq, wk, wv, wo; // d x d
    };
    struct Block {
        Attention self_attn;
        Attention cross_content;
        Attention cross_style;
        Mat mlp_in;  // hidden x d
        Mat mlp_out; // d x hidden
    };
    std::vector<Block> blocks;
    Mat time_embed;  // d x d applied to the sinusoidal timestep basis
    Mat noise_out;   // d x d final projection
    std::uint64_t seed_id = 0;

    // control branch, mirroring the denoiser block shapes
    Mat ctrl_embed; // d x 3 patch-color embedding
    struct CtrlBlock {
        Attention self_attn;
        Attention cross_style;
        Mat mlp_in;
        Mat mlp_out;
        Mat residual_out; // d x d per-block residual projection
    };
    std::vector<CtrlBlock> ctrl_blocks;

    Mat style_embed;   // d x 3
    Mat style_queries; // style_tokens x d pooling heads
    Mat content_embed; // d x 3
    Mat content_queries; // content_tokens x d

    static DenoiserWeights seeded(const DiffusionConfig& cfg);
    static DenoiserWeights zeros(const DiffusionConfig& cfg);
};

// D_s: attention-pooled style tokens from seeded heads, scaled by style_scale.
StyleControl encode_style(const DenoiserWeights& w, const DiffusionConfig& cfg, const ImageRGB& style_img);

// Per-view content control: projected content tokens plus the control-branch
// residuals conditioned on the style tokens. The group variant shares the
// branch's self-attention keys/values across views.
std::vector<ContentControl> encode_content_group(const DenoiserWeights& w, const DiffusionConfig& cfg,
                                                 const std::vector<LatentGrid>& latents,
                                                 const std::vector<ImageRGB>& content_imgs,
                                                 const StyleControl& d_s);
ContentControl encode_content(const DenoiserWeights& w, const DiffusionConfig& cfg,
                              const LatentGrid& z, const ImageRGB& content_img,
                              const StyleControl& d_s);

// Predicted noise for every view of a group at timestep t.
std::vector<Mat> predict_noise(const DenoiserWeights& w, const DiffusionConfig& cfg,
                               const std::vector<LatentGrid>& latents, int t,
                               const std::vector<ContentControl>& controls, const StyleControl& d_s);

// Full grouped stylization: shared seeded start noise, T DDIM steps with
// per-step content controls, then decode.
std::vector<ImageRGB> stylize_group(const DenoiserWeights& w, const DiffusionConfig& cfg,
                                    const std::vector<ImageRGB>& content_imgs,
                                    const ImageRGB& style_img);

} // namespace splatstyle
