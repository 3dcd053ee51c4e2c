// SPDX-License-Identifier: Apache-2.0
#include "splatstyle/losses.hpp"

#include <cmath>

#include "splatstyle/error.hpp"
#include "splatstyle/io/feature_io.hpp"
#include "splatstyle/rng.hpp"

namespace splatstyle {

namespace {

constexpr int kKernel = 3;
constexpr int kStride = 2;
constexpr int kPad = 1;

int conv_out(int n) { return (n - 1) / kStride + 1; } // kernel 3, pad 1, stride 2

// Orthonormal rows via Gram-Schmidt on a seeded normal matrix.
std::vector<double> orthogonal_filters(int out_ch, int in_elems, std::uint64_t seed) {
    std::vector<double> w(static_cast<std::size_t>(out_ch) * in_elems);
    Rng rng(seed);
    for (double& x : w) x = rng.normal();
    for (int o = 0; o < out_ch; ++o) {
        double* row = w.data() + static_cast<std::size_t>(o) * in_elems;
        for (int p = 0; p < o; ++p) {
            const double* prev = w.data() + static_cast<std::size_t>(p) * in_elems;
            double dot = 0;
            for (int k = 0; k < in_elems; ++k) dot += row[k] * prev[k];
            for (int k = 0; k < in_elems; ++k) row[k] -= dot * prev[k];
        }
        double norm = 0;
        for (int k = 0; k < in_elems; ++k) norm += row[k] * row[k];
        norm = std::sqrt(norm);
        for (int k = 0; k < in_elems; ++k) row[k] /= norm;
    }
    return w;
}

FeatureMap image_as_features(const ImageRGB& img) {
    FeatureMap f(img.height, img.width, 3, "input");
    f.data = img.px;
    return f;
}

// out(r, c, o) = relu(sum_{in,kr,kc} W[o][in*9 + kr*3 + kc] * in(2r-1+kr, 2c-1+kc, in))
FeatureMap conv_forward(const FeatureMap& in, const std::vector<double>& w, int out_ch,
                        const std::string& tag) {
    const int oh = conv_out(in.h), ow = conv_out(in.w);
    FeatureMap out(oh, ow, out_ch, tag);
    const int in_elems = in.channels * kKernel * kKernel;
    for (int r = 0; r < oh; ++r)
        for (int c = 0; c < ow; ++c)
            for (int o = 0; o < out_ch; ++o) {
                const double* row = w.data() + static_cast<std::size_t>(o) * in_elems;
                double acc = 0;
                for (int kr = 0; kr < kKernel; ++kr) {
                    const int ir = r * kStride - kPad + kr;
                    if (ir < 0 || ir >= in.h) continue;
                    for (int kc = 0; kc < kKernel; ++kc) {
                        const int ic = c * kStride - kPad + kc;
                        if (ic < 0 || ic >= in.w) continue;
                        for (int ch = 0; ch < in.channels; ++ch)
                            acc += row[(ch * kKernel + kr) * kKernel + kc] * in.at(ir, ic, ch);
                    }
                }
                out.at(r, c, o) = acc > 0.0 ? acc : 0.0;
            }
    return out;
}

// Transposed pass of conv_forward; `post` holds the forward outputs so the
// ReLU mask can be recovered (post > 0 <=> pre > 0).
FeatureMap conv_backward(const FeatureMap& in, const FeatureMap& post, const FeatureMap& d_out,
                         const std::vector<double>& w) {
    FeatureMap d_in(in.h, in.w, in.channels);
    const int in_elems = in.channels * kKernel * kKernel;
    for (int r = 0; r < post.h; ++r)
        for (int c = 0; c < post.w; ++c)
            for (int o = 0; o < post.channels; ++o) {
                if (post.at(r, c, o) <= 0.0) continue;
                const double g = d_out.at(r, c, o);
                if (g == 0.0) continue;
                const double* row = w.data() + static_cast<std::size_t>(o) * in_elems;
                for (int kr = 0; kr < kKernel; ++kr) {
                    const int ir = r * kStride - kPad + kr;
                    if (ir < 0 || ir >= in.h) continue;
                    for (int kc = 0; kc < kKernel; ++kc) {
                        const int ic = c * kStride - kPad + kc;
                        if (ic < 0 || ic >= in.w) continue;
                        for (int ch = 0; ch < in.channels; ++ch)
                            d_in.at(ir, ic, ch) += g * row[(ch * kKernel + kr) * kKernel + kc];
                    }
                }
            }
    return d_in;
}

} // namespace

FeatureExtractor FeatureExtractor::seeded(std::uint64_t seed) {
    FeatureExtractor ext;
    ext.kind_ = Kind::Seeded;
    for (int layer = 0; layer < kLayers; ++layer) {
        const int in_elems = kChannels[layer] * kKernel * kKernel;
        ext.filters_[layer] =
            orthogonal_filters(kChannels[layer + 1], in_elems, derive_seed(seed, "extractor.conv", layer));
    }
    return ext;
}

FeatureExtractor FeatureExtractor::imported(std::filesystem::path dir) {
    FeatureExtractor ext;
    ext.kind_ = Kind::Imported;
    ext.import_dir_ = std::move(dir);
    return ext;
}

std::array<FeatureMap, FeatureExtractor::kLayers> FeatureExtractor::forward_stack(
    const ImageRGB& img) const {
    if (kind_ != Kind::Seeded)
        throw Error(ErrorCode::UsageError, "imported extractor cannot compute features from pixels");
    if (img.width < kMinSize || img.height < kMinSize)
        throw Error(ErrorCode::TooSmallImage, "image smaller than the extractor receptive size");
    std::array<FeatureMap, kLayers> acts;
    FeatureMap cur = image_as_features(img);
    for (int layer = 0; layer < kLayers; ++layer) {
        acts[layer] = conv_forward(cur, filters_[layer], kChannels[layer + 1],
                                   "conv" + std::to_string(layer + 1));
        cur = acts[layer];
    }
    return acts;
}

FeatureMap FeatureExtractor::extract(const ImageRGB& img) const {
    return forward_stack(img)[kLayers - 1];
}

FeatureMap FeatureExtractor::features_for(const ImageRGB& img, const std::string& stem) const {
    if (kind_ == Kind::Seeded) return extract(img);
    return load_feature_map(import_dir_ / (stem + ".feat"));
}

ImageRGB FeatureExtractor::backward(const ImageRGB& img, const FeatureMap& d_feat) const {
    const auto acts = forward_stack(img);
    const FeatureMap& last = acts[kLayers - 1];
    if (d_feat.h != last.h || d_feat.w != last.w || d_feat.channels != last.channels)
        throw Error(ErrorCode::ShapeMismatch, "feature gradient shape mismatch");

    FeatureMap grad = d_feat;
    for (int layer = kLayers - 1; layer >= 1; --layer)
        grad = conv_backward(acts[layer - 1], acts[layer], grad, filters_[layer]);
    const FeatureMap input = image_as_features(img);
    grad = conv_backward(input, acts[0], grad, filters_[0]);

    ImageRGB out(img.width, img.height);
    out.px = grad.data;
    return out;
}

NnfmResult nnfm_loss(const FeatureMap& f_render, const FeatureMap& f_style) {
    if (f_render.channels != f_style.channels)
        throw Error(ErrorCode::ChannelMismatch, "feature channel counts differ");
    if (f_render.positions() == 0 || f_style.positions() == 0)
        throw Error(ErrorCode::ShapeMismatch, "nnfm needs non-empty feature maps");

    const int c = f_render.channels;
    const int n_r = f_render.positions();
    const int n_s = f_style.positions();

    std::vector<double> style_norm(n_s);
    int zero_warnings = 0;
    for (int j = 0; j < n_s; ++j) {
        double ss = 0;
        for (int k = 0; k < c; ++k) ss += f_style.data[static_cast<std::size_t>(j) * c + k] *
                                          f_style.data[static_cast<std::size_t>(j) * c + k];
        style_norm[j] = std::sqrt(ss);
        if (style_norm[j] == 0.0) ++zero_warnings;
    }

    NnfmResult res;
    res.grad = FeatureMap(f_render.h, f_render.w, c, f_render.layer);
    double total = 0.0;
    for (int i = 0; i < n_r; ++i) {
        const double* f = f_render.data.data() + static_cast<std::size_t>(i) * c;
        double fn = 0;
        for (int k = 0; k < c; ++k) fn += f[k] * f[k];
        fn = std::sqrt(fn);
        if (fn == 0.0) {
            ++zero_warnings;
            total += 1.0; // defined distance for the all-zero vector, no gradient
            continue;
        }
        double best = 2.0 + 1.0;
        int best_j = -1;
        for (int j = 0; j < n_s; ++j) {
            double dist;
            if (style_norm[j] == 0.0) {
                dist = 1.0;
            } else {
                double dot = 0;
                const double* s = f_style.data.data() + static_cast<std::size_t>(j) * c;
                for (int k = 0; k < c; ++k) dot += f[k] * s[k];
                dist = 1.0 - dot / (fn * style_norm[j]);
            }
            if (dist < best) { // strict: ties keep the lowest linear index
                best = dist;
                best_j = j;
            }
        }
        total += best;
        if (style_norm[best_j] > 0.0) {
            const double* s = f_style.data.data() + static_cast<std::size_t>(best_j) * c;
            double dot = 0;
            for (int k = 0; k < c; ++k) dot += f[k] * s[k];
            const double inv_fs = 1.0 / (fn * style_norm[best_j]);
            const double cos_term = dot * inv_fs / (fn * fn);
            double* g = res.grad.data.data() + static_cast<std::size_t>(i) * c;
            for (int k = 0; k < c; ++k) g[k] = -s[k] * inv_fs + cos_term * f[k];
        }
    }
    const double inv_m = 1.0 / n_r;
    res.loss = total * inv_m;
    for (double& g : res.grad.data) g *= inv_m;
    res.zero_vector_warnings = zero_warnings;
    return res;
}

L1Result l1_rgb_loss(const ImageRGB& render, const ImageRGB& target) {
    require_same_shape(render, target, "l1_rgb_loss image shapes differ");
    L1Result res;
    res.grad = ImageRGB(render.width, render.height);
    const double inv_n = 1.0 / static_cast<double>(render.px.size());
    double total = 0.0;
    for (std::size_t i = 0; i < render.px.size(); ++i) {
        const double d = render.px[i] - target.px[i];
        total += std::abs(d);
        res.grad.px[i] = d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0);
    }
    res.loss = total * inv_n;
    return res;
}

FinetuneLossResult finetune_loss(const ImageRGB& render, const ImageRGB& target_stylized,
                                 const ImageRGB& style_img, const FeatureExtractor& ext,
                                 const LossWeights& weights) {
    FinetuneLossResult res;
    const L1Result l1 = l1_rgb_loss(render, target_stylized);
    res.l1 = l1.loss;
    res.pixel_grad = ImageRGB(render.width, render.height);
    for (std::size_t i = 0; i < res.pixel_grad.px.size(); ++i)
        res.pixel_grad.px[i] = weights.w_rgb * l1.grad.px[i];

    if (weights.w_nnfm != 0.0) {
        const FeatureMap f_render = ext.extract(render);
        const FeatureMap f_style = ext.extract(style_img);
        const NnfmResult nn = nnfm_loss(f_render, f_style);
        res.nnfm = nn.loss;
        res.nnfm_warnings = nn.zero_vector_warnings;
        const ImageRGB nn_grad = ext.backward(render, nn.grad);
        for (std::size_t i = 0; i < res.pixel_grad.px.size(); ++i)
            res.pixel_grad.px[i] += weights.w_nnfm * nn_grad.px[i];
    }
    res.total = weights.w_rgb * res.l1 + weights.w_nnfm * res.nnfm;
    return res;
}

} // namespace splatstyle
