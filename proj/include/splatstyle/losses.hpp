// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "splatstyle/image.hpp"

namespace splatstyle {

struct FeatureMap {
    int h = 0;
    int w = 0;
    int channels = 0;
    std::string layer;
    std::vector<double> data; // row-major h x w x channels

    FeatureMap() = default;
    FeatureMap(int h_, int w_, int c_, std::string layer_ = "")
        : h(h_), w(w_), channels(c_), layer(std::move(layer_)),
          data(static_cast<std::size_t>(h_) * w_ * c_, 0.0) {}

    double& at(int r, int c, int ch) { return data[(static_cast<std::size_t>(r) * w + c) * channels + ch]; }
    double at(int r, int c, int ch) const {
        return data[(static_cast<std::size_t>(r) * w + c) * channels + ch];
    }
    int positions() const { return h * w; }
};

// Fixed 3-layer stride-2 conv stack with seeded orthogonal filters, or an
// imported variant that reads precomputed feature maps from disk.
class FeatureExtractor {
public:
    enum class Kind { Seeded, Imported };

    static FeatureExtractor seeded(std::uint64_t seed);
    static FeatureExtractor imported(std::filesystem::path dir);

    Kind kind() const { return kind_; }

    static constexpr int kLayers = 3;
    static constexpr int kMinSize = 4;
    static constexpr std::array<int, kLayers + 1> kChannels{3, 8, 16, 16};

    // Final-layer features; differentiable w.r.t. the input image.
    FeatureMap extract(const ImageRGB& img) const;

    // Features for a named frame: computed for Seeded, loaded from
    // "<dir>/<stem>.feat" for Imported.
    FeatureMap features_for(const ImageRGB& img, const std::string& stem) const;

    // d(sum(d_feat * features)) / d(pixels); recomputes the forward activations.
    ImageRGB backward(const ImageRGB& img, const FeatureMap& d_feat) const;

private:
    FeatureExtractor() = default;
    Kind kind_ = Kind::Seeded;
    // filters[layer] is (out_ch x in_ch*9), orthonormal rows; zero bias
    std::array<std::vector<double>, kLayers> filters_;
    std::filesystem::path import_dir_;

    std::array<FeatureMap, kLayers> forward_stack(const ImageRGB& img) const;
};

struct NnfmResult {
    double loss = 0.0;
    FeatureMap grad;          // w.r.t. the render feature map
    int zero_vector_warnings = 0;
};

// Mean over render positions of the minimum cosine distance to any style
// position; gradient flows only through each position's current argmin.
NnfmResult nnfm_loss(const FeatureMap& f_render, const FeatureMap& f_style);

struct L1Result {
    double loss = 0.0;
    ImageRGB grad;
};

L1Result l1_rgb_loss(const ImageRGB& render, const ImageRGB& target);

struct LossWeights {
    double w_rgb = 1.0;
    double w_nnfm = 1.0;
};

struct FinetuneLossResult {
    double total = 0.0;
    double l1 = 0.0;
    double nnfm = 0.0;
    ImageRGB pixel_grad;
    int nnfm_warnings = 0;
};

// w_rgb * L1(render, target) + w_nnfm * NNFM(feat(render), feat(style)).
FinetuneLossResult finetune_loss(const ImageRGB& render, const ImageRGB& target_stylized,
                                 const ImageRGB& style_img, const FeatureExtractor& ext,
                                 const LossWeights& weights);

} // namespace splatstyle
