// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "splatstyle/losses.hpp"
#include "splatstyle/tensor.hpp"

namespace splatstyle {

struct Descriptor {
    std::vector<double> values;
    std::string source; // "extractor" or "imported"
};

// Row-softmax of the patch similarity map F F^T; rows are stochastic.
Mat correlation_map(const FeatureMap& features);

// Mean row-wise KL divergence between the content and stylized correlation
// maps; zero when the images agree, always >= 0.
double cfsd_features(const FeatureMap& f_content, const FeatureMap& f_stylized);
double cfsd(const ImageRGB& content, const ImageRGB& stylized, const FeatureExtractor& ext);

// Cosine similarity of two style descriptors, in [-1, 1].
double csd_score(const Descriptor& style_desc, const Descriptor& stylized_desc);

struct ClipDcResult {
    double score = 0.0;
    int degenerate_pairs = 0; // zero-direction pairs, scored 1.0 each
};

// Mean cosine similarity of the edit directions C(s_i) - C(o_i) between
// adjacent frames of one render path.
ClipDcResult clip_dc(const std::vector<Descriptor>& orig_embeds,
                     const std::vector<Descriptor>& styl_embeds);

// Mean-pooled final extractor features as a descriptor.
Descriptor descriptor_from_image(const FeatureExtractor& ext, const ImageRGB& img);
Descriptor descriptor_from_features(const FeatureMap& fm, const std::string& source);

} // namespace splatstyle
