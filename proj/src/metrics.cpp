// SPDX-License-Identifier: Apache-2.0
#include "splatstyle/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "splatstyle/error.hpp"

namespace splatstyle {

Mat correlation_map(const FeatureMap& features) {
    const int n = features.positions();
    const int c = features.channels;
    Mat s(n, n);
    for (int i = 0; i < n; ++i) {
        double mx = -1e300;
        for (int j = 0; j < n; ++j) {
            double dot = 0;
            for (int k = 0; k < c; ++k)
                dot += features.data[static_cast<std::size_t>(i) * c + k] *
                       features.data[static_cast<std::size_t>(j) * c + k];
            s(i, j) = dot;
            mx = std::max(mx, dot);
        }
        double denom = 0;
        for (int j = 0; j < n; ++j) {
            s(i, j) = std::exp(s(i, j) - mx);
            denom += s(i, j);
        }
        for (int j = 0; j < n; ++j) s(i, j) /= denom;
    }
    return s;
}

double cfsd_features(const FeatureMap& f_content, const FeatureMap& f_stylized) {
    if (f_content.h != f_stylized.h || f_content.w != f_stylized.w ||
        f_content.channels != f_stylized.channels)
        throw Error(ErrorCode::ShapeMismatch, "cfsd feature maps must share shape");
    const Mat sc = correlation_map(f_content);
    const Mat scs = correlation_map(f_stylized);
    const int n = sc.rows;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double kl = 0.0;
        for (int j = 0; j < n; ++j) kl += sc(i, j) * std::log(sc(i, j) / scs(i, j));
        total += kl;
    }
    return total / n;
}

double cfsd(const ImageRGB& content, const ImageRGB& stylized, const FeatureExtractor& ext) {
    require_same_shape(content, stylized, "cfsd images must share resolution");
    return cfsd_features(ext.extract(content), ext.extract(stylized));
}

namespace {

double norm_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace

double csd_score(const Descriptor& style_desc, const Descriptor& stylized_desc) {
    if (style_desc.values.size() != stylized_desc.values.size())
        throw Error(ErrorCode::DimensionMismatch, "descriptor dimensions differ");
    const double na = norm_of(style_desc.values), nb = norm_of(stylized_desc.values);
    if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroDescriptor, "csd_score needs nonzero descriptors");
    double dot = 0;
    for (std::size_t i = 0; i < style_desc.values.size(); ++i)
        dot += style_desc.values[i] * stylized_desc.values[i];
    return dot / (na * nb);
}

ClipDcResult clip_dc(const std::vector<Descriptor>& orig_embeds,
                     const std::vector<Descriptor>& styl_embeds) {
    if (orig_embeds.size() != styl_embeds.size())
        throw Error(ErrorCode::LengthMismatch, "frame sequences differ in length");
    if (orig_embeds.size() < 2) throw Error(ErrorCode::TooShort, "clip_dc needs at least two frames");

    const std::size_t dim = orig_embeds[0].values.size();
    std::vector<std::vector<double>> directions(orig_embeds.size());
    for (std::size_t i = 0; i < orig_embeds.size(); ++i) {
        if (orig_embeds[i].values.size() != dim || styl_embeds[i].values.size() != dim)
            throw Error(ErrorCode::DimensionMismatch, "embedding dimensions differ");
        directions[i].resize(dim);
        for (std::size_t k = 0; k < dim; ++k)
            directions[i][k] = styl_embeds[i].values[k] - orig_embeds[i].values[k];
    }

    ClipDcResult res;
    double total = 0.0;
    const std::size_t pairs = orig_embeds.size() - 1;
    for (std::size_t i = 0; i < pairs; ++i) {
        const double na = norm_of(directions[i]), nb = norm_of(directions[i + 1]);
        if (na == 0.0 || nb == 0.0) {
            // unchanged edit direction: counts as fully consistent
            total += 1.0;
            ++res.degenerate_pairs;
            continue;
        }
        double dot = 0;
        for (std::size_t k = 0; k < dim; ++k) dot += directions[i][k] * directions[i + 1][k];
        total += dot / (na * nb);
    }
    res.score = total / static_cast<double>(pairs);
    return res;
}

Descriptor descriptor_from_features(const FeatureMap& fm, const std::string& source) {
    Descriptor d;
    d.source = source;
    d.values.assign(fm.channels, 0.0);
    const int n = fm.positions();
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < fm.channels; ++k)
            d.values[k] += fm.data[static_cast<std::size_t>(i) * fm.channels + k];
    for (double& v : d.values) v /= n;
    return d;
}

Descriptor descriptor_from_image(const FeatureExtractor& ext, const ImageRGB& img) {
    return descriptor_from_features(ext.extract(img), "extractor");
}

} // namespace splatstyle
