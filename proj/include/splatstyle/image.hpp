// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "splatstyle/error.hpp"

namespace splatstyle {

// Linear-light RGB raster, row-major height x width x 3, values in [0, 1].
struct ImageRGB {
    int width = 0;
    int height = 0;
    std::vector<double> px;

    ImageRGB() = default;
    ImageRGB(int w, int h, double fill = 0.0)
        : width(w), height(h), px(static_cast<std::size_t>(w) * h * 3, fill) {}

    double& at(int row, int col, int ch) {
        return px[(static_cast<std::size_t>(row) * width + col) * 3 + ch];
    }
    double at(int row, int col, int ch) const {
        return px[(static_cast<std::size_t>(row) * width + col) * 3 + ch];
    }

    bool same_shape(const ImageRGB& o) const { return width == o.width && height == o.height; }

    void clamp01() {
        for (double& v : px) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
};

inline void require_same_shape(const ImageRGB& a, const ImageRGB& b, const char* what) {
    if (!a.same_shape(b)) throw Error(ErrorCode::ShapeMismatch, what);
}

} // namespace splatstyle
