// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>

#include "splatstyle/diffusion.hpp"
#include "splatstyle/losses.hpp"
#include "splatstyle/raster.hpp"

namespace splatstyle {

struct FinetuneConfig {
    int iterations = 1000;
    double lr_position = 1.6e-4;
    double lr_rotation = 1e-3;
    double lr_log_scale = 5e-3;
    double lr_opacity_logit = 5e-2;
    double lr_color = 2.5e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-15;
    int scratch_gaussians = 5000;
};

// All knobs of the pipeline, grouped by the module they feed. The [run]
// seed/thread values are copied into the per-module configs by finalize().
struct AppConfig {
    std::uint64_t seed = 7;
    int threads = 1;
    RasterConfig raster;
    int n_views = 15;
    DiffusionConfig diffusion;
    LossWeights loss;
    FinetuneConfig finetune;

    void finalize() {
        diffusion.seed = seed;
        raster.threads = threads;
    }
};

AppConfig load_config(const std::filesystem::path& path);
void dump_config(std::ostream& out, const AppConfig& cfg);

} // namespace splatstyle
