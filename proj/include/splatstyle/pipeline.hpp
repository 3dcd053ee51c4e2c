// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "splatstyle/config.hpp"
#include "splatstyle/grouping.hpp"
#include "splatstyle/metrics.hpp"
#include "splatstyle/raster.hpp"
#include "splatstyle/scene.hpp"

namespace splatstyle {

struct AblationFlags {
    bool from_scratch = false;
    bool no_nv_attention = false;
    bool no_nnfm = false;
};

// Everything one stylization-plus-finetune run carries.
struct StylizationRun {
    GaussianScene scene;
    std::vector<Camera> cameras;
    ImageRGB style_image;
    AppConfig config;
    AblationFlags ablation;

    // filled by dataset_update
    std::vector<ImageRGB> content_images;
    std::vector<ViewGroup> groups;
    std::vector<ImageRGB> targets;
};

// Adam moment buffers mirroring the scene parameter layout.
struct OptimizerState {
    int step = 0;
    std::vector<double> m, v; // flattened: 14 doubles per Gaussian

    static constexpr int kParamsPerGaussian = 14;
    void init(std::size_t n_gaussians) {
        step = 0;
        m.assign(n_gaussians * kParamsPerGaussian, 0.0);
        v.assign(n_gaussians * kParamsPerGaussian, 0.0);
    }
};

// Renders every camera, groups the views, and stylizes each group jointly;
// run.targets ends up aligned 1:1 with run.cameras.
void dataset_update(StylizationRun& run);

struct FinetuneReport {
    double first_loss = 0.0;
    double last_loss = 0.0;
    std::vector<double> losses;
};

// Round-robin camera schedule; Adam updates with per-parameter-group learning
// rates; quaternions renormalized after every step.
FinetuneReport finetune(StylizationRun& run);

struct MetricReport {
    double cfsd = 0.0;
    double csd = 0.0;
    double clip_dc = 0.0;
    int clip_dc_degenerate_pairs = 0;
    std::string camera_path = "training-camera sequence (single path)";
};

// CFSD/CSD/CLIP-DC of the finetuned scene against the original, averaged over
// the run's cameras.
MetricReport evaluate_run(const StylizationRun& run, const GaussianScene& original_scene);

enum class AblationVariant { Default, FromScratch, NoNvAttention, NoNnfm, NSweep };

struct AblationOutcome {
    std::string name;
    int n_views = 0;
    GaussianScene scene;
    FinetuneReport finetune_report;
    MetricReport metrics;
};

std::vector<AblationOutcome> run_ablation(const StylizationRun& base, AblationVariant variant,
                                          const std::vector<int>& sweep_n = {});

// Fresh scene for the train-from-scratch variant: Gaussians seeded at
// unprojected target pixels with depth uniform in the camera frustum.
GaussianScene scratch_initialize(const std::vector<Camera>& cameras,
                                 const std::vector<ImageRGB>& targets, int count,
                                 std::uint64_t seed);

} // namespace splatstyle
