// SPDX-License-Identifier: Apache-2.0
#include "splatstyle/pipeline.hpp"

#include <cmath>

#include "splatstyle/diffusion.hpp"
#include "splatstyle/error.hpp"
#include "splatstyle/losses.hpp"
#include "splatstyle/rng.hpp"

namespace splatstyle {

void dataset_update(StylizationRun& run) {
    if (run.cameras.empty()) throw Error(ErrorCode::EmptyCameraList, "dataset_update needs cameras");

    run.content_images.clear();
    run.content_images.reserve(run.cameras.size());
    for (const Camera& cam : run.cameras)
        run.content_images.push_back(render(run.scene, cam, run.config.raster));

    run.groups = group_views(run.cameras, run.config.n_views);

    DiffusionConfig dcfg = run.config.diffusion;
    dcfg.nv_sharing = !run.ablation.no_nv_attention;
    const DenoiserWeights weights = DenoiserWeights::seeded(dcfg);

    run.targets.assign(run.cameras.size(), ImageRGB());
    for (const ViewGroup& group : run.groups) {
        std::vector<ImageRGB> group_imgs;
        group_imgs.reserve(group.view_indices.size());
        for (int idx : group.view_indices) group_imgs.push_back(run.content_images[idx]);
        std::vector<ImageRGB> stylized = stylize_group(weights, dcfg, group_imgs, run.style_image);
        for (std::size_t k = 0; k < group.view_indices.size(); ++k)
            run.targets[group.view_indices[k]] = std::move(stylized[k]);
    }
}

namespace {

// One Adam step over the whole scene; gradients laid out as in RenderGradients.
void adam_step(GaussianScene& scene, const RenderGradients& grads, OptimizerState& opt,
               const FinetuneConfig& cfg) {
    ++opt.step;
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double corr1 = 1.0 - std::pow(b1, opt.step);
    const double corr2 = 1.0 - std::pow(b2, opt.step);

    auto update = [&](std::size_t slot, double grad, double lr, double& param) {
        double& m = opt.m[slot];
        double& v = opt.v[slot];
        m = b1 * m + (1.0 - b1) * grad;
        v = b2 * v + (1.0 - b2) * grad * grad;
        const double m_hat = m / corr1;
        const double v_hat = v / corr2;
        param -= lr * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
    };

    for (std::size_t i = 0; i < scene.size(); ++i) {
        Gaussian3D& g = scene.gaussians[i];
        const std::size_t base = i * OptimizerState::kParamsPerGaussian;
        update(base + 0, grads.position[i].x, cfg.lr_position, g.position.x);
        update(base + 1, grads.position[i].y, cfg.lr_position, g.position.y);
        update(base + 2, grads.position[i].z, cfg.lr_position, g.position.z);
        update(base + 3, grads.rotation[i][0], cfg.lr_rotation, g.rotation.w);
        update(base + 4, grads.rotation[i][1], cfg.lr_rotation, g.rotation.x);
        update(base + 5, grads.rotation[i][2], cfg.lr_rotation, g.rotation.y);
        update(base + 6, grads.rotation[i][3], cfg.lr_rotation, g.rotation.z);
        update(base + 7, grads.log_scale[i].x, cfg.lr_log_scale, g.log_scale.x);
        update(base + 8, grads.log_scale[i].y, cfg.lr_log_scale, g.log_scale.y);
        update(base + 9, grads.log_scale[i].z, cfg.lr_log_scale, g.log_scale.z);
        update(base + 10, grads.opacity_logit[i], cfg.lr_opacity_logit, g.opacity_logit);
        update(base + 11, grads.color[i].x, cfg.lr_color, g.color.x);
        update(base + 12, grads.color[i].y, cfg.lr_color, g.color.y);
        update(base + 13, grads.color[i].z, cfg.lr_color, g.color.z);
        // renormalize only when the step actually moved the norm, so a zero
        // gradient is an exact fixed point of the whole update
        const Quat& q = g.rotation;
        const double norm_sq = q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z;
        if (std::abs(norm_sq - 1.0) > 1e-12) g.rotation = g.rotation.normalized();
    }
}

} // namespace

FinetuneReport finetune(StylizationRun& run) {
    if (run.ablation.from_scratch)
        run.scene = scratch_initialize(run.cameras, run.targets, run.config.finetune.scratch_gaussians,
                                       derive_seed(run.config.seed, "scratch-init"));
    if (run.targets.size() != run.cameras.size())
        throw Error(ErrorCode::LengthMismatch, "finetune needs one stylized target per camera");

    const FeatureExtractor ext = FeatureExtractor::seeded(derive_seed(run.config.seed, "extractor"));
    LossWeights weights = run.config.loss;
    if (run.ablation.no_nnfm) weights.w_nnfm = 0.0;

    OptimizerState opt;
    opt.init(run.scene.size());

    FinetuneReport report;
    const int iters = run.config.finetune.iterations;
    report.losses.reserve(iters);
    for (int iter = 0; iter < iters; ++iter) {
        const int cam_idx = iter % static_cast<int>(run.cameras.size());
        const Camera& cam = run.cameras[cam_idx];
        const ImageRGB img = render(run.scene, cam, run.config.raster);
        const FinetuneLossResult loss =
            finetune_loss(img, run.targets[cam_idx], run.style_image, ext, weights);
        if (!std::isfinite(loss.total))
            throw Error(ErrorCode::DivergenceDetected,
                        "loss is not finite at iteration " + std::to_string(iter + 1));
        report.losses.push_back(loss.total);
        if (iter == 0) report.first_loss = loss.total;
        report.last_loss = loss.total;

        const RenderGradients grads = render_backward(run.scene, cam, loss.pixel_grad, run.config.raster);
        adam_step(run.scene, grads, opt, run.config.finetune);
    }
    return report;
}

MetricReport evaluate_run(const StylizationRun& run, const GaussianScene& original_scene) {
    const FeatureExtractor ext = FeatureExtractor::seeded(derive_seed(run.config.seed, "extractor"));
    MetricReport report;

    std::vector<Descriptor> orig_desc, styl_desc;
    const Descriptor style_desc = descriptor_from_image(ext, run.style_image);
    double cfsd_total = 0.0, csd_total = 0.0;
    for (const Camera& cam : run.cameras) {
        const ImageRGB orig = render(original_scene, cam, run.config.raster);
        const ImageRGB styl = render(run.scene, cam, run.config.raster);
        cfsd_total += cfsd(orig, styl, ext);
        csd_total += csd_score(style_desc, descriptor_from_image(ext, styl));
        orig_desc.push_back(descriptor_from_image(ext, orig));
        styl_desc.push_back(descriptor_from_image(ext, styl));
    }
    report.cfsd = cfsd_total / static_cast<double>(run.cameras.size());
    report.csd = csd_total / static_cast<double>(run.cameras.size());
    if (run.cameras.size() >= 2) {
        const ClipDcResult dc = clip_dc(orig_desc, styl_desc);
        report.clip_dc = dc.score;
        report.clip_dc_degenerate_pairs = dc.degenerate_pairs;
    }
    return report;
}

std::vector<AblationOutcome> run_ablation(const StylizationRun& base, AblationVariant variant,
                                          const std::vector<int>& sweep_n) {
    std::vector<std::pair<std::string, StylizationRun>> runs;
    switch (variant) {
        case AblationVariant::Default: {
            runs.emplace_back("default", base);
            break;
        }
        case AblationVariant::FromScratch: {
            StylizationRun r = base;
            r.ablation.from_scratch = true;
            runs.emplace_back("from-scratch", std::move(r));
            break;
        }
        case AblationVariant::NoNvAttention: {
            StylizationRun r = base;
            r.ablation.no_nv_attention = true;
            runs.emplace_back("no-nv-attention", std::move(r));
            break;
        }
        case AblationVariant::NoNnfm: {
            StylizationRun r = base;
            r.ablation.no_nnfm = true;
            runs.emplace_back("no-nnfm", std::move(r));
            break;
        }
        case AblationVariant::NSweep: {
            for (int n : sweep_n) {
                StylizationRun r = base;
                r.config.n_views = n;
                runs.emplace_back("n" + std::to_string(n), std::move(r));
            }
            break;
        }
    }

    std::vector<AblationOutcome> outcomes;
    for (auto& [name, run] : runs) {
        AblationOutcome out;
        out.name = name;
        out.n_views = run.config.n_views;
        const GaussianScene original = run.scene;
        dataset_update(run);
        out.finetune_report = finetune(run);
        out.metrics = evaluate_run(run, original);
        out.scene = std::move(run.scene);
        outcomes.push_back(std::move(out));
    }
    return outcomes;
}

GaussianScene scratch_initialize(const std::vector<Camera>& cameras,
                                 const std::vector<ImageRGB>& targets, int count,
                                 std::uint64_t seed) {
    if (cameras.empty()) throw Error(ErrorCode::EmptyCameraList, "scratch_initialize needs cameras");
    if (targets.size() != cameras.size())
        throw Error(ErrorCode::LengthMismatch, "scratch_initialize needs one target per camera");

    // depth window from the camera layout: cameras typically orbit the subject
    Vec3 centroid;
    for (const Camera& c : cameras) centroid += c.center();
    centroid = centroid * (1.0 / cameras.size());
    double mean_dist = 0.0;
    for (const Camera& c : cameras) mean_dist += (c.center() - centroid).norm();
    mean_dist /= static_cast<double>(cameras.size());
    if (mean_dist < 1e-9) mean_dist = 1.0;
    const double depth_lo = 0.25 * mean_dist;
    const double depth_hi = 1.75 * mean_dist;

    Rng rng(seed);
    GaussianScene scene;
    scene.gaussians.reserve(count);
    const double log_scale = std::log(0.02 * mean_dist);
    for (int k = 0; k < count; ++k) {
        const std::size_t cam_idx = static_cast<std::size_t>(k) % cameras.size();
        const Camera& cam = cameras[cam_idx];
        const ImageRGB& target = targets[cam_idx];
        const int col = static_cast<int>(rng.index(cam.width));
        const int row = static_cast<int>(rng.index(cam.height));
        const double depth = rng.uniform(depth_lo, depth_hi);
        const Vec3 dir_cam{(col + 0.5 - cam.cx) / cam.fx, (row + 0.5 - cam.cy) / cam.fy, 1.0};
        const Vec3 p_cam = dir_cam * depth;
        const Vec3 p_world = cam.rotation.transposed() * (p_cam - cam.translation);

        Gaussian3D g;
        g.position = p_world;
        g.rotation = {1, 0, 0, 0};
        g.log_scale = {log_scale, log_scale, log_scale};
        g.opacity_logit = 0.0;
        g.color = {target.at(row, col, 0), target.at(row, col, 1), target.at(row, col, 2)};
        scene.gaussians.push_back(g);
    }
    return scene;
}

} // namespace splatstyle
