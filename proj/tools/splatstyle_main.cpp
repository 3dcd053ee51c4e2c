// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "splatstyle/config.hpp"
#include "splatstyle/error.hpp"
#include "splatstyle/fixture.hpp"
#include "splatstyle/grouping.hpp"
#include "splatstyle/io/atomic_file.hpp"
#include "splatstyle/io/colmap_io.hpp"
#include "splatstyle/io/feature_io.hpp"
#include "splatstyle/io/ply_io.hpp"
#include "splatstyle/io/png_io.hpp"
#include "splatstyle/metrics.hpp"
#include "splatstyle/pipeline.hpp"
#include "splatstyle/raster.hpp"

namespace fs = std::filesystem;
using namespace splatstyle;

namespace {

std::string stem_of(const std::string& name) { return fs::path(name).stem().string(); }

std::vector<std::string> sorted_pngs(const fs::path& dir) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

StylizationRun load_run(const std::string& scene_path, const std::string& colmap_dir,
                        const std::string& style_path, const AppConfig& cfg,
                        std::vector<std::string>* names_out = nullptr) {
    StylizationRun run;
    if (!scene_path.empty()) run.scene = load_ply(scene_path);
    const ColmapModel model = load_colmap(colmap_dir);
    run.cameras = model.cameras;
    if (names_out) *names_out = model.image_names;
    if (!style_path.empty()) run.style_image = read_png(style_path);
    run.config = cfg;
    return run;
}

std::vector<ImageRGB> load_targets(const fs::path& dir, const std::vector<std::string>& names) {
    std::vector<ImageRGB> targets;
    targets.reserve(names.size());
    for (const std::string& name : names) targets.push_back(read_png(dir / name));
    return targets;
}

void print_groups(const std::vector<ViewGroup>& groups, const std::vector<Camera>& cams) {
    std::printf("group  size  views\n");
    for (std::size_t g = 0; g < groups.size(); ++g) {
        std::ostringstream views;
        for (std::size_t k = 0; k < groups[g].view_indices.size(); ++k) {
            if (k) views << " ";
            views << groups[g].view_indices[k];
        }
        std::printf("%5zu  %4zu  %s\n", g, groups[g].view_indices.size(), views.str().c_str());
    }
    std::printf("mean within-group camera distance: %.6f\n", mean_within_group_distance(cams, groups));
}

void write_metric_report(const fs::path& path, const MetricReport& report) {
    atomic_write_file(path, [&](std::ostream& out) {
        out << "cfsd = " << report.cfsd << "\n";
        out << "csd = " << report.csd << "\n";
        out << "clip_dc = " << report.clip_dc << "\n";
        out << "clip_dc_degenerate_pairs = " << report.clip_dc_degenerate_pairs << "\n";
        out << "camera_path = " << report.camera_path << "\n";
    });
}

void print_metric_report(const MetricReport& report) {
    std::printf("metric    value\n");
    std::printf("CFSD      %.6f\n", report.cfsd);
    std::printf("CSD       %.6f\n", report.csd);
    std::printf("CLIP-DC   %.6f  (degenerate pairs: %d; path: %s)\n", report.clip_dc,
                report.clip_dc_degenerate_pairs, report.camera_path.c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"splatstyle - neighboring-view Gaussian scene stylization"};
    app.require_subcommand(0, 1);
    app.failure_message([](const CLI::App*, const CLI::Error& e) {
        return std::string("error: UsageError: ") + e.what() + "\n";
    });

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false, threads_set = false, dump = false;
    int threads = 1;
    app.add_option("--config", config_path, "key = value config file");
    app.add_option("--seed", seed, "global RNG seed")->each([&](const std::string&) { seed_set = true; });
    app.add_option("--threads", threads, "rasterizer worker threads")
        ->each([&](const std::string&) { threads_set = true; });
    app.add_flag("--dump-config", dump, "print the effective config and exit");

    // fixture
    auto* cmd_fixture = app.add_subcommand("fixture", "write the bundled synthetic fixture");
    std::string fx_out;
    FixtureSpec fx_spec;
    cmd_fixture->add_option("--out", fx_out, "output directory")->required();
    cmd_fixture->add_option("--gaussians", fx_spec.gaussians, "number of Gaussians");
    cmd_fixture->add_option("--cameras", fx_spec.cameras, "number of ring cameras");
    cmd_fixture->add_option("--resolution", fx_spec.resolution, "image resolution");

    // render
    auto* cmd_render = app.add_subcommand("render", "render all views of a scene to PNGs");
    std::string r_scene, r_colmap, r_out;
    cmd_render->add_option("--scene", r_scene, "gaussian scene PLY")->required();
    cmd_render->add_option("--colmap", r_colmap, "COLMAP text model directory")->required();
    cmd_render->add_option("--out", r_out, "output directory")->required();

    // group-views
    auto* cmd_group = app.add_subcommand("group-views", "report the neighboring-view partition");
    std::string g_colmap;
    int g_n = -1;
    cmd_group->add_option("--colmap", g_colmap, "COLMAP text model directory")->required();
    cmd_group->add_option("--n-views", g_n, "views per group (default from config)");

    // stylize
    auto* cmd_stylize = app.add_subcommand("stylize", "dataset update: render, group, stylize");
    std::string s_scene, s_colmap, s_style, s_out;
    int s_n = -1;
    bool s_no_nv = false;
    cmd_stylize->add_option("--scene", s_scene, "gaussian scene PLY")->required();
    cmd_stylize->add_option("--colmap", s_colmap, "COLMAP text model directory")->required();
    cmd_stylize->add_option("--style", s_style, "style image PNG")->required();
    cmd_stylize->add_option("--out", s_out, "target output directory")->required();
    cmd_stylize->add_option("--n-views", s_n, "views per group (default from config)");
    cmd_stylize->add_flag("--no-nv-attention", s_no_nv, "stylize views independently");
    int s_steps = -1;
    double s_content_scale = -1, s_style_scale = -1, s_control_scale = -1;
    cmd_stylize->add_option("--ddim-steps", s_steps, "DDIM steps (default from config)");
    cmd_stylize->add_option("--content-scale", s_content_scale, "content token scale");
    cmd_stylize->add_option("--style-scale", s_style_scale, "style token scale");
    cmd_stylize->add_option("--control-scale", s_control_scale, "control residual scale");

    // finetune / train-scratch
    auto* cmd_finetune = app.add_subcommand("finetune", "optimize the scene against stylized targets");
    auto* cmd_scratch = app.add_subcommand("train-scratch", "train a fresh scene from stylized targets");
    std::string f_scene, f_colmap, f_style, f_targets, f_out, f_render_out;
    int f_iters = -1;
    bool f_no_nnfm = false;
    for (CLI::App* c : {cmd_finetune, cmd_scratch}) {
        if (c == cmd_finetune)
            c->add_option("--scene", f_scene, "gaussian scene PLY")->required();
        c->add_option("--colmap", f_colmap, "COLMAP text model directory")->required();
        c->add_option("--style", f_style, "style image PNG")->required();
        c->add_option("--targets", f_targets, "stylized target directory")->required();
        c->add_option("--out", f_out, "output scene PLY")->required();
        c->add_option("--render-out", f_render_out, "optionally render the result views here");
        c->add_option("--iters", f_iters, "finetune iterations (default from config)");
        c->add_flag("--no-nnfm", f_no_nnfm, "drop the NNFM term (pure L1)");
    }

    // ablate
    auto* cmd_ablate = app.add_subcommand("ablate", "run an ablation variant end to end");
    std::string a_scene, a_colmap, a_style, a_out, a_variant = "default";
    std::vector<int> a_sweep;
    int a_iters = -1, a_n = -1;
    cmd_ablate->add_option("--scene", a_scene, "gaussian scene PLY")->required();
    cmd_ablate->add_option("--colmap", a_colmap, "COLMAP text model directory")->required();
    cmd_ablate->add_option("--style", a_style, "style image PNG")->required();
    cmd_ablate->add_option("--out", a_out, "output directory")->required();
    cmd_ablate
        ->add_option("--variant", a_variant, "default|from-scratch|no-nv-attention|no-nnfm|n-sweep")
        ->check(CLI::IsMember({"default", "from-scratch", "no-nv-attention", "no-nnfm", "n-sweep"}));
    cmd_ablate->add_option("--sweep", a_sweep, "group sizes for n-sweep")->delimiter(',');
    cmd_ablate->add_option("--iters", a_iters, "finetune iterations (default from config)");
    cmd_ablate->add_option("--n-views", a_n, "views per group (default from config)");

    // metrics
    auto* cmd_metrics = app.add_subcommand("metrics", "evaluate CFSD / CSD / CLIP-DC on frame dirs");
    std::string m_orig, m_styl, m_style_img, m_style_desc, m_orig_desc, m_styl_desc, m_out;
    cmd_metrics->add_option("--original", m_orig, "directory of original frames")->required();
    cmd_metrics->add_option("--stylized", m_styl, "directory of stylized frames")->required();
    cmd_metrics->add_option("--style-image", m_style_img, "style image PNG (for CSD)");
    cmd_metrics->add_option("--style-desc", m_style_desc, "imported style descriptor file");
    cmd_metrics->add_option("--orig-desc", m_orig_desc, "directory of imported frame descriptors");
    cmd_metrics->add_option("--styl-desc", m_styl_desc, "directory of imported frame descriptors");
    cmd_metrics->add_option("--out", m_out, "machine-readable report file");

    CLI11_PARSE(app, argc, argv);

    try {
        AppConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (seed_set) cfg.seed = seed;
        if (threads_set) cfg.threads = threads;
        cfg.finalize();
        fx_spec.seed = cfg.seed;

        if (dump && !app.get_subcommands().size()) {
            dump_config(std::cout, cfg);
            return 0;
        }

        if (*cmd_fixture) {
            write_fixture(fx_out, fx_spec);
            std::printf("fixture written to %s (%d gaussians, %d cameras, %dx%d)\n", fx_out.c_str(),
                        fx_spec.gaussians, fx_spec.cameras, fx_spec.resolution, fx_spec.resolution);
            return 0;
        }

        if (*cmd_render) {
            std::vector<std::string> names;
            StylizationRun run = load_run(r_scene, r_colmap, "", cfg, &names);
            fs::create_directories(r_out);
            for (std::size_t i = 0; i < run.cameras.size(); ++i) {
                const ImageRGB img = render(run.scene, run.cameras[i], cfg.raster);
                write_png(fs::path(r_out) / names[i], img);
            }
            std::printf("rendered %zu views to %s\n", run.cameras.size(), r_out.c_str());
            return 0;
        }

        if (*cmd_group) {
            const ColmapModel model = load_colmap(g_colmap);
            const int n = g_n > 0 ? g_n : cfg.n_views;
            const auto groups = group_views(model.cameras, n);
            print_groups(groups, model.cameras);
            return 0;
        }

        if (*cmd_stylize) {
            std::vector<std::string> names;
            StylizationRun run = load_run(s_scene, s_colmap, s_style, cfg, &names);
            if (s_n > 0) run.config.n_views = s_n;
            if (s_steps >= 0) run.config.diffusion.ddim_steps = s_steps;
            if (s_content_scale >= 0) run.config.diffusion.content_scale = s_content_scale;
            if (s_style_scale >= 0) run.config.diffusion.style_scale = s_style_scale;
            if (s_control_scale >= 0) run.config.diffusion.control_scale = s_control_scale;
            run.ablation.no_nv_attention = s_no_nv;
            dataset_update(run);
            fs::create_directories(s_out);
            for (std::size_t i = 0; i < run.targets.size(); ++i)
                write_png(fs::path(s_out) / names[i], run.targets[i]);
            std::printf("stylized %zu views in %zu groups\n", run.targets.size(), run.groups.size());
            print_groups(run.groups, run.cameras);
            return 0;
        }

        if (*cmd_finetune || *cmd_scratch) {
            std::vector<std::string> names;
            StylizationRun run = load_run(f_scene, f_colmap, f_style, cfg, &names);
            if (f_iters >= 0) run.config.finetune.iterations = f_iters;
            run.ablation.no_nnfm = f_no_nnfm;
            run.ablation.from_scratch = cmd_scratch->parsed();
            run.targets = load_targets(f_targets, names);
            const FinetuneReport report = finetune(run);
            save_ply(run.scene, f_out);
            if (!f_render_out.empty()) {
                fs::create_directories(f_render_out);
                for (std::size_t i = 0; i < run.cameras.size(); ++i)
                    write_png(fs::path(f_render_out) / names[i],
                              render(run.scene, run.cameras[i], cfg.raster));
            }
            std::printf("finetuned %d iterations: loss %.6f -> %.6f; scene written to %s\n",
                        run.config.finetune.iterations, report.first_loss, report.last_loss,
                        f_out.c_str());
            return 0;
        }

        if (*cmd_ablate) {
            std::vector<std::string> names;
            StylizationRun base = load_run(a_scene, a_colmap, a_style, cfg, &names);
            if (a_iters >= 0) base.config.finetune.iterations = a_iters;
            if (a_n > 0) base.config.n_views = a_n;
            AblationVariant variant = AblationVariant::Default;
            if (a_variant == "from-scratch") variant = AblationVariant::FromScratch;
            else if (a_variant == "no-nv-attention") variant = AblationVariant::NoNvAttention;
            else if (a_variant == "no-nnfm") variant = AblationVariant::NoNnfm;
            else if (a_variant == "n-sweep") variant = AblationVariant::NSweep;
            if (variant == AblationVariant::NSweep && a_sweep.empty()) a_sweep = {2, 4, 8};

            const auto outcomes = run_ablation(base, variant, a_sweep);
            fs::create_directories(a_out);
            for (const AblationOutcome& out : outcomes) {
                save_ply(out.scene, fs::path(a_out) / (out.name + ".ply"));
                write_metric_report(fs::path(a_out) / (out.name + ".metrics"), out.metrics);
                std::printf("variant %s (N=%d): loss %.6f -> %.6f\n", out.name.c_str(), out.n_views,
                            out.finetune_report.first_loss, out.finetune_report.last_loss);
                print_metric_report(out.metrics);
            }
            return 0;
        }

        if (*cmd_metrics) {
            const auto orig_names = sorted_pngs(m_orig);
            const auto styl_names = sorted_pngs(m_styl);
            if (orig_names.size() != styl_names.size())
                throw Error(ErrorCode::LengthMismatch, "frame directories differ in length");
            if (orig_names.empty()) throw Error(ErrorCode::TooShort, "no frames found");

            const FeatureExtractor ext = FeatureExtractor::seeded(derive_seed(cfg.seed, "extractor"));
            MetricReport report;
            std::vector<Descriptor> orig_desc, styl_desc;
            double cfsd_total = 0.0, csd_total = 0.0;
            bool have_csd = false;
            Descriptor style_desc;
            if (!m_style_desc.empty()) {
                style_desc = descriptor_from_features(load_feature_map(m_style_desc), "imported");
                have_csd = true;
            } else if (!m_style_img.empty()) {
                style_desc = descriptor_from_image(ext, read_png(m_style_img));
                have_csd = true;
            }

            for (std::size_t i = 0; i < orig_names.size(); ++i) {
                const ImageRGB orig = read_png(fs::path(m_orig) / orig_names[i]);
                const ImageRGB styl = read_png(fs::path(m_styl) / styl_names[i]);
                cfsd_total += cfsd(orig, styl, ext);
                Descriptor od, sd;
                if (!m_orig_desc.empty())
                    od = descriptor_from_features(
                        load_feature_map(fs::path(m_orig_desc) / (stem_of(orig_names[i]) + ".feat")),
                        "imported");
                else
                    od = descriptor_from_image(ext, orig);
                if (!m_styl_desc.empty())
                    sd = descriptor_from_features(
                        load_feature_map(fs::path(m_styl_desc) / (stem_of(styl_names[i]) + ".feat")),
                        "imported");
                else
                    sd = descriptor_from_image(ext, styl);
                if (have_csd) csd_total += csd_score(style_desc, sd);
                orig_desc.push_back(std::move(od));
                styl_desc.push_back(std::move(sd));
            }
            report.cfsd = cfsd_total / static_cast<double>(orig_names.size());
            report.csd = have_csd ? csd_total / static_cast<double>(orig_names.size()) : 0.0;
            if (orig_names.size() >= 2) {
                const ClipDcResult dc = clip_dc(orig_desc, styl_desc);
                report.clip_dc = dc.score;
                report.clip_dc_degenerate_pairs = dc.degenerate_pairs;
            }
            print_metric_report(report);
            if (!m_out.empty()) write_metric_report(m_out, report);
            return 0;
        }

        // no subcommand
        std::cout << app.help() << std::endl;
        return 0;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: Internal: %s\n", e.what());
        return 1;
    }
}
