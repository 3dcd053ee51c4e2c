// SPDX-License-Identifier: Apache-2.0
#include "splatstyle/config.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "splatstyle/error.hpp"

namespace splatstyle {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void bad(const std::filesystem::path& p, int line, const std::string& what) {
    throw Error(ErrorCode::MalformedFile, p.string() + ":" + std::to_string(line) + ": " + what);
}

} // namespace

AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());

    AppConfig cfg;
    std::string section;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = t.substr(1, t.size() - 2);
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) bad(path, line_no, "expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));

        auto as_double = [&]() {
            try {
                return std::stod(val);
            } catch (...) {
                bad(path, line_no, "bad number '" + val + "'");
            }
        };
        auto as_int = [&]() {
            try {
                return std::stoi(val);
            } catch (...) {
                bad(path, line_no, "bad integer '" + val + "'");
            }
        };
        auto as_u64 = [&]() -> std::uint64_t {
            try {
                return std::stoull(val);
            } catch (...) {
                bad(path, line_no, "bad integer '" + val + "'");
            }
        };

        bool known = true;
        if (section == "run") {
            if (key == "seed") cfg.seed = as_u64();
            else if (key == "threads") cfg.threads = as_int();
            else known = false;
        } else if (section == "rasterizer") {
            if (key == "near_plane") cfg.raster.near_plane = as_double();
            else if (key == "lowpass") cfg.raster.lowpass = as_double();
            else if (key == "alpha_max") cfg.raster.alpha_max = as_double();
            else if (key == "cutoff_sigma") cfg.raster.cutoff_sigma = as_double();
            else if (key == "min_transmittance") cfg.raster.min_transmittance = as_double();
            else if (key == "tile_size") cfg.raster.tile_size = as_int();
            else known = false;
        } else if (section == "view-grouping") {
            if (key == "n_views") cfg.n_views = as_int();
            else known = false;
        } else if (section == "nv-diffusion") {
            if (key == "patch_size") cfg.diffusion.patch_size = as_int();
            else if (key == "token_dim") cfg.diffusion.token_dim = as_int();
            else if (key == "style_tokens") cfg.diffusion.style_tokens = as_int();
            else if (key == "content_tokens") cfg.diffusion.content_tokens = as_int();
            else if (key == "blocks") cfg.diffusion.blocks = as_int();
            else if (key == "mlp_hidden") cfg.diffusion.mlp_hidden = as_int();
            else if (key == "ddim_steps") cfg.diffusion.ddim_steps = as_int();
            else if (key == "alpha_start") cfg.diffusion.alpha_start = as_double();
            else if (key == "alpha_end") cfg.diffusion.alpha_end = as_double();
            else if (key == "content_scale") cfg.diffusion.content_scale = as_double();
            else if (key == "style_scale") cfg.diffusion.style_scale = as_double();
            else if (key == "control_scale") cfg.diffusion.control_scale = as_double();
            else known = false;
        } else if (section == "losses") {
            if (key == "w_rgb") cfg.loss.w_rgb = as_double();
            else if (key == "w_nnfm") cfg.loss.w_nnfm = as_double();
            else known = false;
        } else if (section == "finetune-pipeline") {
            if (key == "iterations") cfg.finetune.iterations = as_int();
            else if (key == "lr_position") cfg.finetune.lr_position = as_double();
            else if (key == "lr_rotation") cfg.finetune.lr_rotation = as_double();
            else if (key == "lr_log_scale") cfg.finetune.lr_log_scale = as_double();
            else if (key == "lr_opacity_logit") cfg.finetune.lr_opacity_logit = as_double();
            else if (key == "lr_color") cfg.finetune.lr_color = as_double();
            else if (key == "adam_beta1") cfg.finetune.adam_beta1 = as_double();
            else if (key == "adam_beta2") cfg.finetune.adam_beta2 = as_double();
            else if (key == "adam_epsilon") cfg.finetune.adam_epsilon = as_double();
            else if (key == "scratch_gaussians") cfg.finetune.scratch_gaussians = as_int();
            else known = false;
        } else {
            bad(path, line_no, "unknown section [" + section + "]");
        }
        if (!known) bad(path, line_no, "unknown key '" + key + "' in [" + section + "]");
    }
    cfg.finalize();
    return cfg;
}

void dump_config(std::ostream& out, const AppConfig& cfg) {
    out << "[run]\n";
    out << "seed = " << cfg.seed << "\n";
    out << "threads = " << cfg.threads << "\n";
    out << "\n[rasterizer]\n";
    out << "near_plane = " << cfg.raster.near_plane << "\n";
    out << "lowpass = " << cfg.raster.lowpass << "\n";
    out << "alpha_max = " << cfg.raster.alpha_max << "\n";
    out << "cutoff_sigma = " << cfg.raster.cutoff_sigma << "\n";
    out << "min_transmittance = " << cfg.raster.min_transmittance << "\n";
    out << "tile_size = " << cfg.raster.tile_size << "\n";
    out << "\n[view-grouping]\n";
    out << "n_views = " << cfg.n_views << "\n";
    out << "\n[nv-diffusion]\n";
    out << "patch_size = " << cfg.diffusion.patch_size << "\n";
    out << "token_dim = " << cfg.diffusion.token_dim << "\n";
    out << "style_tokens = " << cfg.diffusion.style_tokens << "\n";
    out << "content_tokens = " << cfg.diffusion.content_tokens << "\n";
    out << "blocks = " << cfg.diffusion.blocks << "\n";
    out << "mlp_hidden = " << cfg.diffusion.mlp_hidden << "\n";
    out << "ddim_steps = " << cfg.diffusion.ddim_steps << "\n";
    out << "alpha_start = " << cfg.diffusion.alpha_start << "\n";
    out << "alpha_end = " << cfg.diffusion.alpha_end << "\n";
    out << "content_scale = " << cfg.diffusion.content_scale << "\n";
    out << "style_scale = " << cfg.diffusion.style_scale << "\n";
    out << "control_scale = " << cfg.diffusion.control_scale << "\n";
    out << "\n[losses]\n";
    out << "w_rgb = " << cfg.loss.w_rgb << "\n";
    out << "w_nnfm = " << cfg.loss.w_nnfm << "\n";
    out << "\n[finetune-pipeline]\n";
    out << "iterations = " << cfg.finetune.iterations << "\n";
    out << "lr_position = " << cfg.finetune.lr_position << "\n";
    out << "lr_rotation = " << cfg.finetune.lr_rotation << "\n";
    out << "lr_log_scale = " << cfg.finetune.lr_log_scale << "\n";
    out << "lr_opacity_logit = " << cfg.finetune.lr_opacity_logit << "\n";
    out << "lr_color = " << cfg.finetune.lr_color << "\n";
    out << "adam_beta1 = " << cfg.finetune.adam_beta1 << "\n";
    out << "adam_beta2 = " << cfg.finetune.adam_beta2 << "\n";
    out << "adam_epsilon = " << cfg.finetune.adam_epsilon << "\n";
    out << "scratch_gaussians = " << cfg.finetune.scratch_gaussians << "\n";
}

} // namespace splatstyle
