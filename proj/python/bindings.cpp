// SPDX-License-Identifier: Apache-2.0
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "splatstyle/diffusion.hpp"
#include "splatstyle/fixture.hpp"
#include "splatstyle/grouping.hpp"
#include "splatstyle/io/ply_io.hpp"
#include "splatstyle/losses.hpp"
#include "splatstyle/metrics.hpp"
#include "splatstyle/raster.hpp"
#include "splatstyle/scene.hpp"

namespace py = pybind11;
using namespace splatstyle;

namespace {

ImageRGB image_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 3 || arr.shape(2) != 3) throw py::value_error("expected an (h, w, 3) array");
    ImageRGB img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
    std::memcpy(img.px.data(), arr.data(), img.px.size() * sizeof(double));
    return img;
}

py::array_t<double> image_to_array(const ImageRGB& img) {
    py::array_t<double> arr({img.height, img.width, 3});
    std::memcpy(arr.mutable_data(), img.px.data(), img.px.size() * sizeof(double));
    return arr;
}

Mat mat_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw py::value_error("expected a 2-d array");
    Mat m(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
    std::memcpy(m.v.data(), arr.data(), m.v.size() * sizeof(double));
    return m;
}

py::array_t<double> mat_to_array(const Mat& m) {
    py::array_t<double> arr({m.rows, m.cols});
    std::memcpy(arr.mutable_data(), m.v.data(), m.v.size() * sizeof(double));
    return arr;
}

FeatureMap features_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 3) throw py::value_error("expected an (h, w, c) array");
    FeatureMap f(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)),
                 static_cast<int>(arr.shape(2)));
    std::memcpy(f.data.data(), arr.data(), f.data.size() * sizeof(double));
    return f;
}

py::array_t<double> mat3_to_array(const Mat3& m) {
    py::array_t<double> arr({3, 3});
    std::memcpy(arr.mutable_data(), m.m.data(), 9 * sizeof(double));
    return arr;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "splatstyle core: Gaussian splatting stylization kernels";

    py::register_exception<Error>(m, "SplatstyleError");

    py::class_<Gaussian3D>(m, "Gaussian3D")
        .def(py::init<>())
        .def_property(
            "position",
            [](const Gaussian3D& g) { return py::make_tuple(g.position.x, g.position.y, g.position.z); },
            [](Gaussian3D& g, py::sequence s) {
                g.position = {s[0].cast<double>(), s[1].cast<double>(), s[2].cast<double>()};
            })
        .def_property(
            "rotation",
            [](const Gaussian3D& g) {
                return py::make_tuple(g.rotation.w, g.rotation.x, g.rotation.y, g.rotation.z);
            },
            [](Gaussian3D& g, py::sequence s) {
                g.rotation = {s[0].cast<double>(), s[1].cast<double>(), s[2].cast<double>(),
                              s[3].cast<double>()};
            })
        .def_property(
            "log_scale",
            [](const Gaussian3D& g) {
                return py::make_tuple(g.log_scale.x, g.log_scale.y, g.log_scale.z);
            },
            [](Gaussian3D& g, py::sequence s) {
                g.log_scale = {s[0].cast<double>(), s[1].cast<double>(), s[2].cast<double>()};
            })
        .def_readwrite("opacity_logit", &Gaussian3D::opacity_logit)
        .def_property(
            "color",
            [](const Gaussian3D& g) { return py::make_tuple(g.color.x, g.color.y, g.color.z); },
            [](Gaussian3D& g, py::sequence s) {
                g.color = {s[0].cast<double>(), s[1].cast<double>(), s[2].cast<double>()};
            })
        .def("opacity", &Gaussian3D::opacity);

    py::class_<GaussianScene>(m, "GaussianScene")
        .def(py::init<>())
        .def_property(
            "background_color",
            [](const GaussianScene& s) {
                return py::make_tuple(s.background_color.x, s.background_color.y, s.background_color.z);
            },
            [](GaussianScene& s, py::sequence v) {
                s.background_color = {v[0].cast<double>(), v[1].cast<double>(), v[2].cast<double>()};
            })
        .def_readwrite("gaussians", &GaussianScene::gaussians)
        .def("__len__", &GaussianScene::size);

    py::class_<Camera>(m, "Camera")
        .def(py::init<>())
        .def_property(
            "rotation", [](const Camera& c) { return mat3_to_array(c.rotation); },
            [](Camera& c, py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
                if (arr.ndim() != 2 || arr.shape(0) != 3 || arr.shape(1) != 3)
                    throw py::value_error("expected a 3x3 array");
                std::memcpy(c.rotation.m.data(), arr.data(), 9 * sizeof(double));
            })
        .def_property(
            "translation",
            [](const Camera& c) {
                return py::make_tuple(c.translation.x, c.translation.y, c.translation.z);
            },
            [](Camera& c, py::sequence s) {
                c.translation = {s[0].cast<double>(), s[1].cast<double>(), s[2].cast<double>()};
            })
        .def_readwrite("fx", &Camera::fx)
        .def_readwrite("fy", &Camera::fy)
        .def_readwrite("cx", &Camera::cx)
        .def_readwrite("cy", &Camera::cy)
        .def_readwrite("width", &Camera::width)
        .def_readwrite("height", &Camera::height)
        .def("center", [](const Camera& c) {
            const Vec3 p = c.center();
            return py::make_tuple(p.x, p.y, p.z);
        });

    m.def("covariance_from_rs",
          [](const Gaussian3D& g) { return mat3_to_array(covariance_from_rs(g)); },
          py::arg("gaussian"));
    m.def("gaussian_density",
          [](const Gaussian3D& g, py::sequence x) {
              return gaussian_density(g, {x[0].cast<double>(), x[1].cast<double>(), x[2].cast<double>()});
          },
          py::arg("gaussian"), py::arg("x"));

    m.def(
        "render",
        [](const GaussianScene& scene, const Camera& cam, int threads) {
            RasterConfig cfg;
            cfg.threads = threads;
            return image_to_array(render(scene, cam, cfg));
        },
        py::arg("scene"), py::arg("camera"), py::arg("threads") = 1);

    m.def(
        "render_backward",
        [](const GaussianScene& scene, const Camera& cam,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& upstream) {
            const RenderGradients g = render_backward(scene, cam, image_from_array(upstream));
            const auto n = static_cast<py::ssize_t>(scene.size());
            py::array_t<double> position({n, static_cast<py::ssize_t>(3)});
            py::array_t<double> rotation({n, static_cast<py::ssize_t>(4)});
            py::array_t<double> log_scale({n, static_cast<py::ssize_t>(3)});
            py::array_t<double> opacity(n);
            py::array_t<double> color({n, static_cast<py::ssize_t>(3)});
            for (py::ssize_t i = 0; i < n; ++i) {
                position.mutable_at(i, 0) = g.position[i].x;
                position.mutable_at(i, 1) = g.position[i].y;
                position.mutable_at(i, 2) = g.position[i].z;
                for (int k = 0; k < 4; ++k) rotation.mutable_at(i, k) = g.rotation[i][k];
                log_scale.mutable_at(i, 0) = g.log_scale[i].x;
                log_scale.mutable_at(i, 1) = g.log_scale[i].y;
                log_scale.mutable_at(i, 2) = g.log_scale[i].z;
                opacity.mutable_at(i) = g.opacity_logit[i];
                color.mutable_at(i, 0) = g.color[i].x;
                color.mutable_at(i, 1) = g.color[i].y;
                color.mutable_at(i, 2) = g.color[i].z;
            }
            py::dict out;
            out["position"] = position;
            out["rotation"] = rotation;
            out["log_scale"] = log_scale;
            out["opacity_logit"] = opacity;
            out["color"] = color;
            return out;
        },
        py::arg("scene"), py::arg("camera"), py::arg("upstream"));

    m.def(
        "group_views",
        [](const std::vector<Camera>& cams, int n_views) {
            std::vector<std::vector<int>> out;
            for (const ViewGroup& g : group_views(cams, n_views)) out.push_back(g.view_indices);
            return out;
        },
        py::arg("cameras"), py::arg("n_views"));

    m.def(
        "nv_attention",
        [](const std::vector<py::array_t<double, py::array::c_style | py::array::forcecast>>& q,
           const std::vector<py::array_t<double, py::array::c_style | py::array::forcecast>>& k,
           const std::vector<py::array_t<double, py::array::c_style | py::array::forcecast>>& v) {
            std::vector<Mat> qm, km, vm;
            for (const auto& a : q) qm.push_back(mat_from_array(a));
            for (const auto& a : k) km.push_back(mat_from_array(a));
            for (const auto& a : v) vm.push_back(mat_from_array(a));
            std::vector<py::array_t<double>> out;
            for (const Mat& o : nv_attention(qm, km, vm)) out.push_back(mat_to_array(o));
            return out;
        },
        py::arg("queries"), py::arg("keys"), py::arg("values"));

    m.def(
        "ddim_step",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& z,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& eps, int t,
           const std::vector<double>& alphas) {
            LatentGrid grid;
            grid.grid_h = 1;
            grid.grid_w = static_cast<int>(z.shape(0));
            grid.timestep = t;
            grid.tokens = mat_from_array(z);
            SchedulerConfig sched;
            sched.alphas = alphas;
            return mat_to_array(ddim_step(grid, mat_from_array(eps), t, sched).tokens);
        },
        py::arg("z"), py::arg("eps"), py::arg("t"), py::arg("alphas"));

    m.def(
        "stylize_group",
        [](const std::vector<py::array_t<double, py::array::c_style | py::array::forcecast>>& contents,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& style, int ddim_steps,
           double content_scale, double style_scale, double control_scale, std::uint64_t seed,
           bool nv_sharing) {
            DiffusionConfig cfg;
            cfg.ddim_steps = ddim_steps;
            cfg.content_scale = content_scale;
            cfg.style_scale = style_scale;
            cfg.control_scale = control_scale;
            cfg.seed = seed;
            cfg.nv_sharing = nv_sharing;
            const DenoiserWeights w = DenoiserWeights::seeded(cfg);
            std::vector<ImageRGB> imgs;
            for (const auto& a : contents) imgs.push_back(image_from_array(a));
            std::vector<py::array_t<double>> out;
            for (const ImageRGB& img : stylize_group(w, cfg, imgs, image_from_array(style)))
                out.push_back(image_to_array(img));
            return out;
        },
        py::arg("content_images"), py::arg("style_image"), py::arg("ddim_steps") = 20,
        py::arg("content_scale") = 1.0, py::arg("style_scale") = 0.6, py::arg("control_scale") = 1.0,
        py::arg("seed") = 7, py::arg("nv_sharing") = true);

    m.def(
        "nnfm_loss",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& f_render,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& f_style) {
            const NnfmResult res = nnfm_loss(features_from_array(f_render), features_from_array(f_style));
            py::array_t<double> grad({res.grad.h, res.grad.w, res.grad.channels});
            std::memcpy(grad.mutable_data(), res.grad.data.data(), res.grad.data.size() * sizeof(double));
            return py::make_tuple(res.loss, grad, res.zero_vector_warnings);
        },
        py::arg("f_render"), py::arg("f_style"));

    m.def(
        "l1_rgb_loss",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& render,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& target) {
            const L1Result res = l1_rgb_loss(image_from_array(render), image_from_array(target));
            return py::make_tuple(res.loss, image_to_array(res.grad));
        },
        py::arg("render"), py::arg("target"));

    m.def(
        "extract_features",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& img, std::uint64_t seed) {
            const FeatureMap f = FeatureExtractor::seeded(seed).extract(image_from_array(img));
            py::array_t<double> arr({f.h, f.w, f.channels});
            std::memcpy(arr.mutable_data(), f.data.data(), f.data.size() * sizeof(double));
            return arr;
        },
        py::arg("image"), py::arg("seed") = 7);

    m.def(
        "cfsd",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& content,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& stylized,
           std::uint64_t seed) {
            return cfsd(image_from_array(content), image_from_array(stylized),
                        FeatureExtractor::seeded(seed));
        },
        py::arg("content"), py::arg("stylized"), py::arg("seed") = 7);

    m.def(
        "csd_score",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            return csd_score({a, "imported"}, {b, "imported"});
        },
        py::arg("style_descriptor"), py::arg("stylized_descriptor"));

    m.def(
        "clip_dc",
        [](const std::vector<std::vector<double>>& orig, const std::vector<std::vector<double>>& styl) {
            std::vector<Descriptor> o, s;
            for (const auto& v : orig) o.push_back({v, "imported"});
            for (const auto& v : styl) s.push_back({v, "imported"});
            const ClipDcResult res = clip_dc(o, s);
            return py::make_tuple(res.score, res.degenerate_pairs);
        },
        py::arg("original_embeddings"), py::arg("stylized_embeddings"));

    m.def("load_ply", [](const std::string& path) { return load_ply(path); }, py::arg("path"));
    m.def(
        "save_ply",
        [](const GaussianScene& scene, const std::string& path) { save_ply(scene, path); },
        py::arg("scene"), py::arg("path"));

    m.def(
        "fixture_scene",
        [](int gaussians, std::uint64_t seed) {
            FixtureSpec spec;
            spec.gaussians = gaussians;
            spec.seed = seed;
            return fixture_scene(spec);
        },
        py::arg("gaussians") = 100, py::arg("seed") = 7);
    m.def(
        "fixture_cameras",
        [](int cameras, int resolution, std::uint64_t seed) {
            FixtureSpec spec;
            spec.cameras = cameras;
            spec.resolution = resolution;
            spec.seed = seed;
            return fixture_cameras(spec);
        },
        py::arg("cameras") = 8, py::arg("resolution") = 64, py::arg("seed") = 7);
}
