// SPDX-License-Identifier: Apache-2.0
#include "splatstyle/io/ply_io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "splatstyle/error.hpp"
#include "splatstyle/io/atomic_file.hpp"

namespace splatstyle {

namespace {

constexpr std::array<const char*, 14> kProperties = {
    "x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
    "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"};

} // namespace

GaussianScene load_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());

    auto next_line = [&](std::string& line) {
        if (!std::getline(in, line)) throw Error(ErrorCode::MalformedHeader, "unexpected end of header");
        if (!line.empty() && line.back() == '\r') line.pop_back();
    };

    std::string line;
    next_line(line);
    if (line != "ply") throw Error(ErrorCode::MalformedHeader, "missing ply keyword");
    next_line(line);
    if (line != "format binary_little_endian 1.0")
        throw Error(ErrorCode::MalformedHeader, "expected binary_little_endian 1.0");

    next_line(line);
    while (line.rfind("comment", 0) == 0) next_line(line);
    const std::string prefix = "element vertex ";
    if (line.rfind(prefix, 0) != 0) throw Error(ErrorCode::MalformedHeader, "missing element vertex");
    long count = 0;
    try {
        count = std::stol(line.substr(prefix.size()));
    } catch (...) {
        throw Error(ErrorCode::MalformedHeader, "bad vertex count");
    }
    if (count < 0) throw Error(ErrorCode::MalformedHeader, "negative vertex count");

    for (const char* prop : kProperties) {
        next_line(line);
        if (line != std::string("property float ") + prop)
            throw Error(ErrorCode::MalformedHeader, std::string("expected property float ") + prop);
    }
    next_line(line);
    if (line != "end_header") throw Error(ErrorCode::MalformedHeader, "missing end_header");

    GaussianScene scene;
    scene.gaussians.resize(static_cast<std::size_t>(count));
    std::vector<float> buf(static_cast<std::size_t>(count) * kProperties.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
        throw Error(ErrorCode::TruncatedBody, "vertex data truncated in " + path.string());

    for (long i = 0; i < count; ++i) {
        const float* v = buf.data() + static_cast<std::size_t>(i) * kProperties.size();
        Gaussian3D& g = scene.gaussians[static_cast<std::size_t>(i)];
        g.position = {v[0], v[1], v[2]};
        g.color = {kSh0Scale * v[3] + 0.5, kSh0Scale * v[4] + 0.5, kSh0Scale * v[5] + 0.5};
        g.opacity_logit = v[6];
        g.log_scale = {v[7], v[8], v[9]};
        g.rotation = {v[10], v[11], v[12], v[13]};
    }
    return scene;
}

void save_ply(const GaussianScene& scene, const std::filesystem::path& path) {
    atomic_write_file(path, [&](std::ostream& out) {
        out << "ply\nformat binary_little_endian 1.0\nelement vertex " << scene.size() << "\n";
        for (const char* prop : kProperties) out << "property float " << prop << "\n";
        out << "end_header\n";

        std::vector<float> buf(scene.size() * kProperties.size());
        for (std::size_t i = 0; i < scene.size(); ++i) {
            const Gaussian3D& g = scene.gaussians[i];
            float* v = buf.data() + i * kProperties.size();
            v[0] = static_cast<float>(g.position.x);
            v[1] = static_cast<float>(g.position.y);
            v[2] = static_cast<float>(g.position.z);
            v[3] = static_cast<float>((g.color.x - 0.5) / kSh0Scale);
            v[4] = static_cast<float>((g.color.y - 0.5) / kSh0Scale);
            v[5] = static_cast<float>((g.color.z - 0.5) / kSh0Scale);
            v[6] = static_cast<float>(g.opacity_logit);
            v[7] = static_cast<float>(g.log_scale.x);
            v[8] = static_cast<float>(g.log_scale.y);
            v[9] = static_cast<float>(g.log_scale.z);
            v[10] = static_cast<float>(g.rotation.w);
            v[11] = static_cast<float>(g.rotation.x);
            v[12] = static_cast<float>(g.rotation.y);
            v[13] = static_cast<float>(g.rotation.z);
        }
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    });
}

} // namespace splatstyle
