// SPDX-License-Identifier: Apache-2.0
#include "splatstyle/io/colmap_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "splatstyle/error.hpp"
#include "splatstyle/io/atomic_file.hpp"

namespace splatstyle {

namespace {

struct Intrinsics {
    double fx, fy, cx, cy;
    int width, height;
};

[[noreturn]] void malformed(const std::filesystem::path& file, int line_no, const std::string& what) {
    throw Error(ErrorCode::MalformedFile,
                file.string() + ":" + std::to_string(line_no) + ": " + what);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

Quat quat_from_rotation(const Mat3& r) {
    Quat q;
    const double tr = r(0, 0) + r(1, 1) + r(2, 2);
    if (tr > 0.0) {
        const double s = std::sqrt(tr + 1.0) * 2.0;
        q.w = 0.25 * s;
        q.x = (r(2, 1) - r(1, 2)) / s;
        q.y = (r(0, 2) - r(2, 0)) / s;
        q.z = (r(1, 0) - r(0, 1)) / s;
    } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
        const double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
        q.w = (r(2, 1) - r(1, 2)) / s;
        q.x = 0.25 * s;
        q.y = (r(0, 1) + r(1, 0)) / s;
        q.z = (r(0, 2) + r(2, 0)) / s;
    } else if (r(1, 1) > r(2, 2)) {
        const double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
        q.w = (r(0, 2) - r(2, 0)) / s;
        q.x = (r(0, 1) + r(1, 0)) / s;
        q.y = 0.25 * s;
        q.z = (r(1, 2) + r(2, 1)) / s;
    } else {
        const double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
        q.w = (r(1, 0) - r(0, 1)) / s;
        q.x = (r(0, 2) + r(2, 0)) / s;
        q.y = (r(1, 2) + r(2, 1)) / s;
        q.z = 0.25 * s;
    }
    return q;
}

ColmapModel load_colmap(const std::filesystem::path& dir) {
    const auto cameras_path = dir / "cameras.txt";
    const auto images_path = dir / "images.txt";

    std::map<long, Intrinsics> intrinsics;
    {
        std::ifstream in(cameras_path);
        if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + cameras_path.string());
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ss(line);
            long cam_id = 0;
            std::string model;
            int width = 0, height = 0;
            if (!(ss >> cam_id >> model >> width >> height))
                malformed(cameras_path, line_no, "expected CAMERA_ID MODEL WIDTH HEIGHT");
            Intrinsics k{};
            k.width = width;
            k.height = height;
            if (model == "SIMPLE_PINHOLE") {
                double f, cx, cy;
                if (!(ss >> f >> cx >> cy)) malformed(cameras_path, line_no, "SIMPLE_PINHOLE needs f cx cy");
                k.fx = k.fy = f;
                k.cx = cx;
                k.cy = cy;
            } else if (model == "PINHOLE") {
                if (!(ss >> k.fx >> k.fy >> k.cx >> k.cy))
                    malformed(cameras_path, line_no, "PINHOLE needs fx fy cx cy");
            } else {
                throw Error(ErrorCode::UnsupportedCameraModel, model + " at " + cameras_path.string() +
                                                                   ":" + std::to_string(line_no));
            }
            if (k.fx <= 0.0 || k.fy <= 0.0) malformed(cameras_path, line_no, "focal length must be positive");
            if (k.width < 1 || k.height < 1) malformed(cameras_path, line_no, "resolution must be >= 1x1");
            intrinsics[cam_id] = k;
        }
    }

    struct Record {
        long image_id;
        Camera camera;
        std::string name;
    };
    std::vector<Record> records;
    {
        std::ifstream in(images_path);
        if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + images_path.string());
        std::string line;
        int line_no = 0;
        bool expecting_points = false;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line[0] == '#') continue;
            if (expecting_points) { // POINTS2D line, may be empty but counts
                expecting_points = false;
                continue;
            }
            if (line.empty()) continue;
            std::istringstream ss(line);
            long image_id = 0, cam_id = 0;
            double qw, qx, qy, qz, tx, ty, tz;
            std::string name;
            if (!(ss >> image_id >> qw >> qx >> qy >> qz >> tx >> ty >> tz >> cam_id >> name))
                malformed(images_path, line_no, "expected IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME");
            const auto it = intrinsics.find(cam_id);
            if (it == intrinsics.end())
                malformed(images_path, line_no, "image references unknown camera id " + std::to_string(cam_id));

            Camera cam;
            const Quat q = Quat{qw, qx, qy, qz}.normalized();
            cam.rotation = rotation_from_unit_quat(q);
            cam.translation = {tx, ty, tz};
            cam.fx = it->second.fx;
            cam.fy = it->second.fy;
            cam.cx = it->second.cx;
            cam.cy = it->second.cy;
            cam.width = it->second.width;
            cam.height = it->second.height;
            records.push_back({image_id, cam, name});
            expecting_points = true;
        }
    }
    std::sort(records.begin(), records.end(),
              [](const Record& a, const Record& b) { return a.image_id < b.image_id; });

    ColmapModel model;
    for (auto& r : records) {
        model.cameras.push_back(r.camera);
        model.image_names.push_back(std::move(r.name));
    }
    return model;
}

void save_colmap(const std::filesystem::path& dir, const std::vector<Camera>& cameras,
                 const std::vector<std::string>& image_names) {
    if (cameras.size() != image_names.size())
        throw Error(ErrorCode::LengthMismatch, "cameras/image_names size mismatch");
    std::filesystem::create_directories(dir);

    atomic_write_file(dir / "cameras.txt", [&](std::ostream& out) {
        out << "# Camera list with one line of data per camera:\n"
            << "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n";
        for (std::size_t i = 0; i < cameras.size(); ++i) {
            const Camera& c = cameras[i];
            out << (i + 1) << " PINHOLE " << c.width << " " << c.height << " " << fmt(c.fx) << " "
                << fmt(c.fy) << " " << fmt(c.cx) << " " << fmt(c.cy) << "\n";
        }
    });

    atomic_write_file(dir / "images.txt", [&](std::ostream& out) {
        out << "# Image list with two lines of data per image:\n"
            << "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n"
            << "#   POINTS2D[] as (X, Y, POINT3D_ID)\n";
        for (std::size_t i = 0; i < cameras.size(); ++i) {
            const Camera& c = cameras[i];
            const Quat q = quat_from_rotation(c.rotation);
            out << (i + 1) << " " << fmt(q.w) << " " << fmt(q.x) << " " << fmt(q.y) << " " << fmt(q.z)
                << " " << fmt(c.translation.x) << " " << fmt(c.translation.y) << " "
                << fmt(c.translation.z) << " " << (i + 1) << " " << image_names[i] << "\n";
            out << "\n"; // no 2D points
        }
    });
}

} // namespace splatstyle
