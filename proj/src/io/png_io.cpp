// SPDX-License-Identifier: Apache-2.0
#include "splatstyle/io/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <vector>

#include "splatstyle/error.hpp"

namespace splatstyle {

double srgb_to_linear(double u) {
    return u <= 0.04045 ? u / 12.92 : std::pow((u + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) {
    return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

namespace {

struct FileCloser {
    std::FILE* f = nullptr;
    ~FileCloser() {
        if (f) std::fclose(f);
    }
};

} // namespace

ImageRGB read_png(const std::filesystem::path& path) {
    FileCloser fc;
    fc.f = std::fopen(path.string().c_str(), "rb");
    if (!fc.f) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::IoFailure, "libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::MalformedFile, "png decode failed: " + path.string());
    }
    png_init_io(png, fc.f);
    png_read_info(png, info);

    // normalize everything to 8-bit RGB
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    std::vector<unsigned char> data(static_cast<std::size_t>(width) * height * 3);
    std::vector<png_bytep> rows(height);
    for (int r = 0; r < height; ++r) rows[r] = data.data() + static_cast<std::size_t>(r) * width * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    ImageRGB img(width, height);
    for (std::size_t i = 0; i < img.px.size(); ++i) img.px[i] = srgb_to_linear(data[i] / 255.0);
    return img;
}

void write_png(const std::filesystem::path& path, const ImageRGB& img) {
    std::filesystem::path tmp = path;
    tmp += ".tmpw";
    {
        FileCloser fc;
        fc.f = std::fopen(tmp.string().c_str(), "wb");
        if (!fc.f) throw Error(ErrorCode::IoFailure, "cannot open " + tmp.string());

        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        png_infop info = png ? png_create_info_struct(png) : nullptr;
        if (!png || !info) {
            png_destroy_write_struct(&png, &info);
            throw Error(ErrorCode::IoFailure, "libpng init failed");
        }
        if (setjmp(png_jmpbuf(png))) {
            png_destroy_write_struct(&png, &info);
            throw Error(ErrorCode::IoFailure, "png encode failed: " + path.string());
        }
        png_init_io(png, fc.f);
        png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);

        std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * 3);
        for (int r = 0; r < img.height; ++r) {
            for (int c = 0; c < img.width; ++c)
                for (int ch = 0; ch < 3; ++ch) {
                    double v = img.at(r, c, ch);
                    v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
                    row[static_cast<std::size_t>(c) * 3 + ch] =
                        static_cast<unsigned char>(std::lround(255.0 * linear_to_srgb(v)));
                }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::IoFailure, "cannot rename into " + path.string());
    }
}

} // namespace splatstyle
