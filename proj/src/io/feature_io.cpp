// SPDX-License-Identifier: Apache-2.0
#include "splatstyle/io/feature_io.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "splatstyle/error.hpp"
#include "splatstyle/io/atomic_file.hpp"

namespace splatstyle {

namespace {

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw Error(ErrorCode::MalformedHeader, "feature file header truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                                static_cast<unsigned char>((v >> 8) & 0xff),
                                static_cast<unsigned char>((v >> 16) & 0xff),
                                static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace

FeatureMap load_feature_map(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    if (read_u32(in) != kFeatureMagic)
        throw Error(ErrorCode::MalformedHeader, "bad feature file magic in " + path.string());
    const std::uint32_t h = read_u32(in);
    const std::uint32_t w = read_u32(in);
    const std::uint32_t c = read_u32(in);
    if (h == 0 || w == 0 || c == 0)
        throw Error(ErrorCode::MalformedHeader, "zero dimension in " + path.string());

    FeatureMap fm(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c), "imported");
    std::vector<float> buf(fm.data.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
        throw Error(ErrorCode::TruncatedBody, "feature file body truncated: " + path.string());
    for (std::size_t i = 0; i < buf.size(); ++i) fm.data[i] = buf[i];
    return fm;
}

void save_feature_map(const std::filesystem::path& path, const FeatureMap& fm) {
    atomic_write_file(path, [&](std::ostream& out) {
        write_u32(out, kFeatureMagic);
        write_u32(out, static_cast<std::uint32_t>(fm.h));
        write_u32(out, static_cast<std::uint32_t>(fm.w));
        write_u32(out, static_cast<std::uint32_t>(fm.channels));
        std::vector<float> buf(fm.data.size());
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(fm.data[i]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    });
}

} // namespace splatstyle
