// SPDX-License-Identifier: Apache-2.0
#include "splatstyle/io/atomic_file.hpp"

#include <atomic>
#include <fstream>

#include "splatstyle/error.hpp"

namespace splatstyle {

void atomic_write_file(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer) {
    static std::atomic<unsigned> counter{0};
    const unsigned id = counter.fetch_add(1);
    std::filesystem::path tmp = path;
    tmp += ".tmp" + std::to_string(id);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + tmp.string() + " for writing");
        try {
            writer(out);
            out.flush();
            if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + tmp.string());
        } catch (...) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw;
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::IoFailure, "cannot rename into " + path.string());
    }
}

} // namespace splatstyle
