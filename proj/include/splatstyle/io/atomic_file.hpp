// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <ostream>

namespace splatstyle {

// Writes through a temp file in the same directory and renames into place, so
// interrupted writers never leave a truncated artifact at the target path.
// The temp file is removed if the writer throws.
void atomic_write_file(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer);

} // namespace splatstyle
