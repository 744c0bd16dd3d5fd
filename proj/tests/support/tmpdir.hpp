// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

namespace xmr::test {

/// Fresh per-test scratch directory under $XMR_TEST_TMP (or the system temp).
inline std::filesystem::path scratch_dir(const std::string& name) {
    const char* root = std::getenv("XMR_TEST_TMP");
    std::filesystem::path dir = root ? std::filesystem::path(root) : std::filesystem::temp_directory_path() / "xmr_tests";
    dir /= name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace xmr::test
