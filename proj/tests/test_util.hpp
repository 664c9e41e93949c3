#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "cslsm/rng.hpp"
#include "cslsm/volume.hpp"

namespace testutil {

/// Unique temp file path removed on destruction.
class TempFile {
public:
    explicit TempFile(const std::string& suffix) {
        static int counter = 0;
        path_ = (std::filesystem::temp_directory_path() /
                 ("cslsm_test_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++) + suffix))
                    .string();
    }
    ~TempFile() {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Unique temp directory removed recursively on destruction.
class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = (std::filesystem::temp_directory_path() /
                 ("cslsm_dir_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++)))
                    .string();
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

inline cslsm::Volume random_volume(int nx, int ny, int nz, std::uint64_t seed) {
    cslsm::Volume v(nx, ny, nz);
    for (std::size_t i = 0; i < v.voxels.size(); ++i)
        v.voxels[i] = static_cast<float>(cslsm::rng::uniform01(seed, 0, i));
    return v;
}

inline cslsm::Slice random_slice(int nx, int ny, std::uint64_t seed) {
    cslsm::Slice s(nx, ny);
    for (std::size_t i = 0; i < s.values.size(); ++i)
        s.values[i] = cslsm::rng::uniform01(seed, 1, i);
    return s;
}

inline std::string read_file(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) return {};
    std::string data;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) data.append(buf, n);
    std::fclose(f);
    return data;
}

} // namespace testutil
