#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cslsm/errors.hpp"

namespace cslsm {

/// One 2D image plane, row-major, double precision. This is the solver's
/// working currency: v_n, u_n, d_n, measurement shots and denoiser inputs
/// are all slices.
struct Slice {
    int nx = 0;
    int ny = 0;
    std::vector<double> values; // ny rows of nx, row-major

    Slice() = default;
    Slice(int nx_, int ny_, double fill = 0.0)
        : nx(nx_), ny(ny_), values(static_cast<std::size_t>(nx_) * ny_, fill) {}

    std::size_t pixel_count() const { return static_cast<std::size_t>(nx) * ny; }
    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * nx + x]; }
    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * nx + x]; }
};

/// 3D stack of slices, slice-major (z outer), row-major within a slice.
/// Voxels are stored as binary32, matching the on-disk format bit for bit;
/// all computation widens to double.
struct Volume {
    int nx = 0;
    int ny = 0;
    int nz = 0;
    std::vector<float> voxels;

    Volume() = default;
    Volume(int nx_, int ny_, int nz_, float fill = 0.0f)
        : nx(nx_), ny(ny_), nz(nz_),
          voxels(static_cast<std::size_t>(nx_) * ny_ * nz_, fill) {}

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(nx) * ny * nz;
    }
    std::size_t pixels_per_slice() const { return static_cast<std::size_t>(nx) * ny; }

    std::span<const float> slice(int z) const {
        return {voxels.data() + static_cast<std::size_t>(z) * pixels_per_slice(),
                pixels_per_slice()};
    }
    std::span<float> slice(int z) {
        return {voxels.data() + static_cast<std::size_t>(z) * pixels_per_slice(),
                pixels_per_slice()};
    }

    /// Copy of slice z (0-based) widened to double.
    Slice slice_as_double(int z) const {
        Slice s(nx, ny);
        auto src = slice(z);
        for (std::size_t i = 0; i < src.size(); ++i) s.values[i] = src[i];
        return s;
    }
};

/// R binary masks phi_r shared by every shot; entries are 0 or 1, one byte
/// per element. `seed` records the generator key so files are reproducible.
struct MaskSet {
    int count = 0; // R
    int nx = 0;
    int ny = 0;
    std::uint64_t seed = 0;
    std::vector<std::uint8_t> bits; // count * nx * ny

    std::size_t pixels_per_mask() const { return static_cast<std::size_t>(nx) * ny; }

    std::span<const std::uint8_t> mask(int r) const {
        return {bits.data() + static_cast<std::size_t>(r) * pixels_per_mask(),
                pixels_per_mask()};
    }
};

/// N compressed shots b_j plus the acquisition metadata needed to reproduce
/// them. Shot data is binary32 like Volume.
struct MeasurementSet {
    int shots = 0; // N
    int nx = 0;
    int ny = 0;
    int compression_ratio = 1; // R
    double noise_variance = 0.0;
    std::uint64_t noise_seed = 0;
    std::uint64_t mask_seed = 0;
    std::vector<float> data; // shots * nx * ny

    std::size_t pixels_per_shot() const { return static_cast<std::size_t>(nx) * ny; }

    std::span<const float> shot(int j) const {
        return {data.data() + static_cast<std::size_t>(j) * pixels_per_shot(),
                pixels_per_shot()};
    }

    Slice shot_as_double(int j) const {
        Slice s(nx, ny);
        auto src = shot(j);
        for (std::size_t i = 0; i < src.size(); ++i) s.values[i] = src[i];
        return s;
    }
};

/// Paper indexing: global slice n in 1..NR belongs to shot j = ceil(n/R)
/// with within-shot offset r = n - (j-1)R, both 1-based.
constexpr std::pair<int, int> shot_and_offset(int n, int R) {
    const int j = (n - 1) / R + 1;
    const int r = n - (j - 1) * R;
    return {j, r};
}

/// Inverse of shot_and_offset: n = (j-1)R + r.
constexpr int global_slice_index(int j, int r, int R) { return (j - 1) * R + r; }

} // namespace cslsm
