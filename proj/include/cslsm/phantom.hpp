#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cslsm/volume.hpp"

// Synthetic zebrafish-heart-like ground truth: two ellipsoidal shell
// chambers (atrium, ventricle) at low intensity with bright nuclei rendered
// as Gaussian blobs adjacent to the chamber surfaces.

namespace cslsm {

struct EllipsoidShell {
    double cx = 0, cy = 0, cz = 0; // center, voxel coordinates
    double ax = 1, ay = 1, az = 1; // semi-axes, voxels
    double shell = 1.0;            // total shell thickness, voxels
};

struct PhantomSpec {
    int nx = 64, ny = 64, nz = 40;
    int nuclei_count = 60;
    double nucleus_radius = 2.0;       // mean blob radius; blob sigma = radius/2
    double nucleus_radius_spread = 0.5; // radius drawn uniformly in mean +- spread
    EllipsoidShell atrium;
    EllipsoidShell ventricle;
    double background_level = 0.02;
    double chamber_intensity = 0.1; // 0.1 * nucleus peak
    std::uint64_t seed = 0;

    /// Desk-scale defaults: chambers placed proportionally to the volume.
    /// Paper scale is defaults(200, 200, 150, 300, seed).
    static PhantomSpec defaults(int nx, int ny, int nz, int nuclei, std::uint64_t seed);

    void validate() const;
};

struct PhantomResult {
    Volume volume;
    std::vector<std::array<double, 3>> nucleus_centers; // x y z, voxel coords
};

/// Deterministic in `spec` (including seed); all voxels in [0, 1].
PhantomResult generate_phantom(const PhantomSpec& spec);

/// Writes one `x y z` line per nucleus center.
void write_centers(const std::vector<std::array<double, 3>>& centers,
                   const std::string& path);

/// The `count` slices at 1-based indices round(linspace(1, nz, count)).
Volume select_frames(const Volume& v, int count);

} // namespace cslsm
