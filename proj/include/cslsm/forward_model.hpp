#pragma once

#include <cstdint>

#include "cslsm/volume.hpp"

// Coded acquisition: each shot j sums R mask-modulated slices,
// b_j = sum_r phi_r .* v_{(j-1)R+r}. Masks are Bernoulli(density) bits from
// the splitmix64 counter generator keyed by (seed, r, pixel); noise draws are
// keyed by (seed, j, pixel), so encoding is reproducible and order-free.

namespace cslsm {

struct EncodeConfig {
    int compression_ratio = 4; // R, slices per shot
    double mask_density = 0.5; // P(mask element = 1)
    std::uint64_t mask_seed = 0;
    double noise_variance = 0.0; // Gaussian variance on the normalized scale
    std::uint64_t noise_seed = 0;

    void validate() const;
};

MaskSet generate_masks(int nx, int ny, int count, double density, std::uint64_t seed);

/// Requires v.nz divisible by cfg.compression_ratio; N = nz / R shots.
/// With noise: b_j = R * (c_j / R + eta), eta ~ N(0, noise_variance) i.i.d.,
/// so clean and noisy measurements share one scale.
MeasurementSet encode(const Volume& v, const EncodeConfig& cfg);

/// Adjoint of one shot: applies each mask to b and stacks the R results.
std::vector<Slice> adjoint_shot(const Slice& b, const MaskSet& masks);

} // namespace cslsm
