#include "cslsm/forward_model.hpp"

#include <cmath>

#include "cslsm/rng.hpp"
#include "cslsm/threads.hpp"

namespace cslsm {

void EncodeConfig::validate() const {
    if (compression_ratio < 1) throw config_error("compression ratio must be >= 1");
    if (!(mask_density > 0.0 && mask_density < 1.0))
        throw config_error("mask density must lie in (0, 1)");
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
        throw config_error("noise variance must be finite and >= 0");
}

MaskSet generate_masks(int nx, int ny, int count, double density, std::uint64_t seed) {
    if (nx < 1 || ny < 1) throw config_error("mask dimensions must be positive");
    if (count < 1) throw config_error("mask count must be >= 1");
    if (!(density > 0.0 && density < 1.0))
        throw config_error("mask density must lie in (0, 1)");
    MaskSet m;
    m.count = count;
    m.nx = nx;
    m.ny = ny;
    m.seed = seed;
    const std::size_t pixels = m.pixels_per_mask();
    m.bits.resize(static_cast<std::size_t>(count) * pixels);
    for (int r = 0; r < count; ++r) {
        std::uint8_t* dst = m.bits.data() + static_cast<std::size_t>(r) * pixels;
        for (std::size_t p = 0; p < pixels; ++p)
            dst[p] = rng::uniform01(seed, static_cast<std::uint64_t>(r), p) < density;
    }
    return m;
}

MeasurementSet encode(const Volume& v, const EncodeConfig& cfg) {
    cfg.validate();
    const int R = cfg.compression_ratio;
    if (v.nz % R != 0)
        throw config_error("volume depth " + std::to_string(v.nz) +
                           " is not divisible by compression ratio " + std::to_string(R));
    const MaskSet masks = generate_masks(v.nx, v.ny, R, cfg.mask_density, cfg.mask_seed);

    MeasurementSet ms;
    ms.shots = v.nz / R;
    ms.nx = v.nx;
    ms.ny = v.ny;
    ms.compression_ratio = R;
    ms.noise_variance = cfg.noise_variance;
    ms.noise_seed = cfg.noise_seed;
    ms.mask_seed = cfg.mask_seed;
    const std::size_t pixels = ms.pixels_per_shot();
    ms.data.resize(static_cast<std::size_t>(ms.shots) * pixels);

    const double noise_sigma = std::sqrt(cfg.noise_variance);
    threads::parallel_for(ms.shots, [&](std::int64_t j) {
        float* out = ms.data.data() + static_cast<std::size_t>(j) * pixels;
        for (std::size_t p = 0; p < pixels; ++p) {
            double c = 0.0;
            for (int r = 0; r < R; ++r) {
                const std::size_t n = (static_cast<std::size_t>(j) * R + r) * pixels + p;
                c += masks.bits[static_cast<std::size_t>(r) * pixels + p] *
                     static_cast<double>(v.voxels[n]);
            }
            if (noise_sigma > 0.0) {
                // b = R * (c/R + eta): noise is added on the normalized scale
                // and rescaled back by the compression ratio.
                c += R * noise_sigma *
                     rng::gaussian(cfg.noise_seed, static_cast<std::uint64_t>(j), p);
            }
            out[p] = static_cast<float>(c);
        }
    });
    return ms;
}

std::vector<Slice> adjoint_shot(const Slice& b, const MaskSet& masks) {
    if (b.nx != masks.nx || b.ny != masks.ny)
        throw config_error("adjoint_shot: shot and mask dimensions differ");
    const std::size_t pixels = masks.pixels_per_mask();
    std::vector<Slice> out(static_cast<std::size_t>(masks.count), Slice(b.nx, b.ny));
    for (int r = 0; r < masks.count; ++r) {
        auto m = masks.mask(r);
        for (std::size_t p = 0; p < pixels; ++p)
            out[static_cast<std::size_t>(r)].values[p] = m[p] * b.values[p];
    }
    return out;
}

} // namespace cslsm
