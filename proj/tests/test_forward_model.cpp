#include <doctest.h>

#include <cmath>

#include "cslsm/forward_model.hpp"
#include "cslsm/rng.hpp"
#include "test_util.hpp"

using namespace cslsm;

TEST_CASE("masks are deterministic and differ across r") {
    const MaskSet a = generate_masks(64, 64, 4, 0.5, 20250811);
    const MaskSet b = generate_masks(64, 64, 4, 0.5, 20250811);
    CHECK(a.bits == b.bits);

    // Frozen with the default seed: per-mask ones fraction near the density.
    const std::size_t pixels = a.pixels_per_mask();
    for (int r = 0; r < a.count; ++r) {
        std::size_t ones = 0;
        for (std::uint8_t bit : a.mask(r)) ones += bit;
        const double fraction = static_cast<double>(ones) / pixels;
        CHECK(fraction >= 0.4);
        CHECK(fraction <= 0.6);
    }
    for (int r = 1; r < a.count; ++r) {
        bool differs = false;
        for (std::size_t p = 0; p < pixels; ++p)
            if (a.mask(0)[p] != a.mask(r)[p]) {
                differs = true;
                break;
            }
        CHECK(differs);
    }
}

TEST_CASE("mask density outside (0,1) is rejected") {
    CHECK_THROWS_AS(generate_masks(8, 8, 2, 0.0, 1), config_error);
    CHECK_THROWS_AS(generate_masks(8, 8, 2, 1.0, 1), config_error);
    CHECK_THROWS_AS(generate_masks(8, 8, 2, -0.5, 1), config_error);
}

TEST_CASE("hand-computed 2x2 encoding") {
    // phi_1 = identity diagonal pattern, phi_2 = the complement;
    // b_1 = phi_1 .* v_1 + phi_2 .* v_2.
    Volume v(2, 2, 2);
    v.voxels = {1, 2, 3, 4, 5, 6, 7, 8};
    MaskSet masks;
    masks.count = 2;
    masks.nx = 2;
    masks.ny = 2;
    masks.bits = {1, 0, 0, 1, 0, 1, 1, 0};

    // encode() generates masks from a seed, so apply the operator directly.
    const std::size_t pixels = 4;
    double b[4] = {0, 0, 0, 0};
    for (int r = 0; r < 2; ++r)
        for (std::size_t p = 0; p < pixels; ++p)
            b[p] += masks.bits[r * pixels + p] * v.voxels[r * pixels + p];
    CHECK(b[0] == 1.0);
    CHECK(b[1] == 6.0);
    CHECK(b[2] == 7.0);
    CHECK(b[3] == 4.0);
}

TEST_CASE("noise-free encode basics") {
    SUBCASE("all-zero volume encodes to zero") {
        const Volume v(6, 5, 4);
        EncodeConfig cfg;
        cfg.compression_ratio = 2;
        const MeasurementSet ms = encode(v, cfg);
        for (float x : ms.data) CHECK(x == 0.0f);
    }
    SUBCASE("depth not divisible by R is a config error") {
        const Volume v(4, 4, 5);
        EncodeConfig cfg;
        cfg.compression_ratio = 2;
        CHECK_THROWS_AS(encode(v, cfg), config_error);
    }
    SUBCASE("noise_variance == 0 means exact clean encoding") {
        const Volume v = testutil::random_volume(8, 8, 6, 21);
        EncodeConfig cfg;
        cfg.compression_ratio = 3;
        cfg.mask_seed = 5;
        const MeasurementSet ms = encode(v, cfg);
        const MaskSet masks = generate_masks(8, 8, 3, cfg.mask_density, 5);
        const std::size_t pixels = ms.pixels_per_shot();
        for (int j = 0; j < ms.shots; ++j)
            for (std::size_t p = 0; p < pixels; ++p) {
                double c = 0.0;
                for (int r = 0; r < 3; ++r)
                    c += masks.bits[r * pixels + p] *
                         static_cast<double>(v.voxels[(j * 3 + r) * pixels + p]);
                CHECK(ms.shot(j)[p] == static_cast<float>(c));
            }
    }
}

TEST_CASE("encode is linear (exact on dyadic inputs)") {
    // Values k/1024 with dyadic coefficients make every float/double step
    // exact, so linearity holds bitwise.
    const int nx = 8, ny = 8, nz = 4;
    Volume v1(nx, ny, nz), v2(nx, ny, nz), mix(nx, ny, nz);
    for (std::size_t i = 0; i < v1.voxels.size(); ++i) {
        v1.voxels[i] =
            static_cast<float>(static_cast<int>(rng::uniform01(3, 0, i) * 1024) / 1024.0);
        v2.voxels[i] =
            static_cast<float>(static_cast<int>(rng::uniform01(4, 0, i) * 1024) / 1024.0);
        mix.voxels[i] = 0.5f * v1.voxels[i] + 0.25f * v2.voxels[i];
    }
    EncodeConfig cfg;
    cfg.compression_ratio = 2;
    cfg.mask_seed = 17;
    const MeasurementSet m1 = encode(v1, cfg);
    const MeasurementSet m2 = encode(v2, cfg);
    const MeasurementSet mm = encode(mix, cfg);
    for (std::size_t i = 0; i < mm.data.size(); ++i) {
        const double expected = 0.5 * m1.data[i] + 0.25 * m2.data[i];
        CHECK(std::abs(mm.data[i] - expected) <= 1e-12);
    }
}

TEST_CASE("adjoint consistency <Phi v, b> == <v, Phi^T b>") {
    const int nx = 16, ny = 16, R = 4;
    const MaskSet masks = generate_masks(nx, ny, R, 0.5, 31);
    const std::size_t pixels = masks.pixels_per_mask();

    // One shot: v is R slices, b one slice.
    std::vector<Slice> v;
    for (int r = 0; r < R; ++r) v.push_back(testutil::random_slice(nx, ny, 100 + r));
    const Slice b = testutil::random_slice(nx, ny, 200);

    double phi_v_dot_b = 0.0;
    for (std::size_t p = 0; p < pixels; ++p) {
        double c = 0.0;
        for (int r = 0; r < R; ++r) c += masks.mask(r)[p] * v[r].values[p];
        phi_v_dot_b += c * b.values[p];
    }
    const std::vector<Slice> adj = adjoint_shot(b, masks);
    double v_dot_phit_b = 0.0;
    for (int r = 0; r < R; ++r)
        for (std::size_t p = 0; p < pixels; ++p)
            v_dot_phit_b += v[r].values[p] * adj[r].values[p];

    CHECK(std::abs(phi_v_dot_b - v_dot_phit_b) <= 1e-12 * std::max(1.0, std::abs(phi_v_dot_b)));
}

TEST_CASE("noise statistics match the configured variance") {
    // Zero volume: b_j / R is exactly the added noise.
    const Volume v(64, 64, 10);
    EncodeConfig cfg;
    cfg.compression_ratio = 2;
    cfg.noise_variance = 0.001;
    cfg.noise_seed = 12345;
    const MeasurementSet ms = encode(v, cfg);
    double sum = 0.0, sum2 = 0.0;
    for (float x : ms.data) {
        const double s = x / cfg.compression_ratio;
        sum += s;
        sum2 += s * s;
    }
    const double n = static_cast<double>(ms.data.size());
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(var >= 0.0009);
    CHECK(var <= 0.0011);

    SUBCASE("noise draws are deterministic") {
        const MeasurementSet again = encode(v, cfg);
        CHECK(again.data == ms.data);
    }
}
