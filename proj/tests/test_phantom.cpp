#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cslsm/phantom.hpp"
#include "test_util.hpp"

using namespace cslsm;

namespace {

double shell_distance(const EllipsoidShell& e, double x, double y, double z) {
    const double ux = (x - e.cx) / e.ax;
    const double uy = (y - e.cy) / e.ay;
    const double uz = (z - e.cz) / e.az;
    const double rho = std::sqrt(ux * ux + uy * uy + uz * uz);
    const double gx = ux / e.ax, gy = uy / e.ay, gz = uz / e.az;
    const double grad = std::sqrt(gx * gx + gy * gy + gz * gz) / std::max(rho, 1e-12);
    return std::abs(rho - 1.0) / grad;
}

} // namespace

TEST_CASE("phantom is deterministic in the spec") {
    const PhantomSpec spec = PhantomSpec::defaults(32, 32, 20, 12, 99);
    const PhantomResult a = generate_phantom(spec);
    const PhantomResult b = generate_phantom(spec);
    CHECK(a.volume.voxels == b.volume.voxels);
    CHECK(a.nucleus_centers == b.nucleus_centers);
}

TEST_CASE("phantom voxels stay in [0,1]") {
    const PhantomSpec spec = PhantomSpec::defaults(48, 40, 24, 40, 3);
    const Volume v = generate_phantom(spec).volume;
    for (float x : v.voxels) {
        CHECK(x >= 0.0f);
        CHECK(x <= 1.0f);
    }
}

TEST_CASE("empty phantom is all zero") {
    PhantomSpec spec = PhantomSpec::defaults(32, 32, 20, 0, 1);
    spec.background_level = 0.0;
    spec.chamber_intensity = 0.0;
    const Volume v = generate_phantom(spec).volume;
    for (float x : v.voxels) CHECK(x == 0.0f);
}

TEST_CASE("desk phantom has sparse bright structure") {
    // Regression bound: fraction of voxels above 0.5 for the desk-scale
    // default (bright nuclei on a dark background).
    const PhantomSpec spec = PhantomSpec::defaults(64, 64, 40, 60, 20250811);
    const Volume v = generate_phantom(spec).volume;
    std::size_t bright = 0;
    for (float x : v.voxels)
        if (x > 0.5f) ++bright;
    const double fraction = static_cast<double>(bright) / v.voxel_count();
    CHECK(fraction > 0.001);
    CHECK(fraction < 0.10);
}

TEST_CASE("nucleus centers sit within a shell thickness of a chamber surface") {
    const PhantomSpec spec = PhantomSpec::defaults(64, 64, 40, 30, 5);
    const PhantomResult res = generate_phantom(spec);
    REQUIRE(res.nucleus_centers.size() == 30);
    for (const auto& c : res.nucleus_centers) {
        const double d = std::min(shell_distance(spec.atrium, c[0], c[1], c[2]),
                                  shell_distance(spec.ventricle, c[0], c[1], c[2]));
        CHECK(d <= spec.atrium.shell);
    }
}

TEST_CASE("invalid phantom specs are rejected") {
    PhantomSpec spec = PhantomSpec::defaults(32, 32, 20, 10, 1);
    SUBCASE("chamber outside bounds") {
        spec.atrium.cx = 100.0;
        CHECK_THROWS_AS(generate_phantom(spec), config_error);
    }
    SUBCASE("negative nuclei") {
        spec.nuclei_count = -1;
        CHECK_THROWS_AS(generate_phantom(spec), config_error);
    }
    SUBCASE("zero radius") {
        spec.nucleus_radius = 0;
        CHECK_THROWS_AS(generate_phantom(spec), config_error);
    }
}

TEST_CASE("select_frames endpoints and arithmetic") {
    const Volume v = testutil::random_volume(4, 4, 150, 8);

    SUBCASE("identity when count == nz") {
        const Volume out = select_frames(v, 150);
        CHECK(out.voxels == v.voxels);
    }
    SUBCASE("40 of 150 takes first and last") {
        const Volume out = select_frames(v, 40);
        REQUIRE(out.nz == 40);
        CHECK(std::equal(out.slice(0).begin(), out.slice(0).end(), v.slice(0).begin()));
        CHECK(std::equal(out.slice(39).begin(), out.slice(39).end(),
                         v.slice(149).begin()));
    }
    SUBCASE("nz=4 count=2 selects slices {1,4}") {
        const Volume small = testutil::random_volume(3, 3, 4, 9);
        const Volume out = select_frames(small, 2);
        REQUIRE(out.nz == 2);
        CHECK(std::equal(out.slice(0).begin(), out.slice(0).end(), small.slice(0).begin()));
        CHECK(std::equal(out.slice(1).begin(), out.slice(1).end(), small.slice(3).begin()));
    }
    SUBCASE("count out of range") {
        CHECK_THROWS_AS(select_frames(v, 0), config_error);
        CHECK_THROWS_AS(select_frames(v, 151), config_error);
    }
}
