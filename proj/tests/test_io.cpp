#include <doctest.h>

#include <cmath>
#include <cstring>

#include "cslsm/forward_model.hpp"
#include "cslsm/io.hpp"
#include "test_util.hpp"

using namespace cslsm;
using testutil::TempFile;

TEST_CASE("volume round-trip is bitwise") {
    const Volume v = testutil::random_volume(7, 5, 3, 42);
    TempFile f(".cslv");
    write_volume(v, f.path());
    const Volume back = read_volume(f.path());
    CHECK(back.nx == v.nx);
    CHECK(back.ny == v.ny);
    CHECK(back.nz == v.nz);
    CHECK(std::memcmp(back.voxels.data(), v.voxels.data(),
                      v.voxels.size() * sizeof(float)) == 0);
}

TEST_CASE("1x1x1 volume with voxel 0.5 encodes to the documented bytes") {
    Volume v(1, 1, 1, 0.5f);
    TempFile f(".cslv");
    write_volume(v, f.path());
    const std::string bytes = testutil::read_file(f.path());
    REQUIRE(bytes.size() == 21); // 17-byte header+dims, then 4 payload bytes
    CHECK(bytes.substr(0, 4) == "CSLV");
    CHECK(bytes[4] == 0x01);
    // nx = ny = nz = 1, little-endian
    for (int field = 0; field < 3; ++field) {
        CHECK(bytes[5 + 4 * field] == 1);
        CHECK(bytes[6 + 4 * field] == 0);
    }
    // IEEE-754 binary32 of 0.5 is 0x3F000000, little-endian on disk.
    CHECK(static_cast<unsigned char>(bytes[17]) == 0x00);
    CHECK(static_cast<unsigned char>(bytes[18]) == 0x00);
    CHECK(static_cast<unsigned char>(bytes[19]) == 0x00);
    CHECK(static_cast<unsigned char>(bytes[20]) == 0x3F);
}

TEST_CASE("volume with NaN is refused") {
    Volume v(2, 2, 1, 0.0f);
    v.voxels[1] = std::nanf("");
    TempFile f(".cslv");
    CHECK_THROWS_AS(write_volume(v, f.path()), format_error);
}

TEST_CASE("bad magic, bad version, truncation are distinct errors") {
    const Volume v = testutil::random_volume(2, 2, 1, 7);
    TempFile f(".cslv");
    write_volume(v, f.path());
    std::string bytes = testutil::read_file(f.path());

    auto rewrite = [&](const std::string& data) {
        std::FILE* out = std::fopen(f.path().c_str(), "wb");
        REQUIRE(out);
        std::fwrite(data.data(), 1, data.size(), out);
        std::fclose(out);
    };

    SUBCASE("magic") {
        std::string bad = bytes;
        bad.replace(0, 4, "XXXX");
        rewrite(bad);
        try {
            read_volume(f.path());
            FAIL("expected format_error");
        } catch (const format_error& e) {
            CHECK(e.which() == format_error::kind::bad_magic);
        }
    }
    SUBCASE("version") {
        std::string bad = bytes;
        bad[4] = 0x02;
        rewrite(bad);
        try {
            read_volume(f.path());
            FAIL("expected format_error");
        } catch (const format_error& e) {
            CHECK(e.which() == format_error::kind::bad_version);
        }
    }
    SUBCASE("truncated payload") {
        // Header claims 4 voxels (16 bytes); keep only 12 payload bytes.
        rewrite(bytes.substr(0, bytes.size() - 4));
        try {
            read_volume(f.path());
            FAIL("expected format_error");
        } catch (const format_error& e) {
            CHECK(e.which() == format_error::kind::truncated);
        }
    }
    SUBCASE("trailing bytes also rejected") {
        rewrite(bytes + "zz");
        CHECK_THROWS_AS(read_volume(f.path()), format_error);
    }
    SUBCASE("missing file is io_error") {
        CHECK_THROWS_AS(read_volume(f.path() + ".nope"), io_error);
    }
}

TEST_CASE("mask set round-trip and validation") {
    const MaskSet m = generate_masks(9, 4, 3, 0.5, 77);
    TempFile f(".cslm");
    write_masks(m, f.path());
    const MaskSet back = read_masks(f.path());
    CHECK(back.count == m.count);
    CHECK(back.nx == m.nx);
    CHECK(back.ny == m.ny);
    CHECK(back.seed == m.seed);
    CHECK(back.bits == m.bits);

    SUBCASE("byte other than 0/1 is invalid") {
        std::string bytes = testutil::read_file(f.path());
        bytes[bytes.size() - 1] = 0x02;
        std::FILE* out = std::fopen(f.path().c_str(), "wb");
        REQUIRE(out);
        std::fwrite(bytes.data(), 1, bytes.size(), out);
        std::fclose(out);
        try {
            read_masks(f.path());
            FAIL("expected format_error");
        } catch (const format_error& e) {
            CHECK(e.which() == format_error::kind::invalid_mask);
        }
    }
}

TEST_CASE("R=1 all-ones 2x2 mask payload is 01 01 01 01") {
    MaskSet m;
    m.count = 1;
    m.nx = 2;
    m.ny = 2;
    m.seed = 0;
    m.bits = {1, 1, 1, 1};
    TempFile f(".cslm");
    write_masks(m, f.path());
    const std::string bytes = testutil::read_file(f.path());
    REQUIRE(bytes.size() == 25 + 4);
    for (int i = 0; i < 4; ++i) CHECK(bytes[25 + i] == 0x01);
}

TEST_CASE("measurement round-trip preserves metadata exactly") {
    Volume v = testutil::random_volume(6, 4, 8, 5);
    EncodeConfig cfg;
    cfg.compression_ratio = 2;
    cfg.mask_seed = 11;
    cfg.noise_variance = 0.001;
    cfg.noise_seed = 13;
    const MeasurementSet ms = encode(v, cfg);
    TempFile f(".cslb");
    write_measurements(ms, f.path());
    const MeasurementSet back = read_measurements(f.path());
    CHECK(back.shots == ms.shots);
    CHECK(back.compression_ratio == ms.compression_ratio);
    CHECK(back.noise_variance == ms.noise_variance);
    CHECK(back.noise_seed == ms.noise_seed);
    CHECK(back.mask_seed == ms.mask_seed);
    CHECK(back.data == ms.data);

    SUBCASE("noise-free set reads back exactly 0.0") {
        cfg.noise_variance = 0.0;
        const MeasurementSet clean = encode(v, cfg);
        TempFile f2(".cslb");
        write_measurements(clean, f2.path());
        CHECK(read_measurements(f2.path()).noise_variance == 0.0);
    }
    SUBCASE("truncated payload") {
        std::string bytes = testutil::read_file(f.path());
        bytes.resize(bytes.size() - 3);
        std::FILE* out = std::fopen(f.path().c_str(), "wb");
        REQUIRE(out);
        std::fwrite(bytes.data(), 1, bytes.size(), out);
        std::fclose(out);
        try {
            read_measurements(f.path());
            FAIL("expected format_error");
        } catch (const format_error& e) {
            CHECK(e.which() == format_error::kind::truncated);
        }
    }
}

TEST_CASE("pgm export maps intensities to big-endian 16-bit samples") {
    Slice s(3, 1);
    s.values = {0.0, 1.0, 0.5};
    TempFile f(".pgm");
    export_slice_pgm(s, f.path());
    const std::string bytes = testutil::read_file(f.path());
    const std::string header = "P5\n3 1\n65535\n";
    REQUIRE(bytes.size() == header.size() + 6);
    CHECK(bytes.substr(0, header.size()) == header);
    const unsigned char* p =
        reinterpret_cast<const unsigned char*>(bytes.data() + header.size());
    CHECK((p[0] << 8 | p[1]) == 0);
    CHECK((p[2] << 8 | p[3]) == 65535);
    CHECK((p[4] << 8 | p[5]) == 32768); // round(0.5 * 65535)
}

TEST_CASE("slice index mapping is bijective") {
    const int R = 4, N = 10;
    int seen[41] = {0};
    for (int n = 1; n <= N * R; ++n) {
        const auto [j, r] = shot_and_offset(n, R);
        CHECK(j >= 1);
        CHECK(j <= N);
        CHECK(r >= 1);
        CHECK(r <= R);
        CHECK(global_slice_index(j, r, R) == n);
        seen[n]++;
    }
    for (int n = 1; n <= N * R; ++n) CHECK(seen[n] == 1);
}
