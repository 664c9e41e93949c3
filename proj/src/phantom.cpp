#include "cslsm/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cslsm/rng.hpp"

namespace cslsm {

namespace {

/// First-order signed distance (voxels) from point p to the ellipsoid
/// surface: (rho - 1) / |grad rho| with rho the normalized radial value.
/// Accurate near the surface, which is the only place it is used.
double surface_distance(const EllipsoidShell& e, double x, double y, double z) {
    const double ux = (x - e.cx) / e.ax;
    const double uy = (y - e.cy) / e.ay;
    const double uz = (z - e.cz) / e.az;
    const double rho = std::sqrt(ux * ux + uy * uy + uz * uz);
    if (rho < 1e-12) return -std::min({e.ax, e.ay, e.az});
    const double gx = ux / e.ax;
    const double gy = uy / e.ay;
    const double gz = uz / e.az;
    const double grad = std::sqrt(gx * gx + gy * gy + gz * gz) / rho;
    return (rho - 1.0) / grad;
}

void check_fit(const EllipsoidShell& e, int nx, int ny, int nz, const char* name) {
    const double m = e.shell * 0.5;
    if (e.ax <= 0 || e.ay <= 0 || e.az <= 0 || e.shell <= 0)
        throw config_error(std::string(name) + ": semi-axes and shell must be positive");
    if (e.cx - e.ax - m < 0 || e.cx + e.ax + m > nx - 1 || e.cy - e.ay - m < 0 ||
        e.cy + e.ay + m > ny - 1 || e.cz - e.az - m < 0 || e.cz + e.az + m > nz - 1)
        throw config_error(std::string(name) + ": chamber does not fit inside the volume");
}

} // namespace

PhantomSpec PhantomSpec::defaults(int nx, int ny, int nz, int nuclei, std::uint64_t seed) {
    PhantomSpec s;
    s.nx = nx;
    s.ny = ny;
    s.nz = nz;
    s.nuclei_count = nuclei;
    s.seed = seed;
    const double shell = std::max(0.8, 0.03 * std::min({nx, ny, nz}));
    s.atrium = {0.32 * nx, 0.50 * ny, 0.46 * nz,
                0.20 * nx, 0.24 * ny, 0.26 * nz, shell};
    s.ventricle = {0.66 * nx, 0.50 * ny, 0.54 * nz,
                   0.22 * nx, 0.28 * ny, 0.28 * nz, shell};
    return s;
}

void PhantomSpec::validate() const {
    if (nx < 4 || ny < 4 || nz < 2) throw config_error("phantom volume too small");
    if (nuclei_count < 0) throw config_error("nuclei_count must be >= 0");
    if (nucleus_radius <= 0) throw config_error("nucleus_radius must be positive");
    if (nucleus_radius_spread < 0 || nucleus_radius_spread >= nucleus_radius)
        throw config_error("nucleus_radius_spread must be in [0, radius)");
    if (background_level < 0 || background_level >= 1)
        throw config_error("background_level must be in [0, 1)");
    if (chamber_intensity < 0 || chamber_intensity > 1)
        throw config_error("chamber_intensity must be in [0, 1]");
    check_fit(atrium, nx, ny, nz, "atrium");
    check_fit(ventricle, nx, ny, nz, "ventricle");
}

PhantomResult generate_phantom(const PhantomSpec& spec) {
    spec.validate();
    const std::size_t pixels = static_cast<std::size_t>(spec.nx) * spec.ny;
    std::vector<double> acc(pixels * spec.nz, 0.0);

    // Chamber walls.
    const EllipsoidShell* chambers[2] = {&spec.atrium, &spec.ventricle};
    if (spec.chamber_intensity > 0.0) {
        for (const EllipsoidShell* e : chambers) {
            const double half = e->shell * 0.5;
            for (int z = 0; z < spec.nz; ++z)
                for (int y = 0; y < spec.ny; ++y)
                    for (int x = 0; x < spec.nx; ++x) {
                        if (std::abs(surface_distance(*e, x, y, z)) <= half)
                            acc[(static_cast<std::size_t>(z) * spec.ny + y) * spec.nx + x] +=
                                spec.chamber_intensity;
                    }
        }
    }

    // Nuclei on the shell surfaces: uniform-on-surface direction via area-
    // weighted rejection, then a normal-direction jitter within the shell.
    PhantomResult result;
    rng::Sequence draws(spec.seed, /*stream=*/7);
    for (int i = 0; i < spec.nuclei_count; ++i) {
        const EllipsoidShell& e = *chambers[i % 2];
        double px = 0, py = 0, pz = 0, ux = 0, uy = 0, uz = 0;
        for (;;) {
            double gx = draws.next_gaussian();
            double gy = draws.next_gaussian();
            double gz = draws.next_gaussian();
            const double norm = std::sqrt(gx * gx + gy * gy + gz * gz);
            if (norm < 1e-9) continue;
            ux = gx / norm;
            uy = gy / norm;
            uz = gz / norm;
            // Area element of u -> (ax ux, ay uy, az uz) relative to the sphere.
            const double jx = e.ay * e.az * ux;
            const double jy = e.ax * e.az * uy;
            const double jz = e.ax * e.ay * uz;
            const double area = std::sqrt(jx * jx + jy * jy + jz * jz);
            const double area_max =
                std::max({e.ay * e.az, e.ax * e.az, e.ax * e.ay});
            if (draws.next_uniform() * area_max <= area) break;
        }
        px = e.cx + e.ax * ux;
        py = e.cy + e.ay * uy;
        pz = e.cz + e.az * uz;
        // Outward surface normal at the sampled point.
        double nxv = ux / e.ax, nyv = uy / e.ay, nzv = uz / e.az;
        const double nn = std::sqrt(nxv * nxv + nyv * nyv + nzv * nzv);
        nxv /= nn;
        nyv /= nn;
        nzv /= nn;
        const double jitter = (draws.next_uniform() * 2.0 - 1.0) * (e.shell * 0.5);
        px += nxv * jitter;
        py += nyv * jitter;
        pz += nzv * jitter;

        const double radius = std::max(
            0.25, spec.nucleus_radius +
                      (draws.next_uniform() * 2.0 - 1.0) * spec.nucleus_radius_spread);
        const double sigma = radius / 2.0;
        result.nucleus_centers.push_back({px, py, pz});

        const int reach = static_cast<int>(std::ceil(3.0 * sigma));
        const int x0 = std::max(0, static_cast<int>(std::floor(px)) - reach);
        const int x1 = std::min(spec.nx - 1, static_cast<int>(std::ceil(px)) + reach);
        const int y0 = std::max(0, static_cast<int>(std::floor(py)) - reach);
        const int y1 = std::min(spec.ny - 1, static_cast<int>(std::ceil(py)) + reach);
        const int z0 = std::max(0, static_cast<int>(std::floor(pz)) - reach);
        const int z1 = std::min(spec.nz - 1, static_cast<int>(std::ceil(pz)) + reach);
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const double dx = x - px, dy = y - py, dz = z - pz;
                    const double r2 = dx * dx + dy * dy + dz * dz;
                    acc[(static_cast<std::size_t>(z) * spec.ny + y) * spec.nx + x] +=
                        std::exp(-r2 * inv2s2);
                }
    }

    Volume vol(spec.nx, spec.ny, spec.nz);
    for (std::size_t i = 0; i < acc.size(); ++i) {
        const double v = std::clamp(spec.background_level + acc[i], 0.0, 1.0);
        vol.voxels[i] = static_cast<float>(v);
    }
    result.volume = std::move(vol);
    return result;
}

void write_centers(const std::vector<std::array<double, 3>>& centers,
                   const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open " + path + " for writing");
    char buf[128];
    for (const auto& c : centers) {
        std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f\n", c[0], c[1], c[2]);
        out << buf;
    }
    if (!out) throw io_error("write failure on " + path);
}

Volume select_frames(const Volume& v, int count) {
    if (count < 1 || count > v.nz)
        throw config_error("select_frames: count must be in [1, nz]");
    Volume out(v.nx, v.ny, count);
    for (int k = 0; k < count; ++k) {
        // 1-based linspace(1, nz, count), rounded half away from zero.
        const double t =
            count == 1 ? 1.0
                       : 1.0 + (static_cast<double>(v.nz) - 1.0) * k / (count - 1);
        const int src = static_cast<int>(std::lround(t)) - 1;
        auto s = v.slice(src);
        std::copy(s.begin(), s.end(), out.slice(k).begin());
    }
    return out;
}

} // namespace cslsm
