#include "cslsm/metrics.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <span>
#include <vector>

namespace cslsm {

namespace {

constexpr int kWindowRadius = 5; // 11-tap window
constexpr double kC1 = 0.01 * 0.01; // (0.01*L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

/// Normalized 11-tap Gaussian, sigma 1.5. The separable product of three of
/// these is the 11^3 window; its weights sum to 1 by construction.
const double* gaussian_taps() {
    static const auto taps = [] {
        std::array<double, 2 * kWindowRadius + 1> w{};
        double sum = 0.0;
        for (int k = -kWindowRadius; k <= kWindowRadius; ++k) {
            w[k + kWindowRadius] = std::exp(-(k * k) / (2.0 * 1.5 * 1.5));
            sum += w[k + kWindowRadius];
        }
        for (double& x : w) x /= sum;
        return w;
    }();
    return taps.data();
}

/// Mirror index into [0, n): ... 2 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

/// Separable Gaussian blur along one axis with reflect padding.
void blur_axis(const std::vector<double>& in, std::vector<double>& out, int nx, int ny,
               int nz, int axis) {
    const double* w = gaussian_taps();
    const std::size_t sx = 1;
    const std::size_t sy = static_cast<std::size_t>(nx);
    const std::size_t sz = static_cast<std::size_t>(nx) * ny;
    const int dims[3] = {nx, ny, nz};
    const std::size_t strides[3] = {sx, sy, sz};
    const int n = dims[axis];
    const std::size_t stride = strides[axis];
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                const int idx3[3] = {x, y, z};
                const std::size_t base =
                    static_cast<std::size_t>(x) * sx + static_cast<std::size_t>(y) * sy +
                    static_cast<std::size_t>(z) * sz;
                const std::size_t line0 = base - static_cast<std::size_t>(idx3[axis]) * stride;
                double acc = 0.0;
                for (int k = -kWindowRadius; k <= kWindowRadius; ++k) {
                    const int src = reflect(idx3[axis] + k, n);
                    acc += w[k + kWindowRadius] * in[line0 + static_cast<std::size_t>(src) * stride];
                }
                out[base] = acc;
            }
}

void gaussian_blur3(std::vector<double>& field, std::vector<double>& scratch, int nx,
                    int ny, int nz) {
    blur_axis(field, scratch, nx, ny, nz, 0);
    blur_axis(scratch, field, nx, ny, nz, 1);
    blur_axis(field, scratch, nx, ny, nz, 2);
    field.swap(scratch);
}

double ssim_impl(const std::vector<double>& a, const std::vector<double>& b, int nx,
                 int ny, int nz) {
    const std::size_t n = a.size();
    std::vector<double> mu_a(a), mu_b(b), aa(n), bb(n), ab(n), scratch(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    gaussian_blur3(mu_a, scratch, nx, ny, nz);
    gaussian_blur3(mu_b, scratch, nx, ny, nz);
    gaussian_blur3(aa, scratch, nx, ny, nz);
    gaussian_blur3(bb, scratch, nx, ny, nz);
    gaussian_blur3(ab, scratch, nx, ny, nz);

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ma = mu_a[i];
        const double mb = mu_b[i];
        const double var_a = aa[i] - ma * ma;
        const double var_b = bb[i] - mb * mb;
        const double cov = ab[i] - ma * mb;
        const double local = ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
                             ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
        sum += local;
    }
    return sum / static_cast<double>(n);
}

void require_same_dims(int anx, int any, int anz, int bnx, int bny, int bnz) {
    if (anx != bnx || any != bny || anz != bnz)
        throw config_error("metric inputs have mismatched dimensions");
}

} // namespace

double psnr(std::span<const double> reference, std::span<const double> test,
            double peak) {
    if (reference.size() != test.size())
        throw config_error("metric inputs have mismatched dimensions");
    if (!(peak > 0.0)) throw config_error("psnr peak must be positive");
    double sse = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double d = reference[i] - test[i];
        sse += d * d;
    }
    if (sse == 0.0) return std::numeric_limits<double>::infinity();
    const double count = static_cast<double>(reference.size());
    return 10.0 * std::log10(count * peak * peak / sse);
}

double psnr(const Volume& reference, const Volume& test, double peak) {
    require_same_dims(reference.nx, reference.ny, reference.nz, test.nx, test.ny, test.nz);
    std::vector<double> a(reference.voxels.begin(), reference.voxels.end());
    std::vector<double> b(test.voxels.begin(), test.voxels.end());
    return psnr(std::span<const double>(a), std::span<const double>(b), peak);
}

double ssim3d(const Volume& reference, const Volume& test) {
    require_same_dims(reference.nx, reference.ny, reference.nz, test.nx, test.ny, test.nz);
    std::vector<double> a(reference.voxels.begin(), reference.voxels.end());
    std::vector<double> b(test.voxels.begin(), test.voxels.end());
    return ssim_impl(a, b, reference.nx, reference.ny, reference.nz);
}

double ssim2d(const Slice& reference, const Slice& test) {
    require_same_dims(reference.nx, reference.ny, 1, test.nx, test.ny, 1);
    return ssim_impl(reference.values, test.values, reference.nx, reference.ny, 1);
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsReport>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out << "method,ratio,psnr_db,ssim,iterations,seconds\n";
    char buf[256];
    for (const auto& r : rows) {
        if (std::isinf(r.psnr_db))
            std::snprintf(buf, sizeof buf, "%s,%d,inf,%.10g,%d,%.3f\n",
                          r.method_label.c_str(), r.compression_ratio, r.ssim,
                          r.iterations, r.wall_seconds);
        else
            std::snprintf(buf, sizeof buf, "%s,%d,%.10g,%.10g,%d,%.3f\n",
                          r.method_label.c_str(), r.compression_ratio, r.psnr_db, r.ssim,
                          r.iterations, r.wall_seconds);
        out << buf;
    }
    if (!out) throw io_error("write failure on " + path);
}

} // namespace cslsm
