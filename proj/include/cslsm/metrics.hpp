#pragma once

#include <string>
#include <vector>

#include "cslsm/volume.hpp"

namespace cslsm {

/// PSNR in dB: 10*log10(voxels * peak^2 / sum of squared differences).
/// Identical inputs yield +infinity.
double psnr(const Volume& reference, const Volume& test, double peak = 1.0);

/// Same on raw double arrays (also used for per-slice checks).
double psnr(std::span<const double> reference, std::span<const double> test,
            double peak = 1.0);

/// Mean local SSIM over every voxel. Local statistics use an 11x11x11
/// Gaussian window (sigma 1.5) with symmetric reflect padding; constants
/// c1 = (0.01 L)^2, c2 = (0.03 L)^2 with L = 1.
double ssim3d(const Volume& reference, const Volume& test);

/// 2D variant: identical statistics with an 11x11 window.
double ssim2d(const Slice& reference, const Slice& test);

/// One reconstruction run's quality record (a row of the evaluation CSV).
struct MetricsReport {
    std::string method_label;
    int compression_ratio = 0;
    double psnr_db = 0.0;
    double ssim = 0.0;
    int iterations = 0;
    double wall_seconds = 0.0;
};

/// CSV with header `method,ratio,psnr_db,ssim,iterations,seconds`.
/// Infinite PSNR is serialized as `inf`.
void write_metrics_csv(const std::string& path, const std::vector<MetricsReport>& rows);

} // namespace cslsm
