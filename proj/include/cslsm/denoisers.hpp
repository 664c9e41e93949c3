#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "cslsm/volume.hpp"

namespace cslsm {

enum class DenoiserKind { tikhonov, tv, bm3d };

std::string to_string(DenoiserKind k);
DenoiserKind denoiser_kind_from_string(const std::string& name);

struct TvParams {
    int inner_iters = 50;
    double inner_tol = 1e-4;
};

struct Bm3dParams {
    int patch = 8;
    int search_window = 39; // odd, centered on the reference patch
    int max_matches = 16;
    int stride = 3; // reference-patch step
    double hard_threshold_factor = 2.7;
    bool two_stage = false; // stage-2 Wiener refinement
};

struct DenoiserSpec {
    DenoiserKind kind = DenoiserKind::tikhonov;
    TvParams tv;
    Bm3dParams bm3d;

    void validate() const;
};

/// Closed-form Tikhonov shrink: rho_eff * g / (2*lambda + rho_eff).
Slice denoise_tikhonov(const Slice& g, double lambda, double rho_eff);

/// Approximate argmin_u  w*TV(u) + 1/2 ||u - g||^2 by Chambolle's dual
/// projection (step 0.248). Isotropic TV, forward differences, replicate
/// boundary. Stops at inner_iters or when the max dual change <= inner_tol.
Slice denoise_tv(const Slice& g, double weight, const TvParams& params = {});

/// Isotropic TV value with the same discretization as denoise_tv.
double tv_value(const Slice& u);

/// BM3D-style collaborative filter. sigma_level is the noise indicator on
/// the 0-255 intensity scale (sigma = sigma_level / 255 internally).
/// Slices smaller than the patch fall back to TV with w = 10*sigma^2 and
/// report through `warning` when given.
Slice denoise_bm3d(const Slice& g, double sigma_level, const Bm3dParams& params = {},
                   bool allow_threads = false, std::string* warning = nullptr);

/// Plug-in interface used by the solver's u-update. Implementations are
/// deterministic pure functions of (input, parameters) and must return the
/// input unchanged (to 1e-10) at zero strength.
class Denoiser {
public:
    virtual ~Denoiser() = default;

    /// Denoises g given the solver weights; rho_eff = rho + 2*gamma.
    /// allow_threads permits internal parallelism; the result must be
    /// bitwise identical either way.
    virtual Slice apply(const Slice& g, double lambda, double rho_eff,
                        bool allow_threads) const = 0;

    virtual DenoiserKind kind() const = 0;
    virtual std::string_view name() const = 0;

    /// Whether psi can be evaluated (false for BM3D).
    virtual bool prior_evaluable() const { return true; }
    virtual double prior_value(const Slice&) const { return 0.0; }
};

/// Factory; `warn` receives warning records (e.g. BM3D small-slice fallback).
std::unique_ptr<Denoiser> make_denoiser(
    const DenoiserSpec& spec, std::function<void(const std::string&)> warn = {});

} // namespace cslsm
