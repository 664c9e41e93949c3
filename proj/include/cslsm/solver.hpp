#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cslsm/denoisers.hpp"
#include "cslsm/volume.hpp"

namespace cslsm {

struct SolverConfig {
    double lambda = 0.01; // regularization weight (BM3D: noise-level indicator)
    double rho = 0.01;    // ADMM penalty, > 0
    double gamma = 0.0;   // temporal coupling, >= 0; 0 = slice-based
    int max_iters = 100;
    double rel_tol = 1e-3;
    DenoiserSpec denoiser;
    enum class Init { adjoint, zeros } init = Init::adjoint;
    /// Run the coupled Gauss-Seidel sweep even when gamma == 0 (the result
    /// is identical; the slice path just parallelizes over slices).
    bool sequential_sweep = false;

    /// Called after each completed iteration with the full iterate.
    std::function<void(int iter, const std::vector<double>& v,
                       const std::vector<double>& u, const std::vector<double>& d)>
        on_iteration;

    static int default_max_iters(double noise_variance) {
        return noise_variance > 0 ? 200 : 100;
    }
    static double default_rel_tol(double noise_variance) {
        return noise_variance > 0 ? 1e-2 : 1e-3;
    }

    void validate() const;
};

struct IterationRecord {
    int iter = 0;           // 1-based
    double rel_change = 0;  // ||v_k - v_{k-1}||_F / max(||v_{k-1}||_F, 1e-12)
    double primal_residual = 0; // ||v - u||_F
    double data_misfit = 0;     // 1/2 sum_j ||b_j - Phi v||^2
    double seconds = 0;         // elapsed since solve start
};

struct SolverState {
    int nx = 0, ny = 0, n_slices = 0; // n_slices = N*R
    std::vector<double> v, u, d;      // stacks, slice-major
    int iterations = 0;
    bool converged = false;
    std::vector<IterationRecord> history;
    std::vector<std::string> warnings;
};

/// Closed-form v-update for one shot via the Woodbury identity. With binary
/// masks, Phi Phi^T + rho I is diagonal, so with s(p) = sum_r m_r(p) and
/// h(p) = sum_r m_r(p) g_r(p):
///   v_r(p) = g_r(p) + m_r(p) * (b(p) - h(p)) / (rho + s(p)),
/// which equals (Phi^T Phi + rho I)^{-1} (Phi^T b + rho g) exactly.
std::vector<Slice> v_update_shot(const Slice& b, const std::vector<Slice>& g,
                                 const MaskSet& masks, double rho);

/// One u-update: denoises g = (rho(v+d) + gamma(u_prev+u_next)) / (rho+2gamma)
/// with effective weight lambda / (rho + 2 gamma). For gamma == 0 this is
/// exactly denoising v + d with weight lambda / rho.
Slice u_update_slice(const Slice& v, const Slice& d, const Slice& u_prev,
                     const Slice& u_next, double lambda, double rho, double gamma,
                     const Denoiser& denoiser);

/// Full PnP-ADMM reconstruction (Gauss-Seidel over slices when gamma > 0,
/// circular boundary u_0 = u_NR, u_{NR+1} = u_1).
std::pair<Volume, SolverState> reconstruct(const MeasurementSet& ms, const MaskSet& masks,
                                           const SolverConfig& cfg);

/// Same, with a caller-supplied denoiser (e.g. for tests).
std::pair<Volume, SolverState> reconstruct(const MeasurementSet& ms, const MaskSet& masks,
                                           const SolverConfig& cfg,
                                           const Denoiser& denoiser);

/// Diagnostic objective: data term + lambda * sum psi(v_n) + circular
/// temporal term with exactly n_slices distinct differences. The prior term
/// is only evaluable for Tikhonov and TV.
struct ObjectiveBreakdown {
    double data = 0;
    double prior = 0;
    double temporal = 0;
    bool prior_evaluable = true;
    double total() const { return data + prior + temporal; }
};

ObjectiveBreakdown objective_value(const SolverState& state, const MeasurementSet& ms,
                                   const MaskSet& masks, double lambda, double gamma,
                                   DenoiserKind psi);

} // namespace cslsm
