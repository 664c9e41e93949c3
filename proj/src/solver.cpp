#include "cslsm/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>

#include "cslsm/threads.hpp"

namespace cslsm {

void SolverConfig::validate() const {
    if (!(rho > 0)) throw config_error("solver: rho must be > 0");
    if (!(gamma >= 0)) throw config_error("solver: gamma must be >= 0");
    if (!(lambda >= 0)) throw config_error("solver: lambda must be >= 0");
    if (max_iters < 1) throw config_error("solver: max_iters must be >= 1");
    if (!(rel_tol > 0)) throw config_error("solver: rel_tol must be > 0");
    denoiser.validate();
}

namespace {

/// Raw v-update kernel for one shot; all pointers address pixel arrays of
/// length `pixels`, with g and v holding R consecutive slices.
void v_update_raw(const double* b, const std::uint8_t* masks, const double* g,
                  std::size_t pixels, int R, double rho, double* v) {
    for (std::size_t p = 0; p < pixels; ++p) {
        double s = 0.0;
        double h = 0.0;
        for (int r = 0; r < R; ++r) {
            const std::uint8_t m = masks[static_cast<std::size_t>(r) * pixels + p];
            s += m;
            h += m * g[static_cast<std::size_t>(r) * pixels + p];
        }
        const double q = (b[p] - h) / (rho + s);
        for (int r = 0; r < R; ++r) {
            const std::size_t i = static_cast<std::size_t>(r) * pixels + p;
            v[i] = g[i] + masks[i] * q;
        }
    }
}

/// g of the u-subproblem. The gamma == 0 branch guarantees the slice-based
/// path and the coupled sweep produce bitwise-identical iterates.
void assemble_denoise_input(const double* v, const double* d, const double* u_prev,
                            const double* u_next, std::size_t pixels, double rho,
                            double gamma, double* g) {
    if (gamma == 0.0) {
        for (std::size_t p = 0; p < pixels; ++p) g[p] = v[p] + d[p];
        return;
    }
    const double inv = 1.0 / (rho + 2.0 * gamma);
    for (std::size_t p = 0; p < pixels; ++p)
        g[p] = (rho * (v[p] + d[p]) + gamma * (u_prev[p] + u_next[p])) * inv;
}

double frobenius(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

bool all_finite(const std::vector<double>& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

double data_misfit(const std::vector<double>& v, const MeasurementSet& ms,
                   const MaskSet& masks) {
    const std::size_t pixels = ms.pixels_per_shot();
    const int R = masks.count;
    double total = 0.0;
    for (int j = 0; j < ms.shots; ++j) {
        const double* vj = v.data() + static_cast<std::size_t>(j) * R * pixels;
        auto bj = ms.shot(j);
        for (std::size_t p = 0; p < pixels; ++p) {
            double c = 0.0;
            for (int r = 0; r < R; ++r)
                c += masks.bits[static_cast<std::size_t>(r) * pixels + p] *
                     vj[static_cast<std::size_t>(r) * pixels + p];
            const double res = static_cast<double>(bj[p]) - c;
            total += res * res;
        }
    }
    return 0.5 * total;
}

} // namespace

std::vector<Slice> v_update_shot(const Slice& b, const std::vector<Slice>& g,
                                 const MaskSet& masks, double rho) {
    if (!(rho > 0)) throw config_error("v_update_shot: rho must be > 0");
    if (static_cast<int>(g.size()) != masks.count)
        throw config_error("v_update_shot: expected one g slice per mask");
    const std::size_t pixels = masks.pixels_per_mask();
    if (b.nx != masks.nx || b.ny != masks.ny)
        throw config_error("v_update_shot: shot and mask dimensions differ");
    std::vector<double> g_flat(static_cast<std::size_t>(masks.count) * pixels);
    for (int r = 0; r < masks.count; ++r) {
        const Slice& gr = g[static_cast<std::size_t>(r)];
        if (gr.nx != b.nx || gr.ny != b.ny)
            throw config_error("v_update_shot: g slice dimensions differ from shot");
        std::copy(gr.values.begin(), gr.values.end(),
                  g_flat.begin() + static_cast<std::size_t>(r) * pixels);
    }
    std::vector<double> v_flat(g_flat.size());
    v_update_raw(b.values.data(), masks.bits.data(), g_flat.data(), pixels, masks.count,
                 rho, v_flat.data());
    std::vector<Slice> out(static_cast<std::size_t>(masks.count), Slice(b.nx, b.ny));
    for (int r = 0; r < masks.count; ++r)
        std::copy(v_flat.begin() + static_cast<std::size_t>(r) * pixels,
                  v_flat.begin() + static_cast<std::size_t>(r + 1) * pixels,
                  out[static_cast<std::size_t>(r)].values.begin());
    return out;
}

Slice u_update_slice(const Slice& v, const Slice& d, const Slice& u_prev,
                     const Slice& u_next, double lambda, double rho, double gamma,
                     const Denoiser& denoiser) {
    const std::size_t pixels = v.pixel_count();
    if (d.pixel_count() != pixels || u_prev.pixel_count() != pixels ||
        u_next.pixel_count() != pixels)
        throw config_error("u_update_slice: slice dimensions differ");
    Slice g(v.nx, v.ny);
    assemble_denoise_input(v.values.data(), d.values.data(), u_prev.values.data(),
                           u_next.values.data(), pixels, rho, gamma, g.values.data());
    return denoiser.apply(g, lambda, rho + 2.0 * gamma, true);
}

std::pair<Volume, SolverState> reconstruct(const MeasurementSet& ms, const MaskSet& masks,
                                           const SolverConfig& cfg) {
    std::mutex warn_mutex;
    std::vector<std::string> warnings;
    auto denoiser = make_denoiser(cfg.denoiser, [&](const std::string& w) {
        std::lock_guard<std::mutex> lock(warn_mutex);
        warnings.push_back(w);
    });
    auto result = reconstruct(ms, masks, cfg, *denoiser);
    result.second.warnings.insert(result.second.warnings.end(), warnings.begin(),
                                  warnings.end());
    return result;
}

std::pair<Volume, SolverState> reconstruct(const MeasurementSet& ms, const MaskSet& masks,
                                           const SolverConfig& cfg,
                                           const Denoiser& denoiser) {
    cfg.validate();
    if (ms.nx != masks.nx || ms.ny != masks.ny)
        throw config_error("reconstruct: measurement and mask dimensions differ");
    if (ms.compression_ratio != masks.count)
        throw config_error("reconstruct: measurement ratio " +
                           std::to_string(ms.compression_ratio) + " != mask count " +
                           std::to_string(masks.count));

    const int R = masks.count;
    const int N = ms.shots;
    const int NR = N * R;
    const std::size_t pixels = ms.pixels_per_shot();
    const std::size_t total = static_cast<std::size_t>(NR) * pixels;

    SolverState state;
    state.nx = ms.nx;
    state.ny = ms.ny;
    state.n_slices = NR;
    state.v.assign(total, 0.0);
    state.u.assign(total, 0.0);
    state.d.assign(total, 0.0);

    // b widened to double once.
    std::vector<double> b(static_cast<std::size_t>(N) * pixels);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = ms.data[i];

    if (cfg.init == SolverConfig::Init::adjoint) {
        // v0 = u0 = Phi^T b / R per shot.
        for (int j = 0; j < N; ++j)
            for (int r = 0; r < R; ++r) {
                const std::size_t n0 = (static_cast<std::size_t>(j) * R + r) * pixels;
                const std::size_t b0 = static_cast<std::size_t>(j) * pixels;
                const std::uint8_t* m = masks.bits.data() + static_cast<std::size_t>(r) * pixels;
                for (std::size_t p = 0; p < pixels; ++p)
                    state.v[n0 + p] = m[p] * b[b0 + p] / R;
            }
        state.u = state.v;
    }

    std::vector<double> v_prev(total);
    const auto t0 = std::chrono::steady_clock::now();
    const bool coupled = cfg.gamma > 0.0 || cfg.sequential_sweep;

    for (int k = 1; k <= cfg.max_iters; ++k) {
        v_prev = state.v;

        // (a) v-update, independent across shots.
        threads::parallel_for(N, [&](std::int64_t j) {
            const std::size_t off = static_cast<std::size_t>(j) * R * pixels;
            // g = u - d assembled into the v stack (overwritten in place).
            double* vj = state.v.data() + off;
            for (std::size_t i = 0; i < static_cast<std::size_t>(R) * pixels; ++i)
                vj[i] = state.u[off + i] - state.d[off + i];
            v_update_raw(b.data() + static_cast<std::size_t>(j) * pixels,
                         masks.bits.data(), vj, pixels, R, cfg.rho, vj);
        });

        // (b) u-update.
        if (coupled) {
            // Gauss-Seidel ascending sweep: u_prev already updated this
            // sweep, u_next from the previous one; circular boundary.
            Slice g(ms.nx, ms.ny);
            for (int n = 0; n < NR; ++n) {
                const std::size_t at = static_cast<std::size_t>(n) * pixels;
                const std::size_t prev =
                    static_cast<std::size_t>((n + NR - 1) % NR) * pixels;
                const std::size_t next = static_cast<std::size_t>((n + 1) % NR) * pixels;
                assemble_denoise_input(state.v.data() + at, state.d.data() + at,
                                       state.u.data() + prev, state.u.data() + next,
                                       pixels, cfg.rho, cfg.gamma, g.values.data());
                Slice un;
                try {
                    un = denoiser.apply(g, cfg.lambda, cfg.rho + 2.0 * cfg.gamma, true);
                } catch (const std::exception& e) {
                    throw error("denoiser failed on slice " + std::to_string(n + 1) +
                                ": " + e.what());
                }
                std::copy(un.values.begin(), un.values.end(), state.u.begin() + at);
            }
        } else {
            // gamma == 0: slices decouple; parallelize across them.
            threads::parallel_for(NR, [&](std::int64_t n) {
                const std::size_t at = static_cast<std::size_t>(n) * pixels;
                Slice g(ms.nx, ms.ny);
                assemble_denoise_input(state.v.data() + at, state.d.data() + at, nullptr,
                                       nullptr, pixels, cfg.rho, 0.0, g.values.data());
                Slice un;
                try {
                    un = denoiser.apply(g, cfg.lambda, cfg.rho, false);
                } catch (const std::exception& e) {
                    throw error("denoiser failed on slice " + std::to_string(n + 1) +
                                ": " + e.what());
                }
                std::copy(un.values.begin(), un.values.end(), state.u.begin() + at);
            });
        }

        // (c) dual ascent.
        for (std::size_t i = 0; i < total; ++i)
            state.d[i] += state.v[i] - state.u[i];

        if (!all_finite(state.v) || !all_finite(state.u) || !all_finite(state.d))
            throw divergence_error(k, "non-finite iterate at iteration " +
                                          std::to_string(k));

        double diff2 = 0.0;
        for (std::size_t i = 0; i < total; ++i) {
            const double dlt = state.v[i] - v_prev[i];
            diff2 += dlt * dlt;
        }
        const double rel =
            std::sqrt(diff2) / std::max(frobenius(v_prev), 1e-12);

        double pr2 = 0.0;
        for (std::size_t i = 0; i < total; ++i) {
            const double dlt = state.v[i] - state.u[i];
            pr2 += dlt * dlt;
        }

        IterationRecord rec;
        rec.iter = k;
        rec.rel_change = rel;
        rec.primal_residual = std::sqrt(pr2);
        rec.data_misfit = data_misfit(state.v, ms, masks);
        rec.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        state.history.push_back(rec);
        state.iterations = k;

        if (cfg.on_iteration) cfg.on_iteration(k, state.v, state.u, state.d);

        if (rel <= cfg.rel_tol) {
            state.converged = true;
            break;
        }
    }

    Volume out(ms.nx, ms.ny, NR);
    for (std::size_t i = 0; i < total; ++i)
        out.voxels[i] = static_cast<float>(state.v[i]);
    return {std::move(out), std::move(state)};
}

ObjectiveBreakdown objective_value(const SolverState& state, const MeasurementSet& ms,
                                   const MaskSet& masks, double lambda, double gamma,
                                   DenoiserKind psi) {
    ObjectiveBreakdown out;
    out.data = data_misfit(state.v, ms, masks);

    const std::size_t pixels = ms.pixels_per_shot();
    if (psi == DenoiserKind::bm3d) {
        out.prior_evaluable = false;
    } else {
        double prior = 0.0;
        for (int n = 0; n < state.n_slices; ++n) {
            Slice s(state.nx, state.ny);
            std::copy(state.v.begin() + static_cast<std::size_t>(n) * pixels,
                      state.v.begin() + static_cast<std::size_t>(n + 1) * pixels,
                      s.values.begin());
            if (psi == DenoiserKind::tikhonov) {
                for (double v : s.values) prior += v * v;
            } else {
                prior += tv_value(s);
            }
        }
        out.prior = lambda * prior;
    }

    if (gamma > 0.0) {
        // Circular sum with exactly NR distinct terms (v_0 = v_NR).
        double t = 0.0;
        for (int n = 0; n < state.n_slices; ++n) {
            const std::size_t at = static_cast<std::size_t>(n) * pixels;
            const std::size_t prev =
                static_cast<std::size_t>((n + state.n_slices - 1) % state.n_slices) *
                pixels;
            for (std::size_t p = 0; p < pixels; ++p) {
                const double dlt = state.v[at + p] - state.v[prev + p];
                t += dlt * dlt;
            }
        }
        out.temporal = 0.5 * gamma * t;
    }
    return out;
}

} // namespace cslsm
