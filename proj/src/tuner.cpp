#include "cslsm/tuner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "cslsm/errors.hpp"
#include "cslsm/rng.hpp"

namespace cslsm {

void SearchSpace::validate() const {
    if (dims.empty()) throw config_error("search space has no dimensions");
    if (budget < 3) throw config_error("tuner budget must be >= 3");
    for (const auto& d : dims) {
        if (!(d.lo < d.hi))
            throw config_error("search bound " + d.name + ": lower must be < upper");
        if (d.log_scale && !(d.lo > 0))
            throw config_error("search bound " + d.name + ": log scale needs lo > 0");
    }
}

SearchSpace SearchSpace::for_method(DenoiserKind kind, bool temporal, int budget,
                                    std::uint64_t seed) {
    SearchSpace s;
    if (kind == DenoiserKind::bm3d)
        s.dims.push_back({"lambda", 1.0, 50.0, false});
    else
        s.dims.push_back({"lambda", 1e-3, 1e2, true});
    s.dims.push_back({"rho", 1e-3, 1.0, true});
    if (temporal) s.dims.push_back({"gamma", 1e-3, 1.0, true});
    s.budget = budget;
    s.seed = seed;
    return s;
}

namespace {

double to_param(const ParamBound& b, double t) {
    double v;
    if (b.log_scale)
        v = std::exp(std::log(b.lo) + t * (std::log(b.hi) - std::log(b.lo)));
    else
        v = b.lo + t * (b.hi - b.lo);
    return std::clamp(v, b.lo, b.hi);
}

/// Halton sequence point, bases = first primes per dimension.
double halton(std::uint64_t index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
        index /= static_cast<std::uint64_t>(base);
    }
    return r;
}

constexpr int kPrimes[8] = {2, 3, 5, 7, 11, 13, 17, 19};

double std_normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / 2.5066282746310005024;
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730950488); }

/// Dense Cholesky (lower). Returns false if a pivot fails.
bool cholesky(std::vector<double>& a, int n) {
    for (int j = 0; j < n; ++j) {
        double diag = a[static_cast<std::size_t>(j) * n + j];
        for (int k = 0; k < j; ++k) {
            const double l = a[static_cast<std::size_t>(j) * n + k];
            diag -= l * l;
        }
        if (!(diag > 0)) return false;
        const double lj = std::sqrt(diag);
        a[static_cast<std::size_t>(j) * n + j] = lj;
        for (int i = j + 1; i < n; ++i) {
            double s = a[static_cast<std::size_t>(i) * n + j];
            for (int k = 0; k < j; ++k)
                s -= a[static_cast<std::size_t>(i) * n + k] *
                     a[static_cast<std::size_t>(j) * n + k];
            a[static_cast<std::size_t>(i) * n + j] = s / lj;
        }
    }
    return true;
}

void solve_lower(const std::vector<double>& L, int n, std::vector<double>& x) {
    for (int i = 0; i < n; ++i) {
        double s = x[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k)
            s -= L[static_cast<std::size_t>(i) * n + k] * x[static_cast<std::size_t>(k)];
        x[static_cast<std::size_t>(i)] = s / L[static_cast<std::size_t>(i) * n + i];
    }
}

void solve_upper_t(const std::vector<double>& L, int n, std::vector<double>& x) {
    for (int i = n - 1; i >= 0; --i) {
        double s = x[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < n; ++k)
            s -= L[static_cast<std::size_t>(k) * n + i] * x[static_cast<std::size_t>(k)];
        x[static_cast<std::size_t>(i)] = s / L[static_cast<std::size_t>(i) * n + i];
    }
}

struct Gp {
    int n = 0;
    int dims = 0;
    std::vector<double> points; // n x dims, normalized coordinates
    std::vector<double> scales; // per-dim length scales
    std::vector<double> chol;   // lower Cholesky of K
    std::vector<double> alpha;  // K^-1 z
    double y_mean = 0, y_std = 1;
    double best_z = 0; // max of normalized targets

    double kernel(const double* a, const double* b) const {
        double s = 0.0;
        for (int d = 0; d < dims; ++d) {
            const double u = (a[d] - b[d]) / scales[static_cast<std::size_t>(d)];
            s += u * u;
        }
        return std::exp(-0.5 * s);
    }

    void predict(const double* t, double& mu_z, double& var_z) const {
        std::vector<double> k(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            k[static_cast<std::size_t>(i)] =
                kernel(t, points.data() + static_cast<std::size_t>(i) * dims);
        mu_z = 0.0;
        for (int i = 0; i < n; ++i)
            mu_z += k[static_cast<std::size_t>(i)] * alpha[static_cast<std::size_t>(i)];
        std::vector<double> w = k;
        solve_lower(chol, n, w);
        double kk = 0.0;
        for (double x : w) kk += x * x;
        var_z = std::max(0.0, 1.0 - kk);
    }

    double expected_improvement(const double* t) const {
        double mu, var;
        predict(t, mu, var);
        const double s = std::sqrt(var);
        if (s < 1e-12) return 0.0;
        const double delta = mu - best_z;
        const double z = delta / s;
        return delta * std_normal_cdf(z) + s * std_normal_pdf(z);
    }

    double posterior_variance(const double* t) const {
        double mu, var;
        predict(t, mu, var);
        return var;
    }
};

constexpr double kObsNoise = 1e-6;

/// Fits the GP, grid-searching per-dimension length scales over
/// {0.1, 0.3, 1.0} by marginal likelihood.
Gp fit_gp(const std::vector<double>& points, const std::vector<double>& y, int dims) {
    const int n = static_cast<int>(y.size());
    Gp gp;
    gp.n = n;
    gp.dims = dims;
    gp.points = points;

    // Replace non-finite objective records with a value below the finite range.
    std::vector<double> yy = y;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : yy)
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!std::isfinite(lo)) {
        lo = 0;
        hi = 0;
    }
    for (double& v : yy)
        if (!std::isfinite(v)) v = lo - (hi - lo) - 1.0;

    double mean = 0;
    for (double v : yy) mean += v;
    mean /= n;
    double var = 0;
    for (double v : yy) var += (v - mean) * (v - mean);
    var /= n;
    gp.y_mean = mean;
    gp.y_std = std::max(std::sqrt(var), 1e-12);

    std::vector<double> z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        z[static_cast<std::size_t>(i)] = (yy[static_cast<std::size_t>(i)] - mean) / gp.y_std;
    gp.best_z = *std::max_element(z.begin(), z.end());

    static const double kGrid[3] = {0.1, 0.3, 1.0};
    const int combos = static_cast<int>(std::pow(3, dims));
    double best_ml = -std::numeric_limits<double>::infinity();

    std::vector<double> scales(static_cast<std::size_t>(dims));
    for (int c = 0; c < combos; ++c) {
        int rem = c;
        for (int d = 0; d < dims; ++d) {
            scales[static_cast<std::size_t>(d)] = kGrid[rem % 3];
            rem /= 3;
        }
        Gp trial = gp;
        trial.scales = scales;
        std::vector<double> K(static_cast<std::size_t>(n) * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) {
                const double v =
                    trial.kernel(points.data() + static_cast<std::size_t>(i) * dims,
                                 points.data() + static_cast<std::size_t>(j) * dims) +
                    (i == j ? kObsNoise : 0.0);
                K[static_cast<std::size_t>(i) * n + j] = v;
                K[static_cast<std::size_t>(j) * n + i] = v;
            }
        if (!cholesky(K, n)) continue;
        std::vector<double> a = z;
        solve_lower(K, n, a);
        double quad = 0, logdet = 0;
        for (double x : a) quad += x * x;
        for (int i = 0; i < n; ++i)
            logdet += std::log(K[static_cast<std::size_t>(i) * n + i]);
        const double ml = -0.5 * quad - logdet;
        if (ml > best_ml) {
            best_ml = ml;
            solve_upper_t(K, n, a);
            trial.chol = K;
            trial.alpha = a;
            gp = trial;
        }
    }
    if (gp.chol.empty())
        throw error("tuner: GP fit failed for every length scale");
    return gp;
}

} // namespace

TuneResult tune(const std::function<double(const std::vector<double>&)>& objective,
                const SearchSpace& space) {
    space.validate();
    const int dims = static_cast<int>(space.dims.size());
    if (dims > 8) throw config_error("tuner supports at most 8 dimensions");
    const int budget = space.budget;
    // Warmup covers a quarter of the budget but never fewer than 3 points
    // (the smallest sensible GP conditioning set; budget 3 is all warmup).
    const int n_warm = std::min(budget, std::max(3, (budget + 3) / 4));

    TuneResult result;
    std::vector<double> coords; // evaluated points, normalized
    std::vector<double> values;

    auto evaluate = [&](const std::vector<double>& t) {
        std::vector<double> params(static_cast<std::size_t>(dims));
        for (int d = 0; d < dims; ++d)
            params[static_cast<std::size_t>(d)] =
                to_param(space.dims[static_cast<std::size_t>(d)], t[static_cast<std::size_t>(d)]);
        const auto t0 = std::chrono::steady_clock::now();
        double y = objective(params);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!std::isfinite(y)) y = -std::numeric_limits<double>::infinity();
        coords.insert(coords.end(), t.begin(), t.end());
        values.push_back(y);
        result.trace.push_back({params, y, secs});
    };

    // Phase 1: jittered Latin hypercube in normalized coordinates.
    {
        std::vector<std::vector<int>> perms(static_cast<std::size_t>(dims));
        for (int d = 0; d < dims; ++d) {
            auto& perm = perms[static_cast<std::size_t>(d)];
            perm.resize(static_cast<std::size_t>(n_warm));
            for (int i = 0; i < n_warm; ++i) perm[static_cast<std::size_t>(i)] = i;
            rng::Sequence shuffle(space.seed, 100 + static_cast<std::uint64_t>(d));
            for (int i = n_warm - 1; i > 0; --i) {
                const int j = static_cast<int>(shuffle.next_below(static_cast<std::uint64_t>(i + 1)));
                std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
            }
        }
        for (int i = 0; i < n_warm; ++i) {
            std::vector<double> t(static_cast<std::size_t>(dims));
            for (int d = 0; d < dims; ++d)
                t[static_cast<std::size_t>(d)] =
                    (perms[static_cast<std::size_t>(d)][static_cast<std::size_t>(i)] +
                     rng::uniform01(space.seed, 200 + static_cast<std::uint64_t>(d),
                                    static_cast<std::uint64_t>(i))) /
                    n_warm;
            evaluate(t);
        }
    }

    // Phase 2: GP + EI over fresh quasi-random candidates.
    constexpr int kCandidates = 1024;
    constexpr double kMinSeparation = 0.02; // normalized L-inf
    for (int k = n_warm; k < budget; ++k) {
        const Gp gp = fit_gp(coords, values, dims);

        std::vector<double> cand(static_cast<std::size_t>(kCandidates) * dims);
        for (int i = 0; i < kCandidates; ++i)
            for (int d = 0; d < dims; ++d)
                cand[static_cast<std::size_t>(i) * dims + d] = halton(
                    static_cast<std::uint64_t>(k) * kCandidates + static_cast<std::uint64_t>(i) + 1,
                    kPrimes[d]);

        int best_i = 0;
        double best_ei = -1.0;
        for (int i = 0; i < kCandidates; ++i) {
            const double ei =
                gp.expected_improvement(cand.data() + static_cast<std::size_t>(i) * dims);
            if (ei > best_ei) {
                best_ei = ei;
                best_i = i;
            }
        }

        // Anti-exploitation: a winner within kMinSeparation of an evaluated
        // point is replaced by the max posterior-variance candidate.
        auto too_close = [&](const double* t) {
            const int n_eval = static_cast<int>(values.size());
            for (int i = 0; i < n_eval; ++i) {
                double linf = 0.0;
                for (int d = 0; d < dims; ++d)
                    linf = std::max(linf,
                                    std::abs(t[d] - coords[static_cast<std::size_t>(i) * dims + d]));
                if (linf <= kMinSeparation) return true;
            }
            return false;
        };
        if (too_close(cand.data() + static_cast<std::size_t>(best_i) * dims)) {
            double best_var = -1.0;
            for (int i = 0; i < kCandidates; ++i) {
                const double var =
                    gp.posterior_variance(cand.data() + static_cast<std::size_t>(i) * dims);
                if (var > best_var) {
                    best_var = var;
                    best_i = i;
                }
            }
        }

        std::vector<double> t(cand.begin() + static_cast<std::size_t>(best_i) * dims,
                              cand.begin() + static_cast<std::size_t>(best_i + 1) * dims);
        evaluate(t);
    }

    // Best-so-far (first occurrence wins ties).
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.trace.size(); ++i)
        if (result.trace[i].value > result.trace[best].value) best = i;
    result.best_params = result.trace[best].params;
    result.best_value = result.trace[best].value;
    return result;
}

} // namespace cslsm
