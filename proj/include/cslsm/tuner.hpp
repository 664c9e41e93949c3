#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cslsm/denoisers.hpp"

// Bayesian parameter search maximizing the objective (reconstruction PSNR):
// a Latin-hypercube warmup followed by a Gaussian-process surrogate with
// Expected Improvement, plus an anti-exploitation rule that swaps the EI
// winner for the max-variance candidate when it lands on top of an
// evaluated point.

namespace cslsm {

struct ParamBound {
    std::string name;
    double lo = 0;
    double hi = 1;
    bool log_scale = false;
};

struct SearchSpace {
    std::vector<ParamBound> dims;
    int budget = 50;
    std::uint64_t seed = 0;

    void validate() const;

    /// Solver spaces: lambda log [1e-3, 1e2] (BM3D: linear [1, 50]),
    /// rho log [1e-3, 1], gamma log [1e-3, 1] when temporal.
    static SearchSpace for_method(DenoiserKind kind, bool temporal, int budget,
                                  std::uint64_t seed);
};

struct TuneEval {
    std::vector<double> params;
    double value = 0; // objective (PSNR); non-finite recorded as -inf
    double seconds = 0;
};

struct TuneResult {
    std::vector<double> best_params;
    double best_value = 0;
    std::vector<TuneEval> trace;
};

TuneResult tune(const std::function<double(const std::vector<double>&)>& objective,
                const SearchSpace& space);

} // namespace cslsm
