#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cslsm/denoisers.hpp"
#include "cslsm/phantom.hpp"
#include "cslsm/volume.hpp"

// Experiment sweeps: generate/encode (cached), reconstruct, evaluate, and
// consolidate one CSV row per (method, mode, ratio, noise) cell, exporting a
// representative slice as PGM.

namespace cslsm {

enum class Mode { slice, temporal };

std::string to_string(Mode m);

struct MethodSpec {
    DenoiserKind kind = DenoiserKind::tikhonov;
    Mode mode = Mode::slice;
};

struct SolverParams {
    double lambda = 0;
    double rho = 0;
    double gamma = 0;
};

struct ExperimentPlan {
    // Phantom.
    int nx = 64, ny = 64, nz = 40;
    int frames = 0; // 0 = keep all nz slices; else select_frames(frames)
    int nuclei = 60;
    double nucleus_radius = 2.0;
    double background = 0.02;

    // Seeds (surfaced in every CSV row).
    std::uint64_t phantom_seed = 101;
    std::uint64_t mask_seed = 202;
    std::uint64_t noise_seed = 303;
    std::uint64_t tune_seed = 1;

    double mask_density = 0.5;
    std::vector<MethodSpec> methods; // default: all six
    std::vector<int> ratios{2, 4, 10, 20};
    std::vector<double> noise_vars{0.0, 0.001};

    enum class ParamSource { explicit_params, tuned } param_source =
        ParamSource::explicit_params;
    int tune_budget = 50;

    int export_slice = 17; // 1-based
    std::string out_dir = "results";

    // Overrides for explicit mode, keyed like
    // "params.tv.temporal.noisy.lambda"; unset keys use built-in defaults.
    std::map<std::string, double> param_overrides;

    int frame_count() const { return frames > 0 ? frames : nz; }
    void validate() const;

    /// Built-in per-cell parameters (overridable via param_overrides).
    SolverParams explicit_params_for(const MethodSpec& m, bool noisy) const;
};

/// Line-oriented `key = value` text; `#` starts a comment. Unknown keys,
/// duplicates, and type mismatches raise config_error with the line number.
/// Paths are resolved relative to the config file.
ExperimentPlan parse_config(const std::string& path);

struct SweepRow {
    std::string method;
    std::string mode;
    int ratio = 0;
    double noise_var = 0;
    SolverParams params;
    double psnr_db = 0;
    double ssim = 0;
    int iterations = 0;
    double seconds = 0;
    std::uint64_t phantom_seed = 0, mask_seed = 0, noise_seed = 0;
    std::string status = "ok";
};

/// Runs every cell (failures are recorded per cell and do not stop the
/// sweep), writes/merges results.csv in the output directory, and returns
/// the rows of this run.
std::vector<SweepRow> run_experiment(const ExperimentPlan& plan);

/// The consolidated CSV path for a plan.
std::string sweep_csv_path(const ExperimentPlan& plan);

} // namespace cslsm
