// cslsm - compressive light-sheet reconstruction toolbox.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cslsm/forward_model.hpp"
#include "cslsm/harness.hpp"
#include "cslsm/io.hpp"
#include "cslsm/metrics.hpp"
#include "cslsm/phantom.hpp"
#include "cslsm/solver.hpp"
#include "cslsm/tuner.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using namespace cslsm;

void write_history_csv(const std::string& path, const SolverState& state) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out << "iter,rel_change,primal_residual,data_misfit,seconds\n";
    char buf[200];
    for (const auto& rec : state.history) {
        std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.3f\n", rec.iter,
                      rec.rel_change, rec.primal_residual, rec.data_misfit, rec.seconds);
        out << buf;
    }
    if (!out) throw io_error("write failure on " + path);
}

int run(int argc, char** argv) {
    CLI::App app{"Compressive light-sheet volume reconstruction (PnP-ADMM)"};
    app.require_subcommand(1);

    // --- phantom ---
    auto* cmd_phantom = app.add_subcommand("phantom", "Generate the synthetic ground-truth volume");
    int p_nx = 64, p_ny = 64, p_nz = 40, p_nuclei = 60, p_frames = 0;
    double p_radius = 2.0, p_background = 0.02;
    std::uint64_t p_seed = 101;
    bool p_paper_scale = false;
    std::string p_out, p_centers;
    cmd_phantom->add_option("--nx", p_nx, "Width in voxels");
    cmd_phantom->add_option("--ny", p_ny, "Height in voxels");
    cmd_phantom->add_option("--nz", p_nz, "Depth in voxels");
    cmd_phantom->add_option("--nuclei", p_nuclei, "Number of nuclei");
    cmd_phantom->add_option("--radius", p_radius, "Mean nucleus radius (voxels)");
    cmd_phantom->add_option("--background", p_background, "Background intensity");
    cmd_phantom->add_option("--seed", p_seed, "Phantom seed");
    cmd_phantom->add_option("--frames", p_frames,
                            "Keep this many slices via linspace selection (0 = all)");
    cmd_phantom->add_flag("--paper-scale", p_paper_scale,
                          "Use the 200x200x150 volume with 300 nuclei");
    cmd_phantom->add_option("--out", p_out, "Output volume (.cslv)")->required();
    cmd_phantom->add_option("--centers", p_centers, "Write nucleus centers to this file");

    // --- encode ---
    auto* cmd_encode = app.add_subcommand("encode", "Mask-code a volume into measurements");
    std::string e_in, e_out, e_masks;
    EncodeConfig e_cfg;
    cmd_encode->add_option("--in", e_in, "Input volume (.cslv)")->required();
    cmd_encode->add_option("--ratio", e_cfg.compression_ratio, "Compression ratio R")
        ->required();
    cmd_encode->add_option("--density", e_cfg.mask_density, "Mask density in (0,1)");
    cmd_encode->add_option("--mask-seed", e_cfg.mask_seed, "Mask seed");
    cmd_encode->add_option("--noise-var", e_cfg.noise_variance,
                           "Gaussian noise variance (0 = noise-free)");
    cmd_encode->add_option("--noise-seed", e_cfg.noise_seed, "Noise seed");
    cmd_encode->add_option("--out", e_out, "Output measurements (.cslb)")->required();
    cmd_encode->add_option("--masks", e_masks, "Also write the mask set (.cslm)");

    // --- reconstruct ---
    auto* cmd_rec = app.add_subcommand("reconstruct", "PnP-ADMM reconstruction");
    std::string r_meas, r_masks, r_out, r_log, r_denoiser = "tikhonov", r_init = "adjoint";
    double r_lambda = 0.01, r_rho = 0.01, r_gamma = 0.0;
    int r_max_iters = -1;
    double r_tol = -1;
    TvParams r_tv;
    Bm3dParams r_bm3d;
    cmd_rec->add_option("--meas", r_meas, "Measurements (.cslb)")->required();
    cmd_rec->add_option("--masks", r_masks, "Mask set (.cslm)")->required();
    cmd_rec->add_option("--denoiser", r_denoiser, "tikhonov|tv|bm3d");
    cmd_rec->add_option("--lambda", r_lambda, "Regularization weight / BM3D noise level");
    cmd_rec->add_option("--rho", r_rho, "ADMM penalty");
    cmd_rec->add_option("--gamma", r_gamma, "Temporal weight (0 = slice-based)");
    cmd_rec->add_option("--max-iters", r_max_iters,
                        "Iteration cap (default 100 noise-free, 200 noisy)");
    cmd_rec->add_option("--tol", r_tol,
                        "Relative tolerance (default 0.001 noise-free, 0.01 noisy)");
    cmd_rec->add_option("--init", r_init, "adjoint|zeros");
    cmd_rec->add_option("--tv-inner-iters", r_tv.inner_iters, "TV inner iterations");
    cmd_rec->add_option("--tv-inner-tol", r_tv.inner_tol, "TV inner tolerance");
    cmd_rec->add_flag("--bm3d-two-stage", r_bm3d.two_stage, "Enable BM3D Wiener stage");
    cmd_rec->add_option("--bm3d-patch", r_bm3d.patch, "BM3D patch size");
    cmd_rec->add_option("--bm3d-search-window", r_bm3d.search_window, "BM3D search window");
    cmd_rec->add_option("--bm3d-max-matches", r_bm3d.max_matches, "BM3D group size cap");
    cmd_rec->add_option("--bm3d-stride", r_bm3d.stride, "BM3D reference stride");
    cmd_rec->add_option("--out", r_out, "Output volume (.cslv)")->required();
    cmd_rec->add_option("--log", r_log, "Per-iteration history CSV");

    // --- evaluate ---
    auto* cmd_eval = app.add_subcommand("evaluate", "PSNR/SSIM of a reconstruction");
    std::string v_ref, v_test, v_out, v_method = "unknown";
    int v_ratio = 0, v_iterations = 0;
    double v_seconds = 0;
    cmd_eval->add_option("--ref", v_ref, "Ground-truth volume")->required();
    cmd_eval->add_option("--test", v_test, "Reconstructed volume")->required();
    cmd_eval->add_option("--out", v_out, "Report CSV");
    cmd_eval->add_option("--method", v_method, "Method label for the CSV");
    cmd_eval->add_option("--ratio", v_ratio, "Compression ratio for the CSV");
    cmd_eval->add_option("--iterations", v_iterations, "Iterations for the CSV");
    cmd_eval->add_option("--seconds", v_seconds, "Runtime for the CSV");

    // --- tune ---
    auto* cmd_tune = app.add_subcommand("tune", "Bayesian (lambda, rho, gamma) search");
    std::string t_meas, t_masks, t_truth, t_denoiser = "tv", t_out;
    bool t_temporal = false;
    int t_budget = 50;
    std::uint64_t t_seed = 1;
    int t_max_iters = -1;
    double t_tol = -1;
    cmd_tune->add_option("--meas", t_meas, "Measurements (.cslb)")->required();
    cmd_tune->add_option("--masks", t_masks, "Mask set (.cslm)")->required();
    cmd_tune->add_option("--truth", t_truth, "Ground-truth volume (.cslv)")->required();
    cmd_tune->add_option("--denoiser", t_denoiser, "tikhonov|tv|bm3d");
    cmd_tune->add_flag("--temporal", t_temporal, "Tune the temporal model (adds gamma)");
    cmd_tune->add_option("--budget", t_budget, "Objective evaluations");
    cmd_tune->add_option("--seed", t_seed, "Tuner seed");
    cmd_tune->add_option("--max-iters", t_max_iters, "Solver cap during tuning");
    cmd_tune->add_option("--tol", t_tol, "Solver tolerance during tuning");
    cmd_tune->add_option("--out", t_out, "Trace CSV");

    // --- sweep ---
    auto* cmd_sweep = app.add_subcommand("sweep", "Run an experiment plan from a config");
    std::string s_config;
    cmd_sweep->add_option("--config", s_config, "Plan config file")->required();

    auto* cmd_version = app.add_subcommand("version", "Print version");

    CLI11_PARSE(app, argc, argv);

    if (cmd_version->parsed()) {
        std::printf("cslsm %s\n", kVersion);
        return 0;
    }

    if (cmd_phantom->parsed()) {
        if (p_paper_scale) {
            p_nx = p_ny = 200;
            p_nz = 150;
            p_nuclei = 300;
        }
        PhantomSpec spec = PhantomSpec::defaults(p_nx, p_ny, p_nz, p_nuclei, p_seed);
        spec.nucleus_radius = p_radius;
        spec.background_level = p_background;
        PhantomResult res = generate_phantom(spec);
        Volume out = p_frames > 0 ? select_frames(res.volume, p_frames)
                                  : std::move(res.volume);
        write_volume(out, p_out);
        if (!p_centers.empty()) write_centers(res.nucleus_centers, p_centers);
        std::printf("phantom %dx%dx%d nuclei=%d seed=%llu -> %s\n", out.nx, out.ny,
                    out.nz, p_nuclei, static_cast<unsigned long long>(p_seed),
                    p_out.c_str());
        return 0;
    }

    if (cmd_encode->parsed()) {
        const Volume vol = read_volume(e_in);
        const MeasurementSet ms = encode(vol, e_cfg);
        write_measurements(ms, e_out);
        if (!e_masks.empty()) {
            const MaskSet masks = generate_masks(vol.nx, vol.ny, e_cfg.compression_ratio,
                                                 e_cfg.mask_density, e_cfg.mask_seed);
            write_masks(masks, e_masks);
        }
        std::printf("encoded %d shots (R=%d, noise_var=%g) -> %s\n", ms.shots,
                    ms.compression_ratio, ms.noise_variance, e_out.c_str());
        return 0;
    }

    if (cmd_rec->parsed()) {
        const MeasurementSet ms = read_measurements(r_meas);
        const MaskSet masks = read_masks(r_masks);
        SolverConfig cfg;
        cfg.denoiser.kind = denoiser_kind_from_string(r_denoiser);
        cfg.denoiser.tv = r_tv;
        cfg.denoiser.bm3d = r_bm3d;
        cfg.lambda = r_lambda;
        cfg.rho = r_rho;
        cfg.gamma = r_gamma;
        cfg.max_iters = r_max_iters > 0 ? r_max_iters
                                        : SolverConfig::default_max_iters(ms.noise_variance);
        cfg.rel_tol = r_tol > 0 ? r_tol : SolverConfig::default_rel_tol(ms.noise_variance);
        if (r_init == "adjoint")
            cfg.init = SolverConfig::Init::adjoint;
        else if (r_init == "zeros")
            cfg.init = SolverConfig::Init::zeros;
        else
            throw config_error("--init must be adjoint or zeros");
        auto [vol, state] = reconstruct(ms, masks, cfg);
        write_volume(vol, r_out);
        if (!r_log.empty()) write_history_csv(r_log, state);
        for (const auto& w : state.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        std::printf("reconstructed %d slices in %d iterations (%s) -> %s\n", vol.nz,
                    state.iterations, state.converged ? "converged" : "iteration cap",
                    r_out.c_str());
        return 0;
    }

    if (cmd_eval->parsed()) {
        const Volume ref = read_volume(v_ref);
        const Volume test = read_volume(v_test);
        MetricsReport rep;
        rep.method_label = v_method;
        rep.compression_ratio = v_ratio;
        rep.psnr_db = psnr(ref, test);
        rep.ssim = ssim3d(ref, test);
        rep.iterations = v_iterations;
        rep.wall_seconds = v_seconds;
        if (!v_out.empty()) write_metrics_csv(v_out, {rep});
        if (std::isinf(rep.psnr_db))
            std::printf("psnr=inf ssim=%.6f\n", rep.ssim);
        else
            std::printf("psnr=%.4f ssim=%.6f\n", rep.psnr_db, rep.ssim);
        return 0;
    }

    if (cmd_tune->parsed()) {
        const MeasurementSet ms = read_measurements(t_meas);
        const MaskSet masks = read_masks(t_masks);
        const Volume truth = read_volume(t_truth);
        SolverConfig cfg;
        cfg.denoiser.kind = denoiser_kind_from_string(t_denoiser);
        cfg.max_iters = t_max_iters > 0
                            ? t_max_iters
                            : SolverConfig::default_max_iters(ms.noise_variance) / 2;
        cfg.rel_tol = t_tol > 0 ? t_tol : SolverConfig::default_rel_tol(ms.noise_variance);
        SearchSpace space =
            SearchSpace::for_method(cfg.denoiser.kind, t_temporal, t_budget, t_seed);
        auto objective = [&](const std::vector<double>& p) {
            SolverConfig c = cfg;
            c.lambda = p[0];
            c.rho = p[1];
            c.gamma = p.size() > 2 ? p[2] : 0.0;
            auto [vol, st] = reconstruct(ms, masks, c);
            return psnr(truth, vol);
        };
        const TuneResult res = tune(objective, space);
        if (!t_out.empty()) {
            std::ofstream out(t_out, std::ios::trunc);
            if (!out) throw io_error("cannot open " + t_out + " for writing");
            out << "eval,lambda,rho,gamma,psnr_db,seconds\n";
            char buf[200];
            int i = 0;
            for (const auto& ev : res.trace) {
                const double gamma = ev.params.size() > 2 ? ev.params[2] : 0.0;
                std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g,%.3f\n", ++i,
                              ev.params[0], ev.params[1], gamma, ev.value, ev.seconds);
                out << buf;
            }
        }
        const double best_gamma = res.best_params.size() > 2 ? res.best_params[2] : 0.0;
        std::printf("best: lambda=%.6g rho=%.6g gamma=%.6g psnr=%.4f dB (%zu evals)\n",
                    res.best_params[0], res.best_params[1], best_gamma, res.best_value,
                    res.trace.size());
        return 0;
    }

    if (cmd_sweep->parsed()) {
        const ExperimentPlan plan = parse_config(s_config);
        const auto rows = run_experiment(plan);
        int failures = 0;
        for (const auto& r : rows) {
            if (r.status != "ok") {
                ++failures;
                std::fprintf(stderr, "cell %s/%s R=%d nv=%g failed: %s\n",
                             r.method.c_str(), r.mode.c_str(), r.ratio, r.noise_var,
                             r.status.c_str());
            }
        }
        std::printf("sweep complete: %zu cells, %d failed -> %s\n", rows.size(), failures,
                    sweep_csv_path(plan).c_str());
        return failures == 0 ? 0 : 1;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const cslsm::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const cslsm::divergence_error& e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return 3;
    } catch (const cslsm::io_error& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const cslsm::format_error& e) {
        std::fprintf(stderr, "format error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
