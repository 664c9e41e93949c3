#include "cslsm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cslsm/forward_model.hpp"
#include "cslsm/io.hpp"
#include "cslsm/metrics.hpp"
#include "cslsm/solver.hpp"
#include "cslsm/tuner.hpp"

namespace fs = std::filesystem;

namespace cslsm {

std::string to_string(Mode m) { return m == Mode::slice ? "slice" : "temporal"; }

void ExperimentPlan::validate() const {
    if (methods.empty()) throw config_error("plan: method list is empty");
    if (nx < 8 || ny < 8 || nz < 2) throw config_error("plan: volume too small");
    if (frames < 0 || frames > nz) throw config_error("plan: frames must be in [0, nz]");
    if (ratios.empty()) throw config_error("plan: ratio list is empty");
    const int fc = frame_count();
    for (int r : ratios) {
        if (r < 1) throw config_error("plan: ratios must be >= 1");
        if (fc % r != 0)
            throw config_error("plan: ratio " + std::to_string(r) +
                               " does not divide the frame count (" + std::to_string(fc) +
                               " mod " + std::to_string(r) + " != 0)");
    }
    for (double nv : noise_vars)
        if (!(nv >= 0)) throw config_error("plan: noise variances must be >= 0");
    if (!(mask_density > 0 && mask_density < 1))
        throw config_error("plan: mask density must lie in (0, 1)");
    if (tune_budget < 3) throw config_error("plan: tune_budget must be >= 3");
    if (export_slice < 1 || export_slice > fc)
        throw config_error("plan: export_slice must be in [1, frame count]");
}

namespace {

// Optimal parameters reported for the paper's benchmark; used as the
// explicit-mode defaults.
const std::map<std::string, SolverParams> kDefaultParams = {
    {"tikhonov.slice.clean", {0.0152, 0.0010, 0}},
    {"tv.slice.clean", {0.0174, 0.0010, 0}},
    {"bm3d.slice.clean", {9.6690, 0.0031, 0}},
    {"tikhonov.temporal.clean", {0.0070, 0.1000, 0.5959}},
    {"tv.temporal.clean", {0.0987, 0.0114, 0.0010}},
    {"bm3d.temporal.clean", {9.4132, 0.0960, 0.0010}},
    {"tikhonov.slice.noisy", {0.0994, 0.0985, 0}},
    {"tv.slice.noisy", {0.0479, 0.0998, 0}},
    {"bm3d.slice.noisy", {17.4716, 0.0998, 0}},
    {"tikhonov.temporal.noisy", {0.0998, 0.0939, 0.9882}},
    {"tv.temporal.noisy", {0.0999, 0.0996, 0.0317}},
    {"bm3d.temporal.noisy", {18.9113, 0.0999, 0.6745}},
};

std::string cell_key(const MethodSpec& m, bool noisy) {
    return to_string(m.kind) + "." + to_string(m.mode) + "." + (noisy ? "noisy" : "clean");
}

} // namespace

SolverParams ExperimentPlan::explicit_params_for(const MethodSpec& m, bool noisy) const {
    const std::string key = cell_key(m, noisy);
    SolverParams p = kDefaultParams.at(key);
    auto get = [&](const char* field, double& out) {
        auto it = param_overrides.find("params." + key + "." + field);
        if (it != param_overrides.end()) out = it->second;
    };
    get("lambda", p.lambda);
    get("rho", p.rho);
    get("gamma", p.gamma);
    return p;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail_line(int line, const std::string& msg) {
    throw config_error("config line " + std::to_string(line) + ": " + msg);
}

const std::vector<std::string> kValidKeys = {
    "nx", "ny", "nz", "frames", "nuclei", "nucleus_radius", "background",
    "phantom_seed", "mask_seed", "noise_seed", "tune_seed", "mask_density",
    "methods", "ratios", "noise_vars", "params", "tune_budget", "export_slice",
    "out_dir", "params.*"};

bool known_key(const std::string& key) {
    for (const auto& k : kValidKeys)
        if (k == key) return true;
    return key.rfind("params.", 0) == 0;
}

double parse_double(const std::string& v, int line) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) fail_line(line, "expected a number, got '" + v + "'");
        return x;
    } catch (const config_error&) {
        throw;
    } catch (...) {
        fail_line(line, "expected a number, got '" + v + "'");
    }
}

long parse_int(const std::string& v, int line) {
    try {
        std::size_t used = 0;
        const long x = std::stol(v, &used);
        if (used != v.size()) fail_line(line, "expected an integer, got '" + v + "'");
        return x;
    } catch (const config_error&) {
        throw;
    } catch (...) {
        fail_line(line, "expected an integer, got '" + v + "'");
    }
}

std::uint64_t parse_seed(const std::string& v, int line) {
    try {
        std::size_t used = 0;
        const unsigned long long x = std::stoull(v, &used);
        if (used != v.size()) fail_line(line, "expected a seed, got '" + v + "'");
        return x;
    } catch (const config_error&) {
        throw;
    } catch (...) {
        fail_line(line, "expected a seed, got '" + v + "'");
    }
}

MethodSpec parse_method(const std::string& v, int line) {
    const auto parts = split(v, ':');
    if (parts.size() != 2) fail_line(line, "method must be kind:mode, got '" + v + "'");
    MethodSpec m;
    try {
        m.kind = denoiser_kind_from_string(trim(parts[0]));
    } catch (const config_error& e) {
        fail_line(line, e.what());
    }
    const std::string mode = trim(parts[1]);
    if (mode == "slice")
        m.mode = Mode::slice;
    else if (mode == "temporal")
        m.mode = Mode::temporal;
    else
        fail_line(line, "mode must be slice or temporal, got '" + mode + "'");
    return m;
}

} // namespace

ExperimentPlan parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config " + path);

    ExperimentPlan plan;
    std::map<std::string, int> seen; // key -> first line
    std::string raw;
    int line = 0;
    bool have_methods = false;

    while (std::getline(in, raw)) {
        ++line;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string text = trim(raw);
        if (text.empty()) continue;
        const std::size_t eq = text.find('=');
        if (eq == std::string::npos) fail_line(line, "expected `key = value`");
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key.empty()) fail_line(line, "empty key");
        if (!known_key(key)) {
            std::string known;
            for (const auto& k : kValidKeys) known += (known.empty() ? "" : ", ") + k;
            fail_line(line, "unknown key '" + key + "' (valid keys: " + known + ")");
        }
        auto dup = seen.find(key);
        if (dup != seen.end())
            fail_line(line, "duplicate key '" + key + "' (first set on line " +
                                std::to_string(dup->second) + ")");
        seen[key] = line;

        if (key == "nx") plan.nx = static_cast<int>(parse_int(value, line));
        else if (key == "ny") plan.ny = static_cast<int>(parse_int(value, line));
        else if (key == "nz") plan.nz = static_cast<int>(parse_int(value, line));
        else if (key == "frames") plan.frames = static_cast<int>(parse_int(value, line));
        else if (key == "nuclei") plan.nuclei = static_cast<int>(parse_int(value, line));
        else if (key == "nucleus_radius") plan.nucleus_radius = parse_double(value, line);
        else if (key == "background") plan.background = parse_double(value, line);
        else if (key == "phantom_seed") plan.phantom_seed = parse_seed(value, line);
        else if (key == "mask_seed") plan.mask_seed = parse_seed(value, line);
        else if (key == "noise_seed") plan.noise_seed = parse_seed(value, line);
        else if (key == "tune_seed") plan.tune_seed = parse_seed(value, line);
        else if (key == "mask_density") plan.mask_density = parse_double(value, line);
        else if (key == "tune_budget")
            plan.tune_budget = static_cast<int>(parse_int(value, line));
        else if (key == "export_slice")
            plan.export_slice = static_cast<int>(parse_int(value, line));
        else if (key == "out_dir") {
            plan.out_dir = (fs::path(path).parent_path() / value).string();
        } else if (key == "params") {
            if (value == "explicit")
                plan.param_source = ExperimentPlan::ParamSource::explicit_params;
            else if (value == "tuned")
                plan.param_source = ExperimentPlan::ParamSource::tuned;
            else
                fail_line(line, "params must be explicit or tuned");
        } else if (key == "methods") {
            plan.methods.clear();
            if (value == "all") {
                for (auto kind :
                     {DenoiserKind::tikhonov, DenoiserKind::tv, DenoiserKind::bm3d})
                    for (auto mode : {Mode::slice, Mode::temporal})
                        plan.methods.push_back({kind, mode});
            } else {
                for (const auto& item : split(value, ','))
                    plan.methods.push_back(parse_method(trim(item), line));
            }
            have_methods = true;
        } else if (key == "ratios") {
            plan.ratios.clear();
            for (const auto& item : split(value, ','))
                plan.ratios.push_back(static_cast<int>(parse_int(trim(item), line)));
        } else if (key == "noise_vars") {
            plan.noise_vars.clear();
            for (const auto& item : split(value, ','))
                plan.noise_vars.push_back(parse_double(trim(item), line));
        } else if (key.rfind("params.", 0) == 0) {
            // params.<kind>.<mode>.<clean|noisy>.<lambda|rho|gamma>
            const auto parts = split(key, '.');
            if (parts.size() != 5 || kDefaultParams.count(parts[1] + "." + parts[2] + "." + parts[3]) == 0 ||
                (parts[4] != "lambda" && parts[4] != "rho" && parts[4] != "gamma"))
                fail_line(line, "bad parameter key '" + key + "'");
            plan.param_overrides[key] = parse_double(value, line);
        }
    }
    if (in.bad()) throw io_error("read failure on " + path);

    if (!have_methods)
        for (auto kind : {DenoiserKind::tikhonov, DenoiserKind::tv, DenoiserKind::bm3d})
            for (auto mode : {Mode::slice, Mode::temporal})
                plan.methods.push_back({kind, mode});

    plan.validate();
    return plan;
}

// ---------------------------------------------------------------------------
// Sweep execution

namespace {

std::string format_noise(double nv) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", nv);
    return buf;
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

Volume cached_phantom(const ExperimentPlan& plan, const fs::path& cache) {
    char name[160];
    std::snprintf(name, sizeof name, "phantom_%dx%dx%d_n%d_s%llu.cslv", plan.nx, plan.ny,
                  plan.nz, plan.nuclei,
                  static_cast<unsigned long long>(plan.phantom_seed));
    const fs::path file = cache / name;
    if (fs::exists(file)) {
        Volume v = read_volume(file.string());
        if (v.nx == plan.nx && v.ny == plan.ny && v.nz == plan.nz) {
            if (plan.frames > 0) return select_frames(v, plan.frames);
            return v;
        }
    }
    PhantomSpec spec = PhantomSpec::defaults(plan.nx, plan.ny, plan.nz, plan.nuclei,
                                             plan.phantom_seed);
    spec.background_level = plan.background;
    spec.nucleus_radius = plan.nucleus_radius;
    Volume vol = generate_phantom(spec).volume;
    write_volume(vol, file.string());
    if (plan.frames > 0) return select_frames(vol, plan.frames);
    return vol;
}

MaskSet cached_masks(const ExperimentPlan& plan, int ratio, const fs::path& cache) {
    char name[160];
    std::snprintf(name, sizeof name, "masks_R%d_d%g_s%llu_%dx%d.cslm", ratio,
                  plan.mask_density, static_cast<unsigned long long>(plan.mask_seed),
                  plan.nx, plan.ny);
    const fs::path file = cache / name;
    if (fs::exists(file)) {
        MaskSet m = read_masks(file.string());
        if (m.count == ratio && m.nx == plan.nx && m.ny == plan.ny &&
            m.seed == plan.mask_seed)
            return m;
    }
    MaskSet m = generate_masks(plan.nx, plan.ny, ratio, plan.mask_density, plan.mask_seed);
    write_masks(m, file.string());
    return m;
}

MeasurementSet cached_measurements(const ExperimentPlan& plan, const Volume& truth,
                                   int ratio, double noise_var, const fs::path& cache) {
    char name[200];
    std::snprintf(name, sizeof name, "meas_R%d_nv%g_p%llu_m%llu_n%llu.cslb", ratio,
                  noise_var, static_cast<unsigned long long>(plan.phantom_seed),
                  static_cast<unsigned long long>(plan.mask_seed),
                  static_cast<unsigned long long>(plan.noise_seed));
    const fs::path file = cache / name;
    if (fs::exists(file)) {
        MeasurementSet ms = read_measurements(file.string());
        if (ms.nx == plan.nx && ms.ny == plan.ny && ms.compression_ratio == ratio &&
            ms.noise_variance == noise_var && ms.noise_seed == plan.noise_seed &&
            ms.mask_seed == plan.mask_seed &&
            ms.shots == truth.nz / ratio)
            return ms;
    }
    EncodeConfig cfg;
    cfg.compression_ratio = ratio;
    cfg.mask_density = plan.mask_density;
    cfg.mask_seed = plan.mask_seed;
    cfg.noise_variance = noise_var;
    cfg.noise_seed = plan.noise_seed;
    MeasurementSet ms = encode(truth, cfg);
    write_measurements(ms, file.string());
    return ms;
}

std::string row_key(const SweepRow& r) {
    return r.method + "|" + r.mode + "|" + std::to_string(r.ratio) + "|" +
           format_noise(r.noise_var);
}

std::string row_to_csv(const SweepRow& r) {
    std::ostringstream os;
    os << r.method << ',' << r.mode << ',' << r.ratio << ',' << format_noise(r.noise_var)
       << ',' << format_double(r.params.lambda) << ',' << format_double(r.params.rho)
       << ',' << format_double(r.params.gamma) << ',' << format_double(r.psnr_db) << ','
       << format_double(r.ssim) << ',' << r.iterations << ',';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", r.seconds);
    os << buf << ',' << r.phantom_seed << ',' << r.mask_seed << ',' << r.noise_seed << ','
       << r.status;
    return os.str();
}

constexpr const char* kSweepHeader =
    "method,mode,ratio,noise_var,lambda,rho,gamma,psnr_db,ssim,iterations,seconds,"
    "phantom_seed,mask_seed,noise_seed,status";

} // namespace

std::string sweep_csv_path(const ExperimentPlan& plan) {
    return (fs::path(plan.out_dir) / "results.csv").string();
}

std::vector<SweepRow> run_experiment(const ExperimentPlan& plan) {
    plan.validate();
    const fs::path out_dir(plan.out_dir);
    const fs::path cache = out_dir / "cache";
    fs::create_directories(cache);

    const Volume truth = cached_phantom(plan, cache);
    std::vector<SweepRow> rows;

    for (int ratio : plan.ratios) {
        const MaskSet masks = cached_masks(plan, ratio, cache);
        for (double noise_var : plan.noise_vars) {
            const MeasurementSet ms =
                cached_measurements(plan, truth, ratio, noise_var, cache);
            const bool noisy = noise_var > 0;
            for (const MethodSpec& method : plan.methods) {
                SweepRow row;
                row.method = to_string(method.kind);
                row.mode = to_string(method.mode);
                row.ratio = ratio;
                row.noise_var = noise_var;
                row.phantom_seed = plan.phantom_seed;
                row.mask_seed = plan.mask_seed;
                row.noise_seed = plan.noise_seed;
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    SolverConfig cfg;
                    cfg.denoiser.kind = method.kind;
                    cfg.max_iters = SolverConfig::default_max_iters(noise_var);
                    cfg.rel_tol = SolverConfig::default_rel_tol(noise_var);

                    SolverParams params;
                    if (plan.param_source == ExperimentPlan::ParamSource::tuned) {
                        SearchSpace space = SearchSpace::for_method(
                            method.kind, method.mode == Mode::temporal, plan.tune_budget,
                            plan.tune_seed);
                        SolverConfig tune_cfg = cfg;
                        tune_cfg.max_iters = std::max(1, cfg.max_iters / 2);
                        auto objective = [&](const std::vector<double>& p) {
                            SolverConfig c = tune_cfg;
                            c.lambda = p[0];
                            c.rho = p[1];
                            c.gamma = p.size() > 2 ? p[2] : 0.0;
                            auto [vol, st] = reconstruct(ms, masks, c);
                            return psnr(truth, vol);
                        };
                        TuneResult tr = tune(objective, space);
                        params.lambda = tr.best_params[0];
                        params.rho = tr.best_params[1];
                        params.gamma = tr.best_params.size() > 2 ? tr.best_params[2] : 0.0;
                    } else {
                        params = plan.explicit_params_for(method, noisy);
                        if (method.mode == Mode::slice) params.gamma = 0.0;
                    }
                    cfg.lambda = params.lambda;
                    cfg.rho = params.rho;
                    cfg.gamma = method.mode == Mode::temporal ? params.gamma : 0.0;
                    row.params = params;

                    auto [vol, st] = reconstruct(ms, masks, cfg);
                    row.psnr_db = psnr(truth, vol);
                    row.ssim = ssim3d(truth, vol);
                    row.iterations = st.iterations;

                    char pgm[160];
                    std::snprintf(pgm, sizeof pgm, "%s_%s_R%d_nv%s_slice%d.pgm",
                                  row.method.c_str(), row.mode.c_str(), ratio,
                                  format_noise(noise_var).c_str(), plan.export_slice);
                    export_slice_pgm(vol.slice_as_double(plan.export_slice - 1),
                                     (out_dir / pgm).string());
                } catch (const std::exception& e) {
                    row.status = std::string("error: ") + e.what();
                    row.psnr_db = std::nan("");
                    row.ssim = std::nan("");
                }
                row.seconds = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
                rows.push_back(row);
            }
        }
    }

    // Export the matching ground-truth slice once for visual comparison.
    export_slice_pgm(truth.slice_as_double(plan.export_slice - 1),
                     (out_dir / ("truth_slice" + std::to_string(plan.export_slice) +
                                 ".pgm"))
                         .string());

    // Merge with any existing CSV: rows are keyed by method|mode|ratio|noise,
    // so re-running a plan overwrites instead of duplicating.
    const std::string csv_path = sweep_csv_path(plan);
    std::vector<std::string> kept_lines;
    if (fs::exists(csv_path)) {
        std::ifstream in(csv_path);
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (first) {
                first = false;
                continue;
            }
            if (line.empty()) continue;
            const auto fields = split(line, ',');
            if (fields.size() < 4) continue;
            const std::string key =
                fields[0] + "|" + fields[1] + "|" + fields[2] + "|" + fields[3];
            bool replaced = false;
            for (const auto& r : rows)
                if (row_key(r) == key) {
                    replaced = true;
                    break;
                }
            if (!replaced) kept_lines.push_back(line);
        }
    }
    std::ofstream out(csv_path, std::ios::trunc);
    if (!out) throw io_error("cannot open " + csv_path + " for writing");
    out << kSweepHeader << '\n';
    for (const auto& line : kept_lines) out << line << '\n';
    for (const auto& r : rows) out << row_to_csv(r) << '\n';
    if (!out) throw io_error("write failure on " + csv_path);

    return rows;
}

} // namespace cslsm
