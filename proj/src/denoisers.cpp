#include "cslsm/denoisers.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cslsm/threads.hpp"

namespace cslsm {

std::string to_string(DenoiserKind k) {
    switch (k) {
        case DenoiserKind::tikhonov: return "tikhonov";
        case DenoiserKind::tv: return "tv";
        case DenoiserKind::bm3d: return "bm3d";
    }
    return "?";
}

DenoiserKind denoiser_kind_from_string(const std::string& name) {
    if (name == "tikhonov") return DenoiserKind::tikhonov;
    if (name == "tv") return DenoiserKind::tv;
    if (name == "bm3d") return DenoiserKind::bm3d;
    throw config_error("unknown denoiser '" + name + "' (tikhonov|tv|bm3d)");
}

void DenoiserSpec::validate() const {
    if (tv.inner_iters < 1) throw config_error("tv inner_iters must be >= 1");
    if (!(tv.inner_tol >= 0)) throw config_error("tv inner_tol must be >= 0");
    if (bm3d.patch < 2) throw config_error("bm3d patch must be >= 2");
    if (bm3d.search_window < bm3d.patch || bm3d.search_window % 2 == 0)
        throw config_error("bm3d search_window must be odd and >= patch");
    if (bm3d.max_matches < 1) throw config_error("bm3d max_matches must be >= 1");
    if (bm3d.stride < 1) throw config_error("bm3d stride must be >= 1");
    if (!(bm3d.hard_threshold_factor > 0))
        throw config_error("bm3d hard_threshold_factor must be > 0");
}

// ---------------------------------------------------------------------------
// Tikhonov

Slice denoise_tikhonov(const Slice& g, double lambda, double rho_eff) {
    if (!(rho_eff > 0)) throw config_error("tikhonov: rho_eff must be > 0");
    if (lambda < 0) throw config_error("tikhonov: lambda must be >= 0");
    Slice out(g.nx, g.ny);
    const double scale = rho_eff / (2.0 * lambda + rho_eff);
    for (std::size_t i = 0; i < g.values.size(); ++i) out.values[i] = scale * g.values[i];
    return out;
}

// ---------------------------------------------------------------------------
// Total variation (Chambolle 2004 dual projection)

double tv_value(const Slice& u) {
    double sum = 0.0;
    for (int y = 0; y < u.ny; ++y)
        for (int x = 0; x < u.nx; ++x) {
            const double dx = x + 1 < u.nx ? u.at(x + 1, y) - u.at(x, y) : 0.0;
            const double dy = y + 1 < u.ny ? u.at(x, y + 1) - u.at(x, y) : 0.0;
            sum += std::sqrt(dx * dx + dy * dy);
        }
    return sum;
}

namespace {

/// div p with the conventions adjoint to forward differences: the dual field
/// vanishes on the far boundary rows/columns.
void divergence(const std::vector<double>& px, const std::vector<double>& py,
                int nx, int ny, std::vector<double>& out) {
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * nx + x;
            double d = 0.0;
            if (x == 0)
                d += px[i];
            else if (x == nx - 1)
                d += -px[i - 1];
            else
                d += px[i] - px[i - 1];
            if (y == 0)
                d += py[i];
            else if (y == ny - 1)
                d += -py[i - nx];
            else
                d += py[i] - py[i - nx];
            out[i] = d;
        }
}

} // namespace

Slice denoise_tv(const Slice& g, double weight, const TvParams& params) {
    if (weight < 0) throw config_error("tv: weight must be >= 0");
    if (weight == 0.0) return g;
    const int nx = g.nx, ny = g.ny;
    const std::size_t n = g.pixel_count();
    std::vector<double> px(n, 0.0), py(n, 0.0), div(n, 0.0);
    const double tau = 0.248;
    const double inv_w = 1.0 / weight;

    for (int it = 0; it < params.inner_iters; ++it) {
        divergence(px, py, nx, ny, div);
        double max_delta = 0.0;
        // t = div p - g/w; update p <- (p + tau*grad t) / (1 + tau*|grad t|).
        for (int y = 0; y < ny; ++y) {
            const std::size_t row = static_cast<std::size_t>(y) * nx;
            for (int x = 0; x < nx; ++x) {
                const std::size_t i = row + x;
                const double t0 = div[i] - g.values[i] * inv_w;
                const double tx =
                    x + 1 < nx ? (div[i + 1] - g.values[i + 1] * inv_w) - t0 : 0.0;
                const double ty =
                    y + 1 < ny ? (div[i + nx] - g.values[i + nx] * inv_w) - t0 : 0.0;
                const double mag = std::sqrt(tx * tx + ty * ty);
                const double denom = 1.0 / (1.0 + tau * mag);
                const double nx_new = (px[i] + tau * tx) * denom;
                const double ny_new = (py[i] + tau * ty) * denom;
                max_delta = std::max({max_delta, std::abs(nx_new - px[i]),
                                      std::abs(ny_new - py[i])});
                px[i] = nx_new;
                py[i] = ny_new;
            }
        }
        if (max_delta <= params.inner_tol) break;
    }

    divergence(px, py, nx, ny, div);
    Slice out(nx, ny);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = g.values[i] - weight * div[i];
    return out;
}

// ---------------------------------------------------------------------------
// BM3D-style collaborative filtering
//
// Stage 1: for each reference patch on a stride grid, gather the best-
// matching patches in a centered search window (L2 distance), 2D-DCT each
// patch, 1D Haar across the group (depth padded to a power of two by
// repeating the last patch), hard-threshold at factor*sigma with the DC
// plane exempt, invert, and aggregate with weight 1/(1 + retained nonzeros).
// Stage 2 (optional): empirical Wiener shrink |P|^2/(|P|^2+sigma^2) with the
// stage-1 output as pilot P, matching on the pilot.

namespace {

struct Dct {
    int n;
    std::vector<double> fwd; // fwd[k*n+i] = c_k * cos(pi*(2i+1)k / 2n)

    explicit Dct(int size) : n(size), fwd(static_cast<std::size_t>(size) * size) {
        const double norm0 = std::sqrt(1.0 / n);
        const double norm = std::sqrt(2.0 / n);
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                fwd[static_cast<std::size_t>(k) * n + i] =
                    (k == 0 ? norm0 : norm) *
                    std::cos(M_PI * (2.0 * i + 1.0) * k / (2.0 * n));
    }
};

/// out = D^T coef D, restructured as accumulate-by-row so the inner loops
/// run over contiguous memory.
void dct2_inverse(const Dct& d, const double* coef, double* out, double* tmp) {
    const int n = d.n;
    for (int i = 0; i < n; ++i) {
        double* row = tmp + static_cast<std::size_t>(i) * n;
        for (int l = 0; l < n; ++l) row[l] = 0.0;
        for (int k = 0; k < n; ++k) {
            const double w = d.fwd[static_cast<std::size_t>(k) * n + i];
            const double* crow = coef + static_cast<std::size_t>(k) * n;
            for (int l = 0; l < n; ++l) row[l] += w * crow[l];
        }
    }
    for (int i = 0; i < n; ++i) {
        double* row = out + static_cast<std::size_t>(i) * n;
        const double* trow = tmp + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) row[j] = 0.0;
        for (int l = 0; l < n; ++l) {
            const double w = trow[l];
            const double* frow = d.fwd.data() + static_cast<std::size_t>(l) * n;
            for (int j = 0; j < n; ++j) row[j] += w * frow[j];
        }
    }
}

/// Multi-level orthonormal Haar along the group (depth) axis, applied to all
/// `width` coefficient positions at once; rows are contiguous.
void haar_forward_rows(double* g, int depth, int width, double* scratch) {
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    for (int half = depth / 2; half >= 1; half /= 2) {
        for (int i = 0; i < half; ++i) {
            const double* a = g + static_cast<std::size_t>(2 * i) * width;
            const double* b = g + static_cast<std::size_t>(2 * i + 1) * width;
            double* s = scratch + static_cast<std::size_t>(i) * width;
            double* dd = scratch + static_cast<std::size_t>(half + i) * width;
            for (int c = 0; c < width; ++c) {
                s[c] = (a[c] + b[c]) * inv_sqrt2;
                dd[c] = (a[c] - b[c]) * inv_sqrt2;
            }
        }
        std::copy(scratch, scratch + static_cast<std::size_t>(2 * half) * width, g);
    }
}

void haar_inverse_rows(double* g, int depth, int width, double* scratch) {
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    for (int half = 1; half <= depth / 2; half *= 2) {
        for (int i = 0; i < half; ++i) {
            const double* a = g + static_cast<std::size_t>(i) * width;
            const double* dd = g + static_cast<std::size_t>(half + i) * width;
            double* lo = scratch + static_cast<std::size_t>(2 * i) * width;
            double* hi = scratch + static_cast<std::size_t>(2 * i + 1) * width;
            for (int c = 0; c < width; ++c) {
                lo[c] = (a[c] + dd[c]) * inv_sqrt2;
                hi[c] = (a[c] - dd[c]) * inv_sqrt2;
            }
        }
        std::copy(scratch, scratch + static_cast<std::size_t>(2 * half) * width, g);
    }
}

int next_pow2(int v) {
    int p = 1;
    while (p < v) p *= 2;
    return p;
}

/// Reference-patch coordinates: stride grid plus the forced last position so
/// every pixel is covered.
std::vector<int> ref_positions(int extent, int patch, int stride) {
    std::vector<int> pos;
    const int last = extent - patch;
    for (int x = 0; x < last; x += stride) pos.push_back(x);
    pos.push_back(last);
    return pos;
}

struct Match {
    float dist;
    int y;
    int x;
};

struct Bm3dWorkspace {
    std::vector<Match> matches;
    std::vector<double> group;   // depth x patch^2, depth-major
    std::vector<double> group2;  // pilot group (stage 2)
    std::vector<double> scratch; // transform scratch
    std::vector<double> patch_tmp;
};

/// Patch DCTs for every valid patch position, indexed by y*(nx-p+1)+x, with
/// coefficient layout k*patch+l (k vertical frequency). Computed as two
/// separable passes over the whole image; overlapping patches share the
/// horizontal transforms.
std::vector<double> all_patch_dcts(const Slice& img, const Dct& dct, int patch) {
    const int wx = img.nx - patch + 1;
    const int wy = img.ny - patch + 1;
    const std::size_t psz = static_cast<std::size_t>(patch) * patch;

    // Horizontal pass: the l-th row coefficient at every (x, y).
    std::vector<double> rowt(static_cast<std::size_t>(img.ny) * wx * patch);
    for (int y = 0; y < img.ny; ++y)
        for (int x = 0; x < wx; ++x) {
            const double* src = img.values.data() + static_cast<std::size_t>(y) * img.nx + x;
            double* dst = rowt.data() + (static_cast<std::size_t>(y) * wx + x) * patch;
            for (int l = 0; l < patch; ++l) {
                double s = 0.0;
                for (int j = 0; j < patch; ++j)
                    s += dct.fwd[static_cast<std::size_t>(l) * patch + j] * src[j];
                dst[l] = s;
            }
        }

    // Vertical pass, vectorizable over the contiguous l axis.
    std::vector<double> out(static_cast<std::size_t>(wx) * wy * psz);
    for (int y = 0; y < wy; ++y)
        for (int x = 0; x < wx; ++x) {
            double* dst = out.data() + (static_cast<std::size_t>(y) * wx + x) * psz;
            for (int k = 0; k < patch; ++k) {
                double* row = dst + static_cast<std::size_t>(k) * patch;
                for (int l = 0; l < patch; ++l) row[l] = 0.0;
                for (int i = 0; i < patch; ++i) {
                    const double w = dct.fwd[static_cast<std::size_t>(k) * patch + i];
                    const double* r =
                        rowt.data() + (static_cast<std::size_t>(y + i) * wx + x) * patch;
                    for (int l = 0; l < patch; ++l) row[l] += w * r[l];
                }
            }
        }
    return out;
}

bool match_less(const Match& a, const Match& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
}

/// L2 patch distance with per-lane accumulators so the row loop maps onto
/// one vector op per row; the final lane sum uses a fixed tree.
float patch_distance(const float* a, const float* b, int nx, int p) {
    if (p == 8) {
        float lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
        for (int r = 0; r < 8; ++r) {
            const float* pa = a + static_cast<std::size_t>(r) * nx;
            const float* pb = b + static_cast<std::size_t>(r) * nx;
            for (int c = 0; c < 8; ++c) {
                const float d = pa[c] - pb[c];
                lane[c] += d * d;
            }
        }
        return ((lane[0] + lane[1]) + (lane[2] + lane[3])) +
               ((lane[4] + lane[5]) + (lane[6] + lane[7]));
    }
    float dist = 0.0f;
    for (int r = 0; r < p; ++r) {
        const float* pa = a + static_cast<std::size_t>(r) * nx;
        const float* pb = b + static_cast<std::size_t>(r) * nx;
        for (int c = 0; c < p; ++c) {
            const float d = pa[c] - pb[c];
            dist += d * d;
        }
    }
    return dist;
}

/// Finds the best max_matches patches for the reference at (rx, ry); the
/// reference is always first. Matching runs on a float copy of the image
/// (the distance only ranks candidates). Ties break by (distance, y, x),
/// a total order, so the selection is independent of scan order.
void block_match(const std::vector<float>& img, int nx, int ny, int rx, int ry,
                 const Bm3dParams& prm, Bm3dWorkspace& ws) {
    const int p = prm.patch;
    const int half = (prm.search_window - 1) / 2;
    const int x0 = std::max(0, rx - half);
    const int x1 = std::min(nx - p, rx + half);
    const int y0 = std::max(0, ry - half);
    const int y1 = std::min(ny - p, ry + half);
    const int keep = prm.max_matches - 1;

    // Bounded insertion into a sorted array of the keep best candidates.
    auto& best = ws.matches;
    best.clear();
    const float* base = img.data();
    for (int cy = y0; cy <= y1; ++cy) {
        const float* ref_row = base + static_cast<std::size_t>(ry) * nx + rx;
        const float* cand_row = base + static_cast<std::size_t>(cy) * nx;
        for (int cx = x0; cx <= x1; ++cx) {
            if (cx == rx && cy == ry) continue;
            const Match m{patch_distance(ref_row, cand_row + cx, nx, p), cy, cx};
            if (static_cast<int>(best.size()) == keep && !match_less(m, best.back()))
                continue;
            auto pos = std::upper_bound(best.begin(), best.end(), m, match_less);
            best.insert(pos, m);
            if (static_cast<int>(best.size()) > keep) best.pop_back();
        }
    }
    best.insert(best.begin(), Match{0.0f, ry, rx});
}

struct StageAccumulator {
    std::vector<double> num;
    std::vector<double> den;
    explicit StageAccumulator(std::size_t n) : num(n, 0.0), den(n, 0.0) {}
};

void stage1_reference(const Slice& noisy, const std::vector<float>& match_img,
                      const std::vector<double>& noisy_dct, int rx, int ry, double sigma,
                      const Bm3dParams& prm, const Dct& dct, Bm3dWorkspace& ws,
                      StageAccumulator& acc) {
    const int p = prm.patch;
    const std::size_t psz = static_cast<std::size_t>(p) * p;
    const int wx = noisy.nx - p + 1;
    block_match(match_img, noisy.nx, noisy.ny, rx, ry, prm, ws);
    const int k = static_cast<int>(ws.matches.size());
    const int depth = next_pow2(k);
    ws.group.resize(static_cast<std::size_t>(depth) * psz);
    for (int i = 0; i < depth; ++i) {
        const Match& m = ws.matches[static_cast<std::size_t>(std::min(i, k - 1))];
        const double* src =
            noisy_dct.data() + (static_cast<std::size_t>(m.y) * wx + m.x) * psz;
        std::copy(src, src + psz, ws.group.begin() + static_cast<std::size_t>(i) * psz);
    }
    ws.scratch.resize(static_cast<std::size_t>(depth) * psz);
    haar_forward_rows(ws.group.data(), depth, static_cast<int>(psz), ws.scratch.data());

    const double thr = prm.hard_threshold_factor * sigma;
    std::size_t retained = 0;
    for (int i = 0; i < depth; ++i)
        for (std::size_t c = 0; c < psz; ++c) {
            double& coef = ws.group[static_cast<std::size_t>(i) * psz + c];
            if (c == 0) { // per-patch DC plane is exempt from thresholding
                if (coef != 0.0) ++retained;
                continue;
            }
            if (std::abs(coef) < thr)
                coef = 0.0;
            else if (coef != 0.0)
                ++retained;
        }

    haar_inverse_rows(ws.group.data(), depth, static_cast<int>(psz), ws.scratch.data());

    const double w = 1.0 / (1.0 + static_cast<double>(retained));
    ws.patch_tmp.resize(2 * psz);
    double* patch_out = ws.patch_tmp.data();
    double* tmp = ws.patch_tmp.data() + psz;
    for (int i = 0; i < k; ++i) { // padded copies are not aggregated
        dct2_inverse(dct, ws.group.data() + static_cast<std::size_t>(i) * psz, patch_out,
                     tmp);
        const Match& m = ws.matches[static_cast<std::size_t>(i)];
        for (int r = 0; r < p; ++r) {
            const std::size_t row = static_cast<std::size_t>(m.y + r) * noisy.nx + m.x;
            for (int c = 0; c < p; ++c) {
                acc.num[row + c] += w * patch_out[static_cast<std::size_t>(r) * p + c];
                acc.den[row + c] += w;
            }
        }
    }
}

void stage2_reference(const Slice& noisy, const std::vector<float>& pilot_img,
                      const std::vector<double>& noisy_dct,
                      const std::vector<double>& pilot_dct, int rx, int ry, double sigma,
                      const Bm3dParams& prm, const Dct& dct, Bm3dWorkspace& ws,
                      StageAccumulator& acc) {
    const int p = prm.patch;
    const std::size_t psz = static_cast<std::size_t>(p) * p;
    const int wx = noisy.nx - p + 1;
    block_match(pilot_img, noisy.nx, noisy.ny, rx, ry, prm, ws);
    const int k = static_cast<int>(ws.matches.size());
    const int depth = next_pow2(k);
    ws.group.resize(static_cast<std::size_t>(depth) * psz);
    ws.group2.resize(static_cast<std::size_t>(depth) * psz);
    for (int i = 0; i < depth; ++i) {
        const Match& m = ws.matches[static_cast<std::size_t>(std::min(i, k - 1))];
        const std::size_t at = (static_cast<std::size_t>(m.y) * wx + m.x) * psz;
        std::copy(noisy_dct.data() + at, noisy_dct.data() + at + psz,
                  ws.group.begin() + static_cast<std::size_t>(i) * psz);
        std::copy(pilot_dct.data() + at, pilot_dct.data() + at + psz,
                  ws.group2.begin() + static_cast<std::size_t>(i) * psz);
    }
    ws.scratch.resize(static_cast<std::size_t>(depth) * psz);
    haar_forward_rows(ws.group.data(), depth, static_cast<int>(psz), ws.scratch.data());
    haar_forward_rows(ws.group2.data(), depth, static_cast<int>(psz), ws.scratch.data());

    const double s2 = sigma * sigma;
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(depth) * psz; ++i) {
        const double p2 = ws.group2[i] * ws.group2[i];
        const double denom = p2 + s2;
        const double h = denom > 0.0 ? p2 / denom : 1.0;
        ws.group[i] *= h;
        weight_sum += h * h;
    }

    haar_inverse_rows(ws.group.data(), depth, static_cast<int>(psz), ws.scratch.data());

    const double w = 1.0 / (1.0 + weight_sum);
    ws.patch_tmp.resize(2 * psz);
    double* patch_out = ws.patch_tmp.data();
    double* tmp = ws.patch_tmp.data() + psz;
    for (int i = 0; i < k; ++i) {
        dct2_inverse(dct, ws.group.data() + static_cast<std::size_t>(i) * psz, patch_out,
                     tmp);
        const Match& m = ws.matches[static_cast<std::size_t>(i)];
        for (int r = 0; r < p; ++r) {
            const std::size_t row = static_cast<std::size_t>(m.y + r) * noisy.nx + m.x;
            for (int c = 0; c < p; ++c) {
                acc.num[row + c] += w * patch_out[static_cast<std::size_t>(r) * p + c];
                acc.den[row + c] += w;
            }
        }
    }
}

/// Runs one stage over all reference rows. Rows accumulate into per-row
/// buffers merged in row order, so the result is independent of threading.
template <class PerReference>
Slice run_stage(const Slice& img, int patch, int stride, bool allow_threads,
                const PerReference& process) {
    const std::vector<int> xs = ref_positions(img.nx, patch, stride);
    const std::vector<int> ys = ref_positions(img.ny, patch, stride);
    const std::size_t n = img.pixel_count();

    std::vector<StageAccumulator> row_acc(ys.size(), StageAccumulator(n));
    auto run_row = [&](std::int64_t yi) {
        Bm3dWorkspace ws;
        for (int x : xs) process(x, ys[static_cast<std::size_t>(yi)], ws, row_acc[static_cast<std::size_t>(yi)]);
    };
    if (allow_threads)
        threads::parallel_for(static_cast<std::int64_t>(ys.size()), run_row);
    else
        for (std::size_t yi = 0; yi < ys.size(); ++yi) run_row(static_cast<std::int64_t>(yi));

    StageAccumulator total(n);
    for (const auto& acc : row_acc)
        for (std::size_t i = 0; i < n; ++i) {
            total.num[i] += acc.num[i];
            total.den[i] += acc.den[i];
        }
    Slice out(img.nx, img.ny);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = total.num[i] / total.den[i];
    return out;
}

} // namespace

Slice denoise_bm3d(const Slice& g, double sigma_level, const Bm3dParams& params,
                   bool allow_threads, std::string* warning) {
    if (sigma_level < 0) throw config_error("bm3d: sigma_level must be >= 0");
    const double sigma = sigma_level / 255.0;
    if (g.nx < params.patch || g.ny < params.patch) {
        if (warning)
            *warning = "bm3d: slice " + std::to_string(g.nx) + "x" + std::to_string(g.ny) +
                       " smaller than patch " + std::to_string(params.patch) +
                       ", falling back to tv";
        return denoise_tv(g, 10.0 * sigma * sigma);
    }

    const Dct dct(params.patch);
    const std::vector<double> noisy_dct = all_patch_dcts(g, dct, params.patch);
    std::vector<float> match_img(g.values.begin(), g.values.end());

    Slice basic = run_stage(g, params.patch, params.stride, allow_threads,
                            [&](int x, int y, Bm3dWorkspace& ws, StageAccumulator& acc) {
                                stage1_reference(g, match_img, noisy_dct, x, y, sigma,
                                                 params, dct, ws, acc);
                            });
    if (!params.two_stage) return basic;

    const std::vector<double> pilot_dct = all_patch_dcts(basic, dct, params.patch);
    const std::vector<float> pilot_img(basic.values.begin(), basic.values.end());
    return run_stage(g, params.patch, params.stride, allow_threads,
                     [&](int x, int y, Bm3dWorkspace& ws, StageAccumulator& acc) {
                         stage2_reference(g, pilot_img, noisy_dct, pilot_dct, x, y, sigma,
                                          params, dct, ws, acc);
                     });
}

// ---------------------------------------------------------------------------
// Plug-in wrappers

namespace {

class TikhonovDenoiser final : public Denoiser {
public:
    Slice apply(const Slice& g, double lambda, double rho_eff, bool) const override {
        return denoise_tikhonov(g, lambda, rho_eff);
    }
    DenoiserKind kind() const override { return DenoiserKind::tikhonov; }
    std::string_view name() const override { return "tikhonov"; }
    double prior_value(const Slice& u) const override {
        double s = 0.0;
        for (double v : u.values) s += v * v;
        return s;
    }
};

class TvDenoiser final : public Denoiser {
public:
    explicit TvDenoiser(const TvParams& p) : params_(p) {}
    Slice apply(const Slice& g, double lambda, double rho_eff, bool) const override {
        return denoise_tv(g, lambda / rho_eff, params_);
    }
    DenoiserKind kind() const override { return DenoiserKind::tv; }
    std::string_view name() const override { return "tv"; }
    double prior_value(const Slice& u) const override { return tv_value(u); }

private:
    TvParams params_;
};

class Bm3dDenoiser final : public Denoiser {
public:
    Bm3dDenoiser(const Bm3dParams& p, std::function<void(const std::string&)> warn)
        : params_(p), warn_(std::move(warn)) {}

    Slice apply(const Slice& g, double lambda, double /*rho_eff*/,
                bool allow_threads) const override {
        // lambda is the noise-level indicator on the 0-255 scale, not a
        // weight relative to rho.
        std::string warning;
        Slice out = denoise_bm3d(g, lambda, params_, allow_threads, &warning);
        if (!warning.empty() && warn_) warn_(warning);
        return out;
    }
    DenoiserKind kind() const override { return DenoiserKind::bm3d; }
    std::string_view name() const override { return "bm3d"; }
    bool prior_evaluable() const override { return false; }

private:
    Bm3dParams params_;
    std::function<void(const std::string&)> warn_;
};

} // namespace

std::unique_ptr<Denoiser> make_denoiser(const DenoiserSpec& spec,
                                        std::function<void(const std::string&)> warn) {
    spec.validate();
    switch (spec.kind) {
        case DenoiserKind::tikhonov: return std::make_unique<TikhonovDenoiser>();
        case DenoiserKind::tv: return std::make_unique<TvDenoiser>(spec.tv);
        case DenoiserKind::bm3d:
            return std::make_unique<Bm3dDenoiser>(spec.bm3d, std::move(warn));
    }
    throw config_error("unreachable denoiser kind");
}

} // namespace cslsm
