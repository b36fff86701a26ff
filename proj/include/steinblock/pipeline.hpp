#pragma once

// Image denoising pipeline and the experiment harness: noise injection,
// PSNR, block vs term-by-term comparisons and parameter sweeps.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "steinblock/core_model.hpp"
#include "steinblock/csv.hpp"
#include "steinblock/error.hpp"
#include "steinblock/parallel.hpp"
#include "steinblock/random.hpp"
#include "steinblock/shrinkage.hpp"
#include "steinblock/transforms.hpp"

namespace steinblock {

/// Adds i.i.d. N(0, sigma^2) noise; the draw depends only on `seed`, so
/// every sigma sees the same standardized noise field.
inline Image add_noise(const Image& img, double sigma, std::uint64_t seed) {
    if (!(sigma > 0.0)) throw Error(ErrorKind::invalid_parameter, "sigma must be positive");
    auto gen = substream(seed, {0x706978656cULL});
    std::normal_distribution<double> normal;
    Image out = img;
    for (double& p : out.pixels) p += sigma * normal(gen);
    return out;
}

/// 20 log10( n ||f||_inf / ||f_hat - f||_2 ), n = sqrt(pixel count).
/// Returns +infinity when the estimate equals the reference.
inline double psnr(const Image& reference, const Image& estimate) {
    if (reference.width != estimate.width || reference.height != estimate.height)
        throw Error(ErrorKind::extent_mismatch, "PSNR needs images of equal extent");
    double peak = 0.0, err2 = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        peak = std::max(peak, std::abs(reference.pixels[i]));
        const double d = estimate.pixels[i] - reference.pixels[i];
        err2 += d * d;
    }
    if (!(peak > 0.0)) throw Error(ErrorKind::invalid_parameter, "PSNR reference is identically zero");
    if (err2 == 0.0) return std::numeric_limits<double>::infinity();
    const double n = std::sqrt(static_cast<double>(reference.size()));
    return 20.0 * std::log10(n * peak / std::sqrt(err2));
}

struct RunRecord {
    std::string image_id;
    TransformKind transform = TransformKind::dwt2;
    int L = 0;
    double lambda = 0.0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    double psnr_out = std::numeric_limits<double>::quiet_NaN();
    double wall_time = 0.0;

    bool psnr_infinite() const { return std::isinf(psnr_out); }
};

struct DenoiseOverrides {
    std::optional<int> L;
    std::optional<double> lambda;
    std::optional<double> sigma;  // estimated by MAD when absent
    BlockEnergy energy = BlockEnergy::mean;
    std::uint64_t calibration_seed = 20090101;
    int calibration_reps = 8;
};

struct DenoiseResult {
    Image image;
    RunRecord record;
    ShrinkReport report;
    DenoiseConfig config;
};

inline long long image_side(const Image& img) {
    return std::llround(std::sqrt(static_cast<double>(img.width) * static_cast<double>(img.height)));
}

/// Per-subband noise standard deviation of the transform for unit white noise.
inline NoiseScales unit_noise_scales(const TransformHandle& t, std::size_t width, std::size_t height,
                                     const DenoiseOverrides& o = {}) {
    return calibrate_noise(t, width, height, 1.0, o.calibration_seed, o.calibration_reps);
}

/// Noise level of an image from its finest diagonal band, corrected by that
/// band's unit-noise gain.
inline double estimate_image_sigma(const CoefficientSet& c, const NoiseScales& unit) {
    const Subband* finest = nullptr;
    for (const auto& s : c.subbands)
        if (s.orientation() == 3 && (!finest || s.scale() > finest->scale())) finest = &s;
    if (!finest) throw Error(ErrorKind::empty_coefficients, "no diagonal subband");
    return estimate_sigma_mad(c) / unit.at(finest->key);
}

/// DenoiseConfig for an image of side n: theoretical L and lambda* unless
/// overridden, noise scales sigma times the unit-noise gains.
inline DenoiseConfig image_config(const FrameSpec& spec, long long side, const CoefficientSet& layout,
                                  const NoiseScales& unit, double sigma, const DenoiseOverrides& o) {
    DenoiseConfig cfg;
    cfg.L = o.L.value_or(theoretical_block_size(side, spec.d, spec.r));
    const ScaleBounds b = scale_bounds(spec, side, cfg.L);
    cfg.j0 = b.j0;
    cfg.J_star = b.j_star;
    cfg.lambda = o.lambda.value_or(solve_lambda_star());
    cfg.energy = o.energy;
    for (const auto& s : layout.subbands) {
        if (s.is_lowpass()) continue;
        cfg.noise_scale[s.key] = sigma * unit.at(s.key);
    }
    return cfg;
}

/// forward -> BlockJS -> inverse.  With a reference image the record's PSNR
/// is filled in.
inline DenoiseResult denoise_image(const Image& img, const TransformHandle& t, const FrameSpec& spec,
                                   const DenoiseOverrides& o = {}, const Image* reference = nullptr) {
    const auto start = std::chrono::steady_clock::now();
    const CoefficientSet coeffs = forward(img, t);
    const NoiseScales unit = unit_noise_scales(t, img.width, img.height, o);
    double sigma = 0.0;
    if (o.sigma) {
        sigma = *o.sigma;
        if (!(sigma > 0.0)) throw Error(ErrorKind::invalid_parameter, "sigma must be positive");
    } else {
        // an estimate at roundoff level means a noise-free (e.g. flat) image
        double peak = 1.0;
        for (double p : img.pixels) peak = std::max(peak, std::abs(p));
        sigma = estimate_image_sigma(coeffs, unit);
        if (!(sigma > 1e-10 * peak))
            throw Error(ErrorKind::degenerate_sigma, "estimated noise level is zero; pass an explicit sigma");
    }

    DenoiseResult result;
    result.config = image_config(spec, image_side(img), coeffs, unit, sigma, o);
    auto est = blockjs_estimate(coeffs, spec, result.config);
    result.report = est.report;
    result.image = inverse(est.estimate, t);
    result.record.transform = t.kind;
    result.record.L = result.config.L;
    result.record.lambda = result.config.lambda;
    result.record.sigma = sigma;
    if (reference) result.record.psnr_out = psnr(*reference, result.image);
    result.record.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

/// Hard term-by-term thresholding at k sigma (finest_k sigma on the finest
/// scale when given).
inline Image term_denoise_image(const Image& img, const TransformHandle& t, double sigma, const NoiseScales& unit,
                                double k = 3.0, std::optional<double> finest_k = std::nullopt, int j0 = 0) {
    const CoefficientSet coeffs = forward(img, t);
    NoiseScales scales;
    for (const auto& s : coeffs.subbands)
        if (!s.is_lowpass()) scales[s.key] = sigma * unit.at(s.key);
    TermThresholdConfig cfg;
    cfg.k = k;
    cfg.j0 = j0;
    cfg.finest_k = finest_k;
    return inverse(term_threshold(coeffs, scales, cfg), t);
}

// ---------------------------------------------------------------------------

struct SweepGrid {
    std::vector<double> sigmas;
    std::vector<int> block_sizes;
    std::vector<double> lambdas;
    std::vector<std::uint64_t> seeds;
    std::vector<TransformKind> transforms{TransformKind::dwt2};
    std::optional<int> levels;
    BlockEnergy energy = BlockEnergy::mean;

    void validate() const {
        if (sigmas.empty() || block_sizes.empty() || lambdas.empty() || seeds.empty() || transforms.empty())
            throw Error(ErrorKind::invalid_parameter, "every sweep axis needs at least one value");
        for (double s : sigmas)
            if (!(s > 0.0)) throw Error(ErrorKind::invalid_parameter, "sweep sigmas must be positive");
        for (int L : block_sizes)
            if (L < 1) throw Error(ErrorKind::invalid_parameter, "block sizes must be >= 1");
        for (double l : lambdas)
            if (!(l > 0.0)) throw Error(ErrorKind::invalid_parameter, "lambdas must be positive");
        for (auto t : transforms)
            if (t == TransformKind::external)
                throw Error(ErrorKind::invalid_parameter, "sweeps run built-in transforms only");
    }

    std::size_t cell_count() const {
        return transforms.size() * sigmas.size() * block_sizes.size() * lambdas.size() * seeds.size();
    }
};

/// Every (transform, sigma, L, lambda, seed) cell, in that canonical order.
/// Each noisy image is transformed once and reused for all (L, lambda).
inline std::vector<RunRecord> run_sweep(const Image& clean, const std::string& image_id, const SweepGrid& grid,
                                        const FrameSpec& spec = presets::wavelet_2d()) {
    grid.validate();
    const int levels = grid.levels.value_or(default_levels(clean.width, clean.height));
    const long long side = image_side(clean);

    std::vector<TransformHandle> handles;
    std::vector<NoiseScales> units;
    for (auto kind : grid.transforms) {
        handles.push_back(make_transform(kind, levels));
        units.push_back(unit_noise_scales(handles.back(), clean.width, clean.height));
    }

    const std::size_t nT = grid.transforms.size(), nS = grid.sigmas.size(), nL = grid.block_sizes.size(),
                      nLam = grid.lambdas.size(), nSeed = grid.seeds.size();
    std::vector<RunRecord> records(grid.cell_count());
    auto cell = [&](std::size_t t, std::size_t s, std::size_t l, std::size_t lam, std::size_t seed) {
        return (((t * nS + s) * nL + l) * nLam + lam) * nSeed + seed;
    };

    parallel_for(nT * nS * nSeed, [&](std::size_t task) {
        const std::size_t t = task / (nS * nSeed);
        const std::size_t s = (task / nSeed) % nS;
        const std::size_t seed = task % nSeed;
        const double sigma = grid.sigmas[s];
        const Image noisy = add_noise(clean, sigma, grid.seeds[seed]);
        const CoefficientSet coeffs = forward(noisy, handles[t]);
        for (std::size_t l = 0; l < nL; ++l) {
            for (std::size_t lam = 0; lam < nLam; ++lam) {
                const auto start = std::chrono::steady_clock::now();
                DenoiseOverrides o;
                o.L = grid.block_sizes[l];
                o.lambda = grid.lambdas[lam];
                o.energy = grid.energy;
                const DenoiseConfig cfg = image_config(spec, side, coeffs, units[t], sigma, o);
                const Image out = inverse(blockjs_estimate(coeffs, spec, cfg).estimate, handles[t]);
                RunRecord& rec = records[cell(t, s, l, lam, seed)];
                rec.image_id = image_id;
                rec.transform = grid.transforms[t];
                rec.L = cfg.L;
                rec.lambda = cfg.lambda;
                rec.sigma = sigma;
                rec.seed = grid.seeds[seed];
                rec.psnr_out = psnr(clean, out);
                rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            }
        }
    });
    return records;
}

struct SweepSummary {
    std::string image_id;
    TransformKind transform = TransformKind::dwt2;
    double sigma = 0.0;
    int L = 0;
    double lambda = 0.0;
    double mean_psnr = 0.0;
    std::size_t runs = 0;
};

/// Mean PSNR over seeds for every (transform, sigma, L, lambda), first-seen order.
inline std::vector<SweepSummary> summarize_sweep(const std::vector<RunRecord>& records) {
    std::vector<SweepSummary> out;
    std::map<std::tuple<std::string, int, double, int, double>, std::size_t> index;
    for (const auto& r : records) {
        const auto key = std::tuple{r.image_id, static_cast<int>(r.transform), r.sigma, r.L, r.lambda};
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, out.size()).first;
            out.push_back({r.image_id, r.transform, r.sigma, r.L, r.lambda, 0.0, 0});
        }
        out[it->second].mean_psnr += r.psnr_out;
        ++out[it->second].runs;
    }
    for (auto& s : out) s.mean_psnr /= static_cast<double>(s.runs);
    return out;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<RunRecord>& records, bool with_timing = false) {
    os << "image,transform,sigma,L,lambda,seed,psnr" << (with_timing ? ",wall_time" : "") << '\n';
    for (const auto& r : records) {
        os << r.image_id << ',' << to_string(r.transform) << ',' << csv::number(r.sigma) << ',' << r.L << ','
           << csv::number(r.lambda) << ',' << r.seed << ',' << csv::number(r.psnr_out);
        if (with_timing) os << ',' << csv::number(r.wall_time);
        os << '\n';
    }
}

inline void write_sweep_summary_csv(std::ostream& os, const std::vector<SweepSummary>& rows) {
    os << "image,transform,sigma,L,lambda,mean_psnr,runs\n";
    for (const auto& r : rows) {
        os << r.image_id << ',' << to_string(r.transform) << ',' << csv::number(r.sigma) << ',' << r.L << ','
           << csv::number(r.lambda) << ',' << csv::number(r.mean_psnr) << ',' << r.runs << '\n';
    }
}

/// "<stem>_mean<ext>" next to a sweep CSV.
inline std::filesystem::path summary_path(const std::filesystem::path& out) {
    auto p = out;
    p.replace_filename(out.stem().string() + "_mean" + (out.has_extension() ? out.extension().string() : ".csv"));
    return p;
}

// ---------------------------------------------------------------------------

enum class Method { block, term };

inline std::string_view to_string(Method m) { return m == Method::block ? "block" : "term"; }

struct CompareRow {
    std::string image_id;
    TransformKind transform = TransformKind::dwt2;
    Method method = Method::block;
    double sigma = 0.0;
    double mean_psnr = 0.0;
    double improvement_db = 0.0;  // over DWT term-by-term at the same sigma
};

struct CompareOptions {
    std::optional<int> levels;
    BlockEnergy energy = BlockEnergy::mean;
    double term_k = 3.0;
    double term_finest_k_redundant = 4.0;
};

/// Mean PSNR per sigma of {block, term} x {dwt2, udwt2}, all on the same
/// noisy realizations.  Block uses the theoretical L and lambda*; term uses
/// k sigma, with the finest scale at 4 sigma for the redundant transform.
inline std::vector<CompareRow> run_block_vs_term(const Image& clean, const std::string& image_id,
                                                 const std::vector<double>& sigmas,
                                                 const std::vector<std::uint64_t>& seeds,
                                                 const CompareOptions& opts = {},
                                                 const FrameSpec& spec = presets::wavelet_2d()) {
    if (sigmas.empty() || seeds.empty()) throw Error(ErrorKind::invalid_parameter, "need sigmas and seeds");
    for (double s : sigmas)
        if (!(s > 0.0)) throw Error(ErrorKind::invalid_parameter, "sigmas must be positive");
    const int levels = opts.levels.value_or(default_levels(clean.width, clean.height));
    const std::vector<TransformKind> kinds{TransformKind::dwt2, TransformKind::udwt2};
    std::vector<TransformHandle> handles;
    std::vector<NoiseScales> units;
    for (auto k : kinds) {
        handles.push_back(make_transform(k, levels));
        units.push_back(unit_noise_scales(handles.back(), clean.width, clean.height));
    }
    const long long side = image_side(clean);

    // psnr[(sigma, seed)][transform][method]
    const std::size_t nS = sigmas.size(), nSeed = seeds.size();
    std::vector<std::array<std::array<double, 2>, 2>> psnrs(nS * nSeed);
    parallel_for(nS * nSeed * kinds.size(), [&](std::size_t task) {
        const std::size_t t = task % kinds.size();
        const std::size_t cell = task / kinds.size();
        const double sigma = sigmas[cell / nSeed];
        const Image noisy = add_noise(clean, sigma, seeds[cell % nSeed]);
        DenoiseOverrides o;
        o.energy = opts.energy;
        const CoefficientSet coeffs = forward(noisy, handles[t]);
        const DenoiseConfig cfg = image_config(spec, side, coeffs, units[t], sigma, o);
        const Image block = inverse(blockjs_estimate(coeffs, spec, cfg).estimate, handles[t]);
        const std::optional<double> finest =
            kinds[t] == TransformKind::udwt2 ? std::optional<double>(opts.term_finest_k_redundant) : std::nullopt;
        const Image term = term_denoise_image(noisy, handles[t], sigma, units[t], opts.term_k, finest, cfg.j0);
        psnrs[cell][t][0] = psnr(clean, block);
        psnrs[cell][t][1] = psnr(clean, term);
    });

    std::vector<CompareRow> rows;
    for (std::size_t t = 0; t < kinds.size(); ++t) {
        for (int m = 0; m < 2; ++m) {
            for (std::size_t s = 0; s < nS; ++s) {
                double mean = 0.0, baseline = 0.0;
                for (std::size_t k = 0; k < nSeed; ++k) {
                    mean += psnrs[s * nSeed + k][t][static_cast<std::size_t>(m)];
                    baseline += psnrs[s * nSeed + k][0][1];
                }
                mean /= static_cast<double>(nSeed);
                baseline /= static_cast<double>(nSeed);
                rows.push_back({image_id, kinds[t], m == 0 ? Method::block : Method::term, sigmas[s], mean,
                                mean - baseline});
            }
        }
    }
    return rows;
}

inline void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows) {
    os << "image,transform,method,sigma,mean_psnr,improvement_db\n";
    for (const auto& r : rows) {
        os << r.image_id << ',' << to_string(r.transform) << ',' << to_string(r.method) << ','
           << csv::number(r.sigma) << ',' << csv::number(r.mean_psnr) << ',' << csv::number(r.improvement_db)
           << '\n';
    }
}

}  // namespace steinblock
