#pragma once

// Stein block thresholding (BlockJS) over a CoefficientSet, the threshold
// constants, and a hard term-by-term thresholder used as the baseline.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "steinblock/core_model.hpp"
#include "steinblock/error.hpp"

namespace steinblock {

/// The root x > 1 of x - ln x = 3 (about 4.50524), by bisection on [3, 10].
inline double solve_lambda_star() {
    const auto f = [](double x) { return x - std::log(x) - 3.0; };
    double lo = 3.0;
    double hi = 10.0;
    // f is increasing on (1, inf): f(3) < 0 < f(10)
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    // one Newton polish; f'(x) = 1 - 1/x
    const double polished = x - f(x) / (1.0 - 1.0 / x);
    if (std::abs(f(polished)) <= std::abs(f(x))) x = polished;
    return x;
}

/// Threshold for correlated Gaussian noise: 4 ((2 Q4)^{1/2} + Q3^{1/4})^2.
inline double lambda_correlated(double q3, double q4) {
    if (!(q3 > 0.0) || !(q4 > 0.0))
        throw Error(ErrorKind::invalid_parameter, "Q3 and Q4 must be positive");
    const double root = std::sqrt(2.0 * q4) + std::pow(q3, 0.25);
    return 4.0 * root * root;
}

struct ShrinkReport {
    std::size_t blocks_total = 0;
    std::size_t blocks_killed = 0;
    std::size_t blocks_shrunk = 0;
    std::size_t blocks_kept_raw = 0;
    std::size_t tail_zeroed = 0;

    ShrinkReport& operator+=(const ShrinkReport& o) {
        blocks_total += o.blocks_total;
        blocks_killed += o.blocks_killed;
        blocks_shrunk += o.blocks_shrunk;
        blocks_kept_raw += o.blocks_kept_raw;
        tail_zeroed += o.tail_zeroed;
        return *this;
    }
};

/// Multiplier (1 - lambda sigma2 inflation / m)_+ for a block whose squared
/// values sum to `sum_sq`.  A zero-energy block maps to 0.
inline double block_gain(double sum_sq, std::size_t cardinality, double sigma2, double lambda, double inflation,
                         BlockEnergy energy = BlockEnergy::mean, std::size_t L = 1, int d = 1) {
    double m = sum_sq / static_cast<double>(cardinality);
    if (energy == BlockEnergy::side_normalized) m *= std::pow(static_cast<double>(L), d - 1);
    if (!(m > 0.0)) return 0.0;
    return std::max(0.0, 1.0 - lambda * sigma2 * inflation / m);
}

/// James-Stein shrinkage of one block.  `sigma2` is the per-coefficient noise
/// variance, `two_pow_delta_j` the threshold inflation 2^{delta j}.
inline std::vector<double> shrink_block(std::span<const double> values, double sigma2, double lambda,
                                        double two_pow_delta_j = 1.0) {
    if (values.empty()) throw Error(ErrorKind::invalid_parameter, "block must be nonempty");
    if (!(sigma2 > 0.0)) throw Error(ErrorKind::invalid_parameter, "sigma2 must be positive");
    if (!(lambda > 0.0)) throw Error(ErrorKind::invalid_parameter, "lambda must be positive");
    double sum_sq = 0.0;
    for (double v : values) sum_sq += v * v;
    const double g = block_gain(sum_sq, values.size(), sigma2, lambda, two_pow_delta_j);
    std::vector<double> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(), [g](double v) { return g * v; });
    return out;
}

struct BlockJsResult {
    CoefficientSet estimate;
    ShrinkReport report;
};

namespace detail {

inline double noise_for(const NoiseScales& scales, SubbandKey key) {
    const auto it = scales.find(key);
    if (it == scales.end())
        throw Error(ErrorKind::missing_noise_scale, "no noise scale for subband (j=" + std::to_string(key.scale) +
                                                        ", l=" + std::to_string(key.orientation) + ")");
    return it->second;
}

}  // namespace detail

/// Multi-dimensional BlockJS:
///   j < j0       -> kept as observed (as is any lowpass band),
///   j0 <= j <= J* -> each block shrunk with sigma2 = noise_scale(j, l)^2,
///   j > J*       -> zero.
inline BlockJsResult blockjs_estimate(const CoefficientSet& y, const FrameSpec& spec, const DenoiseConfig& config) {
    require_valid(spec);
    config.validate();
    if (y.subbands.empty() || y.empty()) throw Error(ErrorKind::empty_coefficients, "nothing to estimate");

    BlockJsResult result{y.zeros_like(CoefficientKind::estimate), {}};
    ShrinkReport& report = result.report;
    const auto L = static_cast<std::size_t>(config.L);

    for (std::size_t s = 0; s < y.subbands.size(); ++s) {
        const Subband& in = y.subbands[s];
        Subband& out = result.estimate.subbands[s];
        if (in.values.empty()) continue;
        const int j = in.scale();
        if (in.is_lowpass() || j < config.j0) {
            out.values = in.values;
            report.blocks_kept_raw += BlockPartition(in.extent, L).block_count();
            continue;
        }
        if (j > config.J_star) {
            report.tail_zeroed += in.size();
            continue;
        }
        const double sigma = detail::noise_for(config.noise_scale, in.key);
        const double sigma2 = sigma * sigma;
        const double inflation = std::exp2(spec.delta * j);
        const BlockPartition partition(in.extent, L);
        partition.for_each_block([&](std::span<const std::size_t>, std::span<const std::size_t> members) {
            double sum_sq = 0.0;
            for (std::size_t m : members) sum_sq += in.values[m] * in.values[m];
            const double g =
                block_gain(sum_sq, members.size(), sigma2, config.lambda, inflation, config.energy, L, spec.d);
            for (std::size_t m : members) out.values[m] = g * in.values[m];
            ++report.blocks_total;
            if (g == 0.0)
                ++report.blocks_killed;
            else if (g < 1.0)
                ++report.blocks_shrunk;
        });
    }
    return result;
}

// ---------------------------------------------------------------------------
// 1D path: coefficients in the usual dyadic layout, y[0] the scaling
// coefficient and y[2^j .. 2^{j+1}) the details at scale j.

inline CoefficientSet dyadic_layout_1d(std::span<const double> y) {
    if (y.size() < 2 || !std::has_single_bit(y.size()))
        throw Error(ErrorKind::layout_mismatch, "1D coefficient vector length must be a power of two >= 2");
    CoefficientSet set{CoefficientKind::observation, {}};
    set.subbands.emplace_back(SubbandKey{0, 0}, std::vector<std::size_t>{1}, std::vector<double>{y[0]});
    for (std::size_t start = 1, j = 0; start < y.size(); start *= 2, ++j) {
        set.subbands.emplace_back(SubbandKey{static_cast<int>(j), 1}, std::vector<std::size_t>{start},
                                  std::vector<double>(y.begin() + start, y.begin() + 2 * start));
    }
    return set;
}

inline std::vector<double> flatten_dyadic_1d(const CoefficientSet& set) {
    std::vector<double> out;
    out.reserve(set.coefficient_count());
    for (const auto& s : set.subbands) out.insert(out.end(), s.values.begin(), s.values.end());
    return out;
}

/// DenoiseConfig of the 1D estimator for sample size n: L = floor(log2 n),
/// lambda = lambda*, sigma = n^{-1/2} on every detail scale in `set`.
inline DenoiseConfig blockjs_1d_config(const CoefficientSet& set, long long n) {
    const FrameSpec spec = presets::wavelet_1d();
    DenoiseConfig cfg;
    cfg.L = theoretical_block_size(n, 1, 1.0);
    const ScaleBounds b = scale_bounds(spec, n, cfg.L);
    cfg.j0 = b.j0;
    cfg.J_star = b.j_star;
    cfg.lambda = solve_lambda_star();
    const double sigma = 1.0 / std::sqrt(static_cast<double>(n));
    for (const auto& s : set.subbands)
        if (!s.is_lowpass()) cfg.noise_scale[s.key] = sigma;
    return cfg;
}

inline std::vector<double> blockjs_1d(std::span<const double> y, long long n) {
    const CoefficientSet set = dyadic_layout_1d(y);
    const auto result = blockjs_estimate(set, presets::wavelet_1d(), blockjs_1d_config(set, n));
    return flatten_dyadic_1d(result.estimate);
}

// ---------------------------------------------------------------------------

enum class TermRule { hard };

struct TermThresholdConfig {
    TermRule rule = TermRule::hard;
    double k = 3.0;
    int j0 = 0;
    /// Multiplier applied instead of k on every subband of the finest scale.
    std::optional<double> finest_k;
};

/// Keeps |y| > k sigma(j, l), zeroes the rest; j < j0 and lowpass untouched.
inline CoefficientSet term_threshold(const CoefficientSet& y, const NoiseScales& noise_scale,
                                     const TermThresholdConfig& cfg = {}) {
    if (!(cfg.k > 0.0)) throw Error(ErrorKind::invalid_parameter, "k must be positive");
    if (y.subbands.empty() || y.empty()) throw Error(ErrorKind::empty_coefficients, "nothing to threshold");
    int finest = std::numeric_limits<int>::min();
    for (const auto& s : y.subbands)
        if (!s.is_lowpass()) finest = std::max(finest, s.scale());

    CoefficientSet out = y;
    out.kind = CoefficientKind::estimate;
    for (auto& s : out.subbands) {
        if (s.is_lowpass() || s.scale() < cfg.j0) continue;
        const double k = (cfg.finest_k && s.scale() == finest) ? *cfg.finest_k : cfg.k;
        const double t = k * detail::noise_for(noise_scale, s.key);
        for (double& v : s.values)
            if (!(std::abs(v) > t)) v = 0.0;
    }
    return out;
}

}  // namespace steinblock
