#pragma once

// Numerical laboratory for the sequence model: the deterministic block
// oracle inequality, the Gaussian expected-risk bound, smoothness-ball
// sampling and Monte Carlo rate fits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "steinblock/core_model.hpp"
#include "steinblock/csv.hpp"
#include "steinblock/error.hpp"
#include "steinblock/parallel.hpp"
#include "steinblock/random.hpp"
#include "steinblock/shrinkage.hpp"

namespace steinblock {

struct OracleInstance {
    std::vector<double> v;
    std::vector<double> w;
    double lambda = 1.0;
    double gamma = 2.0;  // expected-risk check only
    double sigma = 1.0;  // expected-risk check only

    std::size_t m() const { return v.size(); }
};

struct InequalityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// Block shrink u (1 - lambda^2 / sum u^2)_+ with u = v + w, compared with
///   10 sum w^2 1{|w| > lambda/2} + 10 min(sum v^2, lambda^2/4).
/// A zero block (sum u^2 = 0) is estimated by zero.
inline InequalityCheck check_lemma_mal(const OracleInstance& inst) {
    if (inst.v.empty() || inst.v.size() != inst.w.size())
        throw Error(ErrorKind::invalid_parameter, "v and w must be nonempty and of equal length");
    if (!(inst.lambda > 0.0)) throw Error(ErrorKind::invalid_parameter, "lambda must be positive");
    const std::size_t m = inst.m();
    double sum_u2 = 0.0, sum_v2 = 0.0, sum_w2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double u = inst.v[i] + inst.w[i];
        sum_u2 += u * u;
        sum_v2 += inst.v[i] * inst.v[i];
        sum_w2 += inst.w[i] * inst.w[i];
    }
    const double lambda2 = inst.lambda * inst.lambda;
    const double factor = sum_u2 > 0.0 ? std::max(0.0, 1.0 - lambda2 / sum_u2) : 0.0;
    InequalityCheck out;
    for (std::size_t i = 0; i < m; ++i) {
        const double diff = factor * (inst.v[i] + inst.w[i]) - inst.v[i];
        out.lhs += diff * diff;
    }
    const double noise_term = std::sqrt(sum_w2) > inst.lambda / 2.0 ? sum_w2 : 0.0;
    out.rhs = 10.0 * noise_term + 10.0 * std::min(sum_v2, lambda2 / 4.0);
    out.holds = out.lhs <= out.rhs + 1e-12 * (1.0 + out.rhs);
    return out;
}

struct RiskBoundCheck {
    double estimate = 0.0;
    double ci_halfwidth = 0.0;  // 95% normal interval
    double bound = 0.0;
    bool holds = false;
};

/// Right-hand side of the Gaussian block-risk bound:
///   2 sigma^2 pi^{-1/2} (gamma-1)^{-1} m^{-1/2} e^{-(m/2)(gamma - log gamma - 1)}
///   + gamma min(sum v^2, sigma^2 m).
inline double lemma_bp_bound(std::size_t m, double gamma, double sigma, std::span<const double> v) {
    double sum_v2 = 0.0;
    for (double x : v) sum_v2 += x * x;
    const double md = static_cast<double>(m);
    const double s2 = sigma * sigma;
    const double tail = 2.0 * s2 / std::sqrt(std::numbers::pi) / (gamma - 1.0) / std::sqrt(md) *
                        std::exp(-(md / 2.0) * (gamma - std::log(gamma) - 1.0));
    return tail + gamma * std::min(sum_v2, s2 * md);
}

/// Monte Carlo estimate of E sum (u~ - v)^2 for u = v + sigma w, w ~ N(0, I),
/// u~ = u (1 - gamma m sigma^2 / sum u^2)_+.
inline RiskBoundCheck check_lemma_bp(std::size_t m, double gamma, double sigma, std::span<const double> v,
                                     long long trials, std::uint64_t seed) {
    if (m == 0 || v.size() != m) throw Error(ErrorKind::invalid_parameter, "v must have m entries");
    if (!(gamma > 1.0)) throw Error(ErrorKind::invalid_parameter, "gamma must exceed 1");
    if (sigma == 0.0 || !std::isfinite(sigma)) throw Error(ErrorKind::invalid_parameter, "sigma must be nonzero");
    if (trials < 10000) throw Error(ErrorKind::invalid_parameter, "need at least 1e4 trials");

    constexpr long long chunk = 4096;
    const std::size_t chunks = static_cast<std::size_t>((trials + chunk - 1) / chunk);
    std::vector<double> sums(chunks), sq_sums(chunks);
    const double threshold = gamma * static_cast<double>(m) * sigma * sigma;
    parallel_for(chunks, [&](std::size_t c) {
        auto gen = substream(seed, {0x6270ULL, c});
        std::normal_distribution<double> normal;
        std::vector<double> u(m);
        const long long begin = static_cast<long long>(c) * chunk;
        const long long end = std::min(trials, begin + chunk);
        double s = 0.0, s2 = 0.0;
        for (long long t = begin; t < end; ++t) {
            double sum_u2 = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                u[i] = v[i] + sigma * normal(gen);
                sum_u2 += u[i] * u[i];
            }
            const double factor = sum_u2 > 0.0 ? std::max(0.0, 1.0 - threshold / sum_u2) : 0.0;
            double loss = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double diff = factor * u[i] - v[i];
                loss += diff * diff;
            }
            s += loss;
            s2 += loss * loss;
        }
        sums[c] = s;
        sq_sums[c] = s2;
    });
    double total = 0.0, total_sq = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        total += sums[c];
        total_sq += sq_sums[c];
    }
    const double n = static_cast<double>(trials);
    RiskBoundCheck out;
    out.estimate = total / n;
    const double var = std::max(0.0, (total_sq - n * out.estimate * out.estimate) / (n - 1.0));
    out.ci_halfwidth = 1.96 * std::sqrt(var / n);
    out.bound = lemma_bp_bound(m, gamma, sigma, v);
    out.holds = out.estimate - 3.0 * out.ci_halfwidth <= out.bound;
    return out;
}

// ---------------------------------------------------------------------------

/// Coefficient ball of radius M with smoothness s and norm exponents p, q
/// (either may be +infinity).
struct SmoothnessBall {
    double s = 1.0;
    double p = 2.0;
    double q = 2.0;
    double M = 1.0;
    FrameSpec spec = presets::wavelet_1d();
};

/// Scales 0..J, floor(c* 2^{upsilon j}) subbands each, extent floor(2^{mu_i j})
/// per axis.
inline CoefficientSet sequence_layout(const FrameSpec& spec, int J) {
    require_valid(spec);
    if (J < 0) throw Error(ErrorKind::invalid_parameter, "scale cap must be >= 0");
    CoefficientSet set{CoefficientKind::truth, {}};
    for (int j = 0; j <= J; ++j) {
        std::vector<std::size_t> extent;
        for (double mu : spec.mu)
            extent.push_back(static_cast<std::size_t>(std::max(1.0, std::floor(std::exp2(mu * j) + 1e-9))));
        const std::size_t bands = spec.max_subbands(j);
        for (std::size_t l = 1; l <= bands; ++l) set.subbands.emplace_back(SubbandKey{j, static_cast<int>(l)}, extent);
    }
    return set;
}

/// ( sum_j sum_l (2^{j(s + d*/2 - d*/p)} ||theta_{j,l}||_p)^q )^{1/q}.
inline double ball_norm(const CoefficientSet& theta, const SmoothnessBall& ball) {
    const double dstar = ball.spec.d_star();
    const bool p_inf = std::isinf(ball.p);
    const bool q_inf = std::isinf(ball.q);
    double acc = 0.0;
    for (const auto& sb : theta.subbands) {
        double norm = 0.0;
        if (p_inf) {
            for (double v : sb.values) norm = std::max(norm, std::abs(v));
        } else {
            for (double v : sb.values) norm += std::pow(std::abs(v), ball.p);
            norm = std::pow(norm, 1.0 / ball.p);
        }
        const double exponent = ball.s + dstar / 2.0 - (p_inf ? 0.0 : dstar / ball.p);
        const double term = std::exp2(sb.scale() * exponent) * norm;
        if (q_inf)
            acc = std::max(acc, term);
        else
            acc += std::pow(term, ball.q);
    }
    return q_inf ? acc : std::pow(acc, 1.0 / ball.q);
}

/// Gaussian coefficients with per-scale decay 2^{-j(s + d*/2)}, rescaled so
/// the ball norm equals M u for u uniform on [0.5, 1).
inline CoefficientSet sample_ball(const SmoothnessBall& ball, int J, std::uint64_t seed) {
    if (!(ball.s > 0.0) || !(ball.p > 0.0) || !(ball.q > 0.0) || ball.M < 0.0)
        throw Error(ErrorKind::invalid_parameter, "ball needs s, p, q > 0 and M >= 0");
    CoefficientSet theta = sequence_layout(ball.spec, J);
    if (ball.M == 0.0) return theta;
    auto gen = substream(seed, {0x62616c6cULL});
    std::normal_distribution<double> normal;
    const double decay = ball.s + ball.spec.d_star() / 2.0;
    for (auto& sb : theta.subbands) {
        const double scale = std::exp2(-sb.scale() * decay);
        for (double& v : sb.values) v = scale * normal(gen);
    }
    const double norm = ball_norm(theta, ball);
    if (!(norm > 0.0)) return theta.zeros_like(CoefficientKind::truth);
    const double u = std::uniform_real_distribution<double>(0.5, 1.0)(gen);
    double factor = ball.M * u / norm;
    for (int attempt = 0; attempt < 4; ++attempt) {
        CoefficientSet scaled = theta;
        for (auto& sb : scaled.subbands)
            for (double& v : sb.values) v *= factor;
        if (ball_norm(scaled, ball) <= ball.M) return scaled;
        factor *= 1.0 - 1e-12;
    }
    throw Error(ErrorKind::invalid_parameter, "could not place sample inside the ball");
}

// ---------------------------------------------------------------------------

struct RateFit {
    std::vector<double> ns;
    std::vector<double> mises;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Ordinary least squares of log MISE on log n.
inline RateFit fit_rate(std::span<const double> ns, std::span<const double> mises) {
    if (ns.size() != mises.size()) throw Error(ErrorKind::invalid_parameter, "ns and mises differ in length");
    if (ns.size() < 3) throw Error(ErrorKind::invalid_parameter, "rate fit needs at least 3 points");
    for (std::size_t i = 0; i < ns.size(); ++i)
        if (!(ns[i] > 0.0) || !(mises[i] > 0.0))
            throw Error(ErrorKind::invalid_parameter, "rate fit needs positive n and MISE values");
    const double k = static_cast<double>(ns.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        mx += std::log(ns[i]);
        my += std::log(mises[i]);
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const double dx = std::log(ns[i]) - mx;
        const double dy = std::log(mises[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw Error(ErrorKind::invalid_parameter, "rate fit needs distinct n values");
    RateFit fit;
    fit.ns.assign(ns.begin(), ns.end());
    fit.mises.assign(mises.begin(), mises.end());
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    const double ss_res = std::max(0.0, syy - fit.slope * sxy);
    fit.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return fit;
}

struct MiseRecord {
    long long n = 0;
    int rep = 0;
    double mise = 0.0;
};

struct SimulationOptions {
    /// Finest sampled scale; -1 picks J*(max n) + 2.
    int scale_cap = -1;
    /// Overrides lambda* when set (used for limit checks).
    std::optional<double> lambda;
    BlockEnergy energy = BlockEnergy::mean;
};

struct SimulationResult {
    std::vector<MiseRecord> runs;
    RateFit fit;
};

/// Squared error sum (theta_hat - theta)^2 of BlockJS on one draw
/// y = theta + n^{-r/2} z.
inline double blockjs_loss(const CoefficientSet& theta, const FrameSpec& spec, long long n, std::mt19937_64& gen,
                           const SimulationOptions& opts = {}) {
    const double noise = std::pow(static_cast<double>(n), -spec.r / 2.0);
    CoefficientSet y = theta;
    y.kind = CoefficientKind::observation;
    std::normal_distribution<double> normal;
    for (auto& sb : y.subbands)
        for (double& v : sb.values) v += noise * normal(gen);

    DenoiseConfig cfg;
    cfg.L = theoretical_block_size(n, spec.d, spec.r);
    const ScaleBounds b = scale_bounds(spec, n, cfg.L);
    cfg.j0 = b.j0;
    cfg.J_star = b.j_star;
    cfg.lambda = opts.lambda.value_or(solve_lambda_star());
    cfg.energy = opts.energy;
    for (const auto& sb : y.subbands) cfg.noise_scale[sb.key] = noise;

    const auto est = blockjs_estimate(y, spec, cfg);
    double loss = 0.0;
    for (std::size_t s = 0; s < theta.subbands.size(); ++s) {
        const auto& a = est.estimate.subbands[s].values;
        const auto& t = theta.subbands[s].values;
        for (std::size_t i = 0; i < t.size(); ++i) loss += (a[i] - t[i]) * (a[i] - t[i]);
    }
    return loss;
}

/// Monte Carlo MISE of BlockJS over the ball for every n, then the log-log
/// slope.  Rep r draws the same theta for every n; the noise of (n, r) comes
/// from its own substream.
inline SimulationResult simulate_mise(const SmoothnessBall& ball, std::span<const long long> n_list, int reps,
                                      std::uint64_t seed, const SimulationOptions& opts = {}) {
    require_valid(ball.spec);
    if (n_list.size() < 3) throw Error(ErrorKind::invalid_parameter, "need at least 3 sample sizes");
    if (reps < 5) throw Error(ErrorKind::invalid_parameter, "need at least 5 replications");
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        if (n_list[i] < 64) throw Error(ErrorKind::invalid_parameter, "sample sizes must be >= 64");
        if (i > 0 && n_list[i] <= n_list[i - 1])
            throw Error(ErrorKind::invalid_parameter, "sample sizes must be strictly increasing");
    }
    int cap = opts.scale_cap;
    if (cap < 0) {
        const int L = theoretical_block_size(n_list.back(), ball.spec.d, ball.spec.r);
        cap = scale_bounds(ball.spec, n_list.back(), L).j_star + 2;
    }

    const std::size_t reps_u = static_cast<std::size_t>(reps);
    SimulationResult result;
    result.runs.resize(n_list.size() * reps_u);
    parallel_for(result.runs.size(), [&](std::size_t task) {
        const std::size_t ni = task / reps_u;
        const std::size_t rep = task % reps_u;
        const CoefficientSet theta = sample_ball(ball, cap, splitmix64(seed ^ splitmix64(rep + 1)));
        auto gen = substream(seed, {static_cast<std::uint64_t>(n_list[ni]), rep});
        result.runs[task] = {n_list[ni], static_cast<int>(rep), blockjs_loss(theta, ball.spec, n_list[ni], gen, opts)};
    });

    std::vector<double> ns, mises;
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
        double acc = 0.0;
        for (std::size_t rep = 0; rep < reps_u; ++rep) acc += result.runs[ni * reps_u + rep].mise;
        ns.push_back(static_cast<double>(n_list[ni]));
        mises.push_back(acc / static_cast<double>(reps));
    }
    result.fit = fit_rate(ns, mises);
    return result;
}

inline void write_mise_csv(std::ostream& os, std::span<const MiseRecord> runs) {
    os << "n,rep,mise\n";
    for (const auto& r : runs) csv::row(os, {std::to_string(r.n), std::to_string(r.rep), csv::number(r.mise)});
}

inline void write_fit_csv(std::ostream& os, const RateFit& fit) {
    os << "slope,intercept,r2\n";
    csv::row(os, {csv::number(fit.slope), csv::number(fit.intercept), csv::number(fit.r2)});
}

}  // namespace steinblock
