#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "steinblock/sequence_lab.hpp"

using namespace steinblock;

TEST(OracleInequality, ZeroSignal) {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> normal;
    for (int t = 0; t < 1000; ++t) {
        OracleInstance inst;
        inst.v.assign(8, 0.0);
        for (int i = 0; i < 8; ++i) inst.w.push_back(normal(gen));
        inst.lambda = 0.5 + t % 7;
        EXPECT_TRUE(check_lemma_mal(inst).holds);
    }
}

TEST(OracleInequality, HandExample) {
    OracleInstance inst;
    inst.v = {10, 0, 0};
    inst.w = {0, 0, 0};
    inst.lambda = 2.0;
    const auto r = check_lemma_mal(inst);
    EXPECT_NEAR(r.lhs, 0.16, 1e-12);
    EXPECT_DOUBLE_EQ(r.rhs, 10.0);
    EXPECT_TRUE(r.holds);
}

TEST(OracleInequality, ZeroBlockIsKilled) {
    OracleInstance inst;
    inst.v = {1, -1};
    inst.w = {-1, 1};
    inst.lambda = 1.0;
    const auto r = check_lemma_mal(inst);
    EXPECT_DOUBLE_EQ(r.lhs, 2.0);
    EXPECT_TRUE(r.holds);
}

TEST(OracleInequality, Fuzz) {
    std::mt19937_64 gen(2024);
    std::uniform_int_distribution<int> len(1, 64);
    std::uniform_real_distribution<double> val(-10.0, 10.0), lam(0.0, 20.0);
    int violations = 0;
    for (int t = 0; t < 100000; ++t) {
        OracleInstance inst;
        const int m = len(gen);
        for (int i = 0; i < m; ++i) {
            inst.v.push_back(val(gen));
            inst.w.push_back(val(gen));
        }
        inst.lambda = std::max(1e-9, lam(gen));
        if (!check_lemma_mal(inst).holds) ++violations;
    }
    EXPECT_EQ(violations, 0);
}

TEST(OracleInequality, Rejects) {
    OracleInstance inst;
    EXPECT_THROW(check_lemma_mal(inst), Error);
    inst.v = {1};
    inst.w = {1, 2};
    EXPECT_THROW(check_lemma_mal(inst), Error);
}

TEST(BlockRiskBound, PureNoiseBlocksAreKilled) {
    const std::vector<double> v(16, 0.0);
    const auto r = check_lemma_bp(16, 4.50524, 1.0, v, 100000, 3);
    EXPECT_TRUE(r.holds);
    EXPECT_LT(r.estimate, 1e-3);
    EXPECT_LE(r.estimate, r.bound);
}

TEST(BlockRiskBound, Homogeneity) {
    const std::vector<double> v{0.5, -1.0, 2.0, 0.0};
    std::vector<double> cv;
    for (double x : v) cv.push_back(3.0 * x);
    const auto a = check_lemma_bp(4, 2.5, 1.0, v, 20000, 9);
    const auto b = check_lemma_bp(4, 2.5, 3.0, cv, 20000, 9);
    EXPECT_NEAR(b.estimate, 9.0 * a.estimate, 1e-9 * b.estimate);
    EXPECT_NEAR(b.bound, 9.0 * a.bound, 1e-9 * b.bound);
}

TEST(BlockRiskBound, LargeSignalSingleton) {
    const std::vector<double> v{100.0};
    const auto r = check_lemma_bp(1, 2.0, 1.0, v, 100000, 4);
    EXPECT_NEAR(r.bound, 2.0 + 2.0 / std::sqrt(std::numbers::pi) * std::exp(-0.5 * (1.0 - std::log(2.0))), 1e-12);
    EXPECT_NEAR(r.estimate, 1.0, 0.05);
    EXPECT_TRUE(r.holds);
}

TEST(BlockRiskBound, Grid) {
    for (std::size_t m : {1u, 4u, 16u}) {
        for (double gamma : {1.5, 2.5, 4.50524}) {
            for (double rel : {0.0, 0.5, 4.0}) {  // ||v||^2 / (sigma^2 m)
                const double sigma = 2.0;
                std::vector<double> v(m, sigma * std::sqrt(rel));
                const auto r = check_lemma_bp(m, gamma, sigma, v, 10000, m * 100 + static_cast<std::uint64_t>(gamma * 10));
                EXPECT_TRUE(r.holds) << "m=" << m << " gamma=" << gamma << " rel=" << rel << " est=" << r.estimate
                                     << " bound=" << r.bound;
            }
        }
    }
}

TEST(BlockRiskBound, Rejects) {
    const std::vector<double> v{1.0};
    EXPECT_THROW(check_lemma_bp(1, 1.0, 1.0, v, 10000, 1), Error);
    EXPECT_THROW(check_lemma_bp(1, 2.0, 0.0, v, 10000, 1), Error);
    EXPECT_THROW(check_lemma_bp(1, 2.0, 1.0, v, 9999, 1), Error);
    EXPECT_THROW(check_lemma_bp(2, 2.0, 1.0, v, 10000, 1), Error);
}

TEST(Ball, SamplesLieInside) {
    for (double p : {1.0, 2.0, std::numeric_limits<double>::infinity()}) {
        for (double q : {0.5, 2.0, std::numeric_limits<double>::infinity()}) {
            for (const auto& spec : {presets::wavelet_1d(), presets::wavelet_2d(), presets::curvelet_2d()}) {
                SmoothnessBall ball{1.5, p, q, 3.0, spec};
                for (std::uint64_t seed = 0; seed < 5; ++seed) {
                    const auto theta = sample_ball(ball, spec.d == 1 ? 10 : 6, seed);
                    const double norm = ball_norm(theta, ball);
                    EXPECT_LE(norm, 3.0);
                    EXPECT_GE(norm, 1.5 * (1 - 1e-9));
                }
            }
        }
    }
}

TEST(Ball, SmoothSamplesConcentrateOnCoarseScales) {
    SmoothnessBall ball{10.0, 2.0, 2.0, 1.0, presets::wavelet_1d()};
    const int J = 12;
    const auto theta = sample_ball(ball, J, 5);
    double total = 0.0, finest = 0.0;
    for (const auto& sb : theta.subbands) {
        for (double v : sb.values) {
            total += v * v;
            if (sb.scale() == J) finest += v * v;
        }
    }
    EXPECT_LT(finest / total, 1e-3);
}

TEST(Ball, ZeroRadius) {
    SmoothnessBall ball{1.0, 2.0, 2.0, 0.0, presets::wavelet_1d()};
    for (const auto& sb : sample_ball(ball, 8, 1).subbands)
        for (double v : sb.values) EXPECT_EQ(v, 0.0);
}

TEST(Ball, LayoutFollowsFrame) {
    const auto c = sequence_layout(presets::curvelet_2d(), 4);
    std::size_t at4 = 0;
    for (const auto& sb : c.subbands) {
        if (sb.scale() != 4) continue;
        ++at4;
        EXPECT_EQ(sb.extent, (std::vector<std::size_t>{16, 4}));
    }
    EXPECT_EQ(at4, 64u);  // floor(16 * 2^{4/2})
}

TEST(FitRate, Examples) {
    std::vector<double> ns{64, 256, 1024, 4096}, ms;
    for (double n : ns) ms.push_back(7.0 * std::pow(n, -2.0 / 3.0));
    auto f = fit_rate(ns, ms);
    EXPECT_NEAR(f.slope, -2.0 / 3.0, 1e-12);
    EXPECT_NEAR(f.intercept, std::log(7.0), 1e-10);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);

    const std::vector<double> flat(4, 0.2);
    EXPECT_NEAR(fit_rate(ns, flat).slope, 0.0, 1e-15);

    const std::vector<double> two{1, 2};
    EXPECT_THROW(fit_rate(two, two), Error);
    const std::vector<double> bad{1, -2, 3};
    EXPECT_THROW(fit_rate(std::span<const double>(ns).first(3), bad), Error);
}

TEST(Simulation, ZeroSignalIsParametric) {
    SmoothnessBall ball{1.0, 2.0, 2.0, 0.0, presets::wavelet_1d()};
    const std::vector<long long> ns{1 << 8, 1 << 10, 1 << 12, 1 << 14};
    const auto r = simulate_mise(ball, ns, 10, 17);
    EXPECT_NEAR(r.fit.slope, -1.0, 0.15);
}

TEST(Simulation, LargerBallHasLargerRisk) {
    const std::vector<long long> ns{1 << 8, 1 << 9, 1 << 10};
    SmoothnessBall small{1.0, 2.0, 2.0, 1.0, presets::wavelet_1d()};
    SmoothnessBall big = small;
    big.M = 2.0;
    const auto a = simulate_mise(small, ns, 20, 31);
    const auto b = simulate_mise(big, ns, 20, 31);
    for (std::size_t i = 0; i < ns.size(); ++i) EXPECT_GT(b.fit.mises[i], a.fit.mises[i]);
}

TEST(Simulation, DeterministicAcrossThreadCounts) {
    SmoothnessBall ball{1.0, 2.0, 2.0, 1.0, presets::wavelet_1d()};
    const std::vector<long long> ns{64, 128, 256};
    const auto a = simulate_mise(ball, ns, 5, 3);
    setenv("STEINBLOCK_THREADS", "1", 1);
    const auto b = simulate_mise(ball, ns, 5, 3);
    unsetenv("STEINBLOCK_THREADS");
    ASSERT_EQ(a.runs.size(), b.runs.size());
    for (std::size_t i = 0; i < a.runs.size(); ++i) EXPECT_EQ(a.runs[i].mise, b.runs[i].mise);

    std::ostringstream csv1, csv2;
    write_mise_csv(csv1, a.runs);
    write_mise_csv(csv2, b.runs);
    EXPECT_EQ(csv1.str(), csv2.str());
    EXPECT_EQ(csv1.str().substr(0, 11), "n,rep,mise\n");
}

TEST(Simulation, Rejects) {
    SmoothnessBall ball;
    const std::vector<long long> ok{64, 128, 256}, unsorted{128, 64, 256}, small{32, 64, 128};
    EXPECT_THROW(simulate_mise(ball, ok, 4, 1), Error);
    EXPECT_THROW(simulate_mise(ball, unsorted, 5, 1), Error);
    EXPECT_THROW(simulate_mise(ball, small, 5, 1), Error);
}

// With lambda huge every active block dies: the loss is the raw noise on
// the pass-through scales plus all signal energy from j0 on.
TEST(Simulation, HugeLambdaKillsEverything) {
    SmoothnessBall ball{1.0, 2.0, 2.0, 1.0, presets::wavelet_1d()};
    const FrameSpec spec = ball.spec;
    const long long n = 1024;
    const auto theta = sample_ball(ball, 12, 8);
    const int L = theoretical_block_size(n, 1, 1.0);
    const int j0 = scale_bounds(spec, n, L).j0;

    std::mt19937_64 gen(99), replay(99);
    SimulationOptions opts;
    opts.lambda = 1e6;
    const double loss = blockjs_loss(theta, spec, n, gen, opts);

    std::normal_distribution<double> normal;
    const double noise = 1.0 / std::sqrt(static_cast<double>(n));
    double expected = 0.0;
    for (const auto& sb : theta.subbands) {
        for (double v : sb.values) {
            const double z = noise * normal(replay);
            expected += sb.scale() < j0 ? z * z : v * v;
        }
    }
    EXPECT_NEAR(loss, expected, 1e-12 * (1.0 + expected));
}
