// Acceptance table: one PASS/FAIL line per criterion, INFO lines for
// context.  Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "steinblock/steinblock.hpp"

using namespace steinblock;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void report(bool pass, const char* name, const std::string& detail) {
    if (!pass) ++failures;
    std::printf("%s  %-28s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
}

void info(const char* name, const std::string& detail) {
    std::printf("INFO  %-28s %s\n", name, detail.c_str());
    std::fflush(stdout);
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Image load(const char* name) {
    return read_pgm(std::filesystem::path(STEINBLOCK_DATA_DIR "/images/") / (std::string(name) + ".pgm"));
}

std::vector<std::uint64_t> seeds10() { return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}; }

// ---------------------------------------------------------------------------

void threshold_constant() {
    const auto t0 = Clock::now();
    const double x = solve_lambda_star();
    const double us = seconds_since(t0) * 1e6;
    report(std::abs(x - 4.50524) <= 1e-5 && us < 1000.0, "threshold-constant",
           fmt("lambda*=%.10f |x-ln x-3|=%.1e time=%.1fus (limit 1e-5, 1ms)", x, std::abs(x - std::log(x) - 3.0), us));
}

void oracle_inequality_fuzz() {
    const auto t0 = Clock::now();
    std::mt19937_64 gen(20240101);
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
    const double s = seconds_since(t0);
    report(violations == 0 && s < 10.0, "oracle-inequality-fuzz",
           fmt("1e5 instances, %d violations, %.2fs (limit 10s)", violations, s));
}

void risk_bound_grid() {
    const auto t0 = Clock::now();
    int bad = 0;
    double worst = -1e300;
    std::uint64_t cell = 0;
    for (std::size_t m : {1u, 4u, 16u}) {
        for (double gamma : {1.5, 2.5, solve_lambda_star()}) {
            for (double rel : {0.0, 0.5, 4.0}) {  // ||v||^2 / (sigma^2 m)
                const double sigma = 1.0;
                const std::vector<double> v(m, sigma * std::sqrt(rel));
                const auto r = check_lemma_bp(m, gamma, sigma, v, 100000, 7000 + cell++);
                if (!r.holds) ++bad;
                worst = std::max(worst, (r.estimate - 3 * r.ci_halfwidth) / r.bound);
            }
        }
    }
    const double s = seconds_since(t0);
    report(bad == 0 && s < 120.0, "risk-bound-grid",
           fmt("27 settings x 1e5 trials, %d failing, max (est-3ci)/bound=%.3f, %.2fs (limit 120s)", bad, worst, s));
}

void transform_correctness() {
    const auto t0 = Clock::now();
    double worst_pr = 0.0, worst_parseval = 0.0, worst_udwt_pr = 0.0;
    std::mt19937_64 gen(99);
    std::normal_distribution<double> normal(128.0, 50.0);
    for (std::size_t n : {32u, 64u, 128u}) {
        const int levels = std::bit_width(n) - 3;
        const auto dwt = make_transform(TransformKind::dwt2, levels);
        const auto udwt = make_transform(TransformKind::udwt2, levels);
        for (int k = 0; k < 200; ++k) {
            Image img(n, n);
            for (double& p : img.pixels) p = normal(gen);
            double e_img = 0.0, e_coef = 0.0;
            for (double p : img.pixels) e_img += p * p;
            const auto c = forward(img, dwt);
            for (const auto& s : c.subbands)
                for (double v : s.values) e_coef += v * v;
            worst_parseval = std::max(worst_parseval, std::abs(e_coef / e_img - 1.0));
            const Image back = inverse(c, dwt);
            const Image back_u = inverse(forward(img, udwt), udwt);
            for (std::size_t i = 0; i < img.size(); ++i) {
                worst_pr = std::max(worst_pr, std::abs(back.pixels[i] - img.pixels[i]));
                worst_udwt_pr = std::max(worst_udwt_pr, std::abs(back_u.pixels[i] - img.pixels[i]));
            }
        }
    }
    const double s = seconds_since(t0);
    report(worst_pr <= 1e-9 && worst_udwt_pr <= 1e-9 && worst_parseval <= 1e-9 && s < 30.0, "transform-correctness",
           fmt("600 images: PR dwt2 %.1e, udwt2 %.1e; Parseval %.1e; %.2fs (limits 1e-9, 30s)", worst_pr,
               worst_udwt_pr, worst_parseval, s));
}

void rate_1d() {
    const auto t0 = Clock::now();
    SmoothnessBall ball{1.0, 2.0, 2.0, 1.0, presets::wavelet_1d()};
    std::vector<long long> ns;
    for (int k = 10; k <= 16; ++k) ns.push_back(1LL << k);
    const auto r = simulate_mise(ball, ns, 20, 2009);
    const double s = seconds_since(t0);
    report(r.fit.slope >= -0.82 && r.fit.slope <= -0.52 && s < 300.0, "rate-1d",
           fmt("s=1 slope=%.3f (target -0.667, window [-0.82,-0.52]) r2=%.3f, %.1fs (limit 300s)", r.fit.slope,
               r.fit.r2, s));
}

// ---------------------------------------------------------------------------

struct SweepOutcome {
    std::vector<double> mean;         // per L
    std::vector<int> per_seed_argmax;  // index into Ls
};

const std::vector<int> kLs{1, 2, 4, 8, 16};

SweepOutcome sweep_l(const Image& img, BlockEnergy energy) {
    SweepGrid grid{{20.0}, kLs, {4.5}, seeds10()};
    grid.energy = energy;
    const auto rows = run_sweep(img, "img", grid);
    SweepOutcome out;
    out.mean.assign(kLs.size(), 0.0);
    const std::size_t nseed = grid.seeds.size();
    for (std::size_t seed = 0; seed < nseed; ++seed) {
        std::size_t best = 0;
        for (std::size_t l = 0; l < kLs.size(); ++l) {
            const double p = rows[l * nseed + seed].psnr_out;
            out.mean[l] += p / static_cast<double>(nseed);
            if (p > rows[best * nseed + seed].psnr_out) best = l;
        }
        out.per_seed_argmax.push_back(static_cast<int>(best));
    }
    return out;
}

std::string describe(const SweepOutcome& s) {
    std::string d;
    for (std::size_t l = 0; l < kLs.size(); ++l) d += fmt("L=%d:%.2f ", kLs[l], s.mean[l]);
    const auto at4 = std::count(s.per_seed_argmax.begin(), s.per_seed_argmax.end(), 2);
    return d + fmt("| seeds with argmax L=4: %d/10", static_cast<int>(at4));
}

std::size_t argmax(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void sweep_shape(const Image& img) {
    const auto t0 = Clock::now();
    const auto mean = sweep_l(img, BlockEnergy::mean);
    const double s = seconds_since(t0);
    report(kLs[argmax(mean.mean)] == 4 && s < 180.0, "sweep-argmax-L4",
           fmt("barbara sigma=20 dwt2 lambda=4.5, argmax L=%d; %s; %.1fs", kLs[argmax(mean.mean)],
               describe(mean).c_str(), s));
    const auto side = sweep_l(img, BlockEnergy::side_normalized);
    info("sweep-argmax-L4 [side]", fmt("side-normalized energy: argmax L=%d; %s", kLs[argmax(side.mean)],
                                       describe(side).c_str()));
}

struct Cell {
    double block = 0.0, term = 0.0;
};

// Mean PSNR over seeds of block (theoretical L, lambda*) and 3 sigma hard
// thresholding, both on DWT coefficients of the same noisy images.
Cell block_vs_term_dwt(const Image& img, double sigma, BlockEnergy energy) {
    const auto t = make_transform(TransformKind::dwt2, default_levels(img.width, img.height));
    const auto unit = unit_noise_scales(t, img.width, img.height);
    const auto seeds = seeds10();
    std::vector<Cell> per(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t k) {
        const Image noisy = add_noise(img, sigma, seeds[k]);
        DenoiseOverrides o;
        o.sigma = sigma;
        o.energy = energy;
        const auto r = denoise_image(noisy, t, presets::wavelet_2d(), o, &img);
        per[k].block = r.record.psnr_out;
        per[k].term = psnr(img, term_denoise_image(noisy, t, sigma, unit, 3.0, std::nullopt, r.config.j0));
    });
    Cell c;
    for (const auto& p : per) {
        c.block += p.block / static_cast<double>(per.size());
        c.term += p.term / static_cast<double>(per.size());
    }
    return c;
}

void barbara_anchor(const Image& img) {
    const Cell c = block_vs_term_dwt(img, 20.0, BlockEnergy::mean);
    info("barbara-absolute", fmt("block-DWT %.2f dB vs published 28.04 +- 0.6 (image source differs; not scored)",
                                 c.block));
    report(c.block - c.term >= 0.5, "barbara-block-over-term",
           fmt("sigma=20: block-DWT %.2f dB, 3sigma term-DWT %.2f dB, gain %+.2f dB (need >= +0.5)", c.block, c.term,
               c.block - c.term));
    const Cell side = block_vs_term_dwt(img, 20.0, BlockEnergy::side_normalized);
    info("barbara [side]", fmt("side-normalized block-DWT %.2f dB, gain over term %+.2f dB, |diff to 28.04|=%.2f",
                               side.block, side.block - side.term, std::abs(side.block - 28.04)));
}

void block_vs_term_direction(const std::vector<std::pair<const char*, Image>>& images) {
    for (BlockEnergy energy : {BlockEnergy::mean, BlockEnergy::side_normalized}) {
        int wins = 0, cells = 0;
        std::string d;
        for (const auto& [name, img] : images) {
            for (double sigma : {10.0, 20.0, 30.0}) {
                const Cell c = block_vs_term_dwt(img, sigma, energy);
                ++cells;
                if (c.block >= c.term) ++wins;
                d += fmt("%s/%g:%+.2f ", name, sigma, c.block - c.term);
            }
        }
        if (energy == BlockEnergy::mean)
            report(wins >= 8, "block-vs-term-direction", fmt("block >= term in %d/%d cells (need 8): %s", wins, cells,
                                                             d.c_str()));
        else
            info("block-vs-term [side]", fmt("side-normalized: %d/%d cells: %s", wins, cells, d.c_str()));
    }
}

}  // namespace

int main() {
    std::printf("acceptance (threads=%u)\n", worker_count());
    threshold_constant();
    oracle_inequality_fuzz();
    risk_bound_grid();
    transform_correctness();
    rate_1d();

    const Image barbara = load("barbara");
    sweep_shape(barbara);
    barbara_anchor(barbara);
    block_vs_term_direction({{"barbara", barbara}, {"ascent", load("ascent")}, {"camera", load("camera")}});

    std::printf("%d criterion(s) failing\n", failures);
    return failures == 0 ? 0 : 1;
}
