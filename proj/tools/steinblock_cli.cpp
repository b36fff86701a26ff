// steinblock: block-thresholding denoiser and experiment driver.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "steinblock/steinblock.hpp"

namespace fs = std::filesystem;
using namespace steinblock;

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io_error, "cannot write " + path.string());
    return out;
}

FrameSpec preset_named(const std::string& name, double delta) {
    FrameSpec spec = name == "curvelet" ? presets::curvelet_2d() : presets::wavelet_2d();
    spec.delta = delta;
    return spec;
}

BlockEnergy energy_named(const std::string& name) {
    return name == "side" ? BlockEnergy::side_normalized : BlockEnergy::mean;
}

std::vector<std::uint64_t> seed_list(std::uint64_t first, int reps) {
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < reps; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
    return seeds;
}

std::string image_id(const fs::path& p) { return p.stem().string(); }

struct DenoiseArgs {
    fs::path in, out, reference;
    std::string transform = "dwt2", preset = "wavelet", energy = "mean";
    int levels = 0;
    std::optional<double> sigma, lambda, add_noise;
    std::optional<int> block_size;
    std::optional<long long> n;
    double delta = 0.0;
    std::uint64_t seed = 0;
};

int run_denoise(const DenoiseArgs& a) {
    const FrameSpec spec = preset_named(a.preset, a.delta);
    const TransformKind kind = parse_transform_kind(a.transform);

    if (kind == TransformKind::external) {
        // External frames are assumed tight: every subband carries noise sigma.
        if (!a.sigma) throw Error(ErrorKind::invalid_parameter, "--sigma is required for external coefficients");
        const CoefficientSet y = load_external_coefficients(a.in, spec);
        // side length: given, or one past the finest scale index present
        long long n = a.n.value_or(0);
        if (n == 0) {
            int finest = 0;
            for (const auto& s : y.subbands) finest = std::max(finest, s.scale());
            n = 2LL << finest;
        }
        DenoiseConfig cfg;
        cfg.L = a.block_size.value_or(theoretical_block_size(n, spec.d, spec.r));
        const auto b = scale_bounds(spec, n, cfg.L);
        cfg.j0 = b.j0;
        cfg.J_star = std::max(b.j_star, cfg.j0);
        cfg.lambda = a.lambda.value_or(solve_lambda_star());
        cfg.energy = energy_named(a.energy);
        for (const auto& s : y.subbands)
            if (!s.is_lowpass()) cfg.noise_scale[s.key] = *a.sigma;
        const auto r = blockjs_estimate(y, spec, cfg);
        if (!a.out.empty()) {
            auto out = open_out(a.out);
            save_external_coefficients(out, r.estimate, spec.d);
        }
        std::cout << "L=" << cfg.L << " lambda=" << csv::number(cfg.lambda) << " j0=" << cfg.j0
                  << " J*=" << cfg.J_star << " blocks=" << r.report.blocks_total
                  << " killed=" << r.report.blocks_killed << " shrunk=" << r.report.blocks_shrunk << '\n';
        return 0;
    }

    const Image clean = read_pgm(a.in);
    Image input = clean;
    std::optional<Image> reference;
    if (a.add_noise) {
        input = add_noise(clean, *a.add_noise, a.seed);
        reference = clean;
    }
    if (!a.reference.empty()) reference = read_pgm(a.reference);

    const int levels = a.levels > 0 ? a.levels : default_levels(input.width, input.height);
    DenoiseOverrides o;
    o.sigma = a.sigma;
    o.lambda = a.lambda;
    o.L = a.block_size;
    o.energy = energy_named(a.energy);
    const auto r = denoise_image(input, make_transform(kind, levels), spec, o, reference ? &*reference : nullptr);
    if (!a.out.empty()) write_pgm(a.out, r.image);

    std::cout << "sigma=" << csv::number(r.record.sigma) << " L=" << r.config.L
              << " lambda=" << csv::number(r.config.lambda) << " j0=" << r.config.j0 << " J*=" << r.config.J_star
              << " killed=" << r.report.blocks_killed << "/" << r.report.blocks_total;
    if (reference) std::cout << " psnr_in=" << csv::number(psnr(*reference, input))
                             << " psnr_out=" << csv::number(r.record.psnr_out);
    std::cout << '\n';
    return 0;
}

struct SweepArgs {
    fs::path in, out = "sweep.csv";
    std::vector<double> sigmas{5, 10, 15, 20, 25, 50};
    std::vector<int> block_sizes{1, 2, 4, 8, 16};
    std::vector<double> lambdas{2, 3, 4, 4.5, 5, 6};
    std::vector<std::string> transforms{"dwt2"};
    std::string energy = "mean";
    int levels = 0, reps = 10;
    std::uint64_t seed = 0;
    bool timing = false;
};

int run_sweep_cmd(const SweepArgs& a) {
    const Image img = read_pgm(a.in);
    SweepGrid grid{a.sigmas, a.block_sizes, a.lambdas, seed_list(a.seed, a.reps)};
    grid.transforms.clear();
    for (const auto& t : a.transforms) grid.transforms.push_back(parse_transform_kind(t));
    if (a.levels > 0) grid.levels = a.levels;
    grid.energy = energy_named(a.energy);
    const auto records = run_sweep(img, image_id(a.in), grid);
    {
        auto out = open_out(a.out);
        write_sweep_csv(out, records, a.timing);
    }
    auto mean = open_out(summary_path(a.out));
    write_sweep_summary_csv(mean, summarize_sweep(records));
    std::cout << records.size() << " runs -> " << a.out.string() << ", " << summary_path(a.out).string() << '\n';
    return 0;
}

struct CompareArgs {
    std::vector<fs::path> in;
    fs::path out = "compare.csv";
    std::vector<double> sigmas{5, 10, 15, 20, 25, 30, 50};
    std::string energy = "mean";
    int levels = 0, reps = 10;
    std::uint64_t seed = 0;
};

int run_compare(const CompareArgs& a) {
    std::vector<CompareRow> rows;
    CompareOptions opts;
    if (a.levels > 0) opts.levels = a.levels;
    opts.energy = energy_named(a.energy);
    for (const auto& path : a.in) {
        auto part = run_block_vs_term(read_pgm(path), image_id(path), a.sigmas, seed_list(a.seed, a.reps), opts);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    auto out = open_out(a.out);
    write_compare_csv(out, rows);
    std::cout << rows.size() << " rows -> " << a.out.string() << '\n';
    return 0;
}

struct SeqlabArgs {
    double s = 1.0, p = 2.0, q = 2.0, M = 1.0;
    int log2_min = 10, log2_max = 16, reps = 20;
    std::uint64_t seed = 0;
    fs::path out = "mise.csv";
};

int run_seqlab(const SeqlabArgs& a) {
    if (a.log2_min < 6 || a.log2_max < a.log2_min + 2)
        throw Error(ErrorKind::invalid_parameter, "need 6 <= --log2-min and at least 3 sample sizes");
    SmoothnessBall ball{a.s, a.p, a.q, a.M, presets::wavelet_1d()};
    std::vector<long long> ns;
    for (int k = a.log2_min; k <= a.log2_max; ++k) ns.push_back(1LL << k);
    const auto result = simulate_mise(ball, ns, a.reps, a.seed);
    {
        auto out = open_out(a.out);
        write_mise_csv(out, result.runs);
    }
    fs::path fit_path = a.out;
    fit_path.replace_filename(a.out.stem().string() + "_fit.csv");
    auto fit = open_out(fit_path);
    write_fit_csv(fit, result.fit);
    std::cout << "slope=" << csv::number(result.fit.slope) << " target=" << csv::number(-2 * a.s / (2 * a.s + 1))
              << " r2=" << csv::number(result.fit.r2) << '\n';
    return 0;
}

struct LemmaArgs {
    int fuzz = 100000;
    long long trials = 100000;
    std::uint64_t seed = 0;
    fs::path out;
};

int run_check_lemmas(const LemmaArgs& a) {
    std::mt19937_64 gen(a.seed);
    std::uniform_int_distribution<int> len(1, 64);
    std::uniform_real_distribution<double> val(-10.0, 10.0), lam(0.0, 20.0);
    int violations = 0;
    for (int t = 0; t < a.fuzz; ++t) {
        OracleInstance inst;
        const int m = len(gen);
        for (int i = 0; i < m; ++i) {
            inst.v.push_back(val(gen));
            inst.w.push_back(val(gen));
        }
        inst.lambda = std::max(1e-9, lam(gen));
        if (!check_lemma_mal(inst).holds) ++violations;
    }
    std::cout << "oracle inequality: " << a.fuzz << " instances, " << violations << " violations\n";

    std::ofstream csv_out;
    if (!a.out.empty()) {
        csv_out = open_out(a.out);
        csv_out << "m,gamma,signal,estimate,ci_halfwidth,bound,holds\n";
    }
    int failed = 0;
    std::uint64_t cell = 0;
    for (std::size_t m : {1u, 4u, 16u}) {
        for (double gamma : {1.5, 2.5, solve_lambda_star()}) {
            for (double rel : {0.0, 0.5, 4.0}) {
                const std::vector<double> v(m, std::sqrt(rel));
                const auto r = check_lemma_bp(m, gamma, 1.0, v, a.trials, a.seed + cell++);
                if (!r.holds) ++failed;
                if (csv_out.is_open())
                    csv::row(csv_out, {std::to_string(m), csv::number(gamma), csv::number(rel), csv::number(r.estimate),
                                       csv::number(r.ci_halfwidth), csv::number(r.bound), r.holds ? "1" : "0"});
            }
        }
    }
    std::cout << "risk bound: 27 settings, " << failed << " failing\n";
    return violations == 0 && failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Block James-Stein denoising and experiment driver"};
    app.require_subcommand(1);

    DenoiseArgs d;
    auto* den = app.add_subcommand("denoise", "Denoise a PGM image or an external coefficient file");
    den->add_option("--in", d.in, "Input PGM (or SBC1 file with --transform external)")->required();
    den->add_option("--out", d.out, "Output PGM (or SBC1)");
    den->add_option("--transform", d.transform)->check(CLI::IsMember({"dwt2", "udwt2", "external"}));
    den->add_option("--preset", d.preset, "Frame parameters for external input")
        ->check(CLI::IsMember({"wavelet", "curvelet"}));
    den->add_option("--n", d.n, "Sample side length for external input (default 2^(finest j + 1))");
    den->add_option("--levels", d.levels, "Decomposition depth (default: 5 at 512, 4 at 256)");
    den->add_option("--sigma", d.sigma, "Noise level; MAD-estimated when omitted");
    den->add_option("--block-size", d.block_size, "Block side L; theoretical when omitted");
    den->add_option("--lambda", d.lambda, "Threshold; root of x - ln x = 3 when omitted");
    den->add_option("--delta", d.delta, "Threshold inflation exponent");
    den->add_option("--energy", d.energy, "Block energy normalization")->check(CLI::IsMember({"mean", "side"}));
    den->add_option("--add-noise", d.add_noise, "Add white noise of this sigma first and report PSNR");
    den->add_option("--seed", d.seed, "Seed for --add-noise");
    den->add_option("--reference", d.reference, "Clean PGM to report PSNR against");

    SweepArgs s;
    auto* sw = app.add_subcommand("sweep", "PSNR over (transform, sigma, L, lambda, seed)");
    sw->add_option("--in", s.in)->required();
    sw->add_option("--out", s.out, "CSV path; the seed average goes to <stem>_mean.csv");
    sw->add_option("--sigmas", s.sigmas)->delimiter(',');
    sw->add_option("--block-size", s.block_sizes, "Block sizes")->delimiter(',');
    sw->add_option("--lambda", s.lambdas, "Thresholds")->delimiter(',');
    sw->add_option("--transform", s.transforms)->delimiter(',')->check(CLI::IsMember({"dwt2", "udwt2"}));
    sw->add_option("--levels", s.levels);
    sw->add_option("--energy", s.energy)->check(CLI::IsMember({"mean", "side"}));
    sw->add_option("--seed", s.seed, "First seed");
    sw->add_option("--reps", s.reps, "Number of seeds");
    sw->add_flag("--timing", s.timing, "Add a wall_time column (output no longer reproducible)");

    CompareArgs c;
    auto* cmp = app.add_subcommand("compare", "Block vs term-by-term thresholding, DWT and UDWT");
    cmp->add_option("--in", c.in)->required();
    cmp->add_option("--out", c.out);
    cmp->add_option("--sigmas", c.sigmas)->delimiter(',');
    cmp->add_option("--levels", c.levels);
    cmp->add_option("--energy", c.energy)->check(CLI::IsMember({"mean", "side"}));
    cmp->add_option("--seed", c.seed);
    cmp->add_option("--reps", c.reps);

    SeqlabArgs q;
    auto* seq = app.add_subcommand("seqlab", "Monte Carlo risk over a smoothness ball, 1D sequence model");
    seq->add_option("--s", q.s);
    seq->add_option("--p", q.p);
    seq->add_option("--q", q.q);
    seq->add_option("--M", q.M);
    seq->add_option("--log2-min", q.log2_min);
    seq->add_option("--log2-max", q.log2_max);
    seq->add_option("--reps", q.reps);
    seq->add_option("--seed", q.seed);
    seq->add_option("--out", q.out, "Per-run CSV; the fit goes to <stem>_fit.csv");

    LemmaArgs l;
    auto* lem = app.add_subcommand("check-lemmas", "Fuzz the oracle inequality and Monte Carlo the risk bound");
    lem->add_option("--fuzz", l.fuzz);
    lem->add_option("--trials", l.trials);
    lem->add_option("--seed", l.seed);
    lem->add_option("--out", l.out, "CSV for the risk-bound grid");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*den) return run_denoise(d);
        if (*sw) return run_sweep_cmd(s);
        if (*cmp) return run_compare(c);
        if (*seq) return run_seqlab(q);
        if (*lem) return run_check_lemmas(l);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
