#pragma once

// Periodic 2D orthogonal wavelet transform (DWT) and its undecimated,
// translation-invariant counterpart (UDWT), laid out as CoefficientSets.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "steinblock/core_model.hpp"
#include "steinblock/error.hpp"
#include "steinblock/random.hpp"
#include "steinblock/symmlet.hpp"

namespace steinblock {

/// Grayscale image, row-major, `height` rows of `width` pixels.
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), pixels(w * h, fill) {}
    Image(std::size_t w, std::size_t h, std::vector<double> px) : width(w), height(h), pixels(std::move(px)) {
        if (pixels.size() != w * h) throw Error(ErrorKind::extent_mismatch, "pixel count does not match extent");
    }

    double& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
    double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
    std::size_t size() const { return pixels.size(); }
};

enum class TransformKind { dwt2, udwt2, external };

inline std::string_view to_string(TransformKind k) {
    switch (k) {
    case TransformKind::dwt2: return "dwt2";
    case TransformKind::udwt2: return "udwt2";
    case TransformKind::external: return "external";
    }
    return "unknown";
}

inline TransformKind parse_transform_kind(std::string_view s) {
    if (s == "dwt2") return TransformKind::dwt2;
    if (s == "udwt2") return TransformKind::udwt2;
    if (s == "external") return TransformKind::external;
    throw Error(ErrorKind::invalid_parameter, "unknown transform '" + std::string(s) + "'");
}

struct TransformHandle {
    TransformKind kind = TransformKind::dwt2;
    int levels = 1;
    std::vector<double> filter{filters::symmlet6.begin(), filters::symmlet6.end()};

    /// Alternating-flip high-pass partner g[m] = (-1)^m h[N-1-m].
    std::vector<double> highpass() const {
        std::vector<double> g(filter.size());
        for (std::size_t m = 0; m < filter.size(); ++m)
            g[m] = ((m % 2) ? -1.0 : 1.0) * filter[filter.size() - 1 - m];
        return g;
    }
};

inline TransformHandle make_transform(TransformKind kind, int levels) {
    TransformHandle t;
    t.kind = kind;
    t.levels = levels;
    return t;
}

/// Depth used when none is requested: 5 levels at 512, 4 at 256.
inline int default_levels(std::size_t width, std::size_t height) {
    const int J = std::bit_width(std::min(width, height)) - 1;
    return std::max(1, J - 4);
}

inline int finest_scale_index(std::size_t width, std::size_t height) {
    return std::bit_width(std::min(width, height)) - 1;
}

inline void validate_transform(const TransformHandle& t, std::size_t width, std::size_t height) {
    if (t.kind == TransformKind::external)
        throw Error(ErrorKind::invalid_parameter, "external coefficients have no built-in transform");
    if (t.filter.size() < 2 || t.filter.size() % 2)
        throw Error(ErrorKind::invalid_parameter, "filter length must be even and >= 2");
    double norm2 = 0.0;
    for (double c : t.filter) norm2 += c * c;
    if (std::abs(norm2 - 1.0) > 1e-12) throw Error(ErrorKind::invalid_parameter, "filter must have unit l2 norm");
    if (width == 0 || height == 0) throw Error(ErrorKind::invalid_parameter, "empty image");
    if (t.kind == TransformKind::dwt2 && (!std::has_single_bit(width) || !std::has_single_bit(height)))
        throw Error(ErrorKind::invalid_parameter, "dwt2 needs power-of-two extents");
    const int max_levels = finest_scale_index(width, height);
    if (t.levels < 1 || t.levels > max_levels)
        throw Error(ErrorKind::invalid_parameter,
                    "levels must lie in [1, " + std::to_string(max_levels) + "] for this image");
}

namespace detail {

struct Plane {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    Plane() = default;
    Plane(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}
    Plane(std::size_t r, std::size_t c, std::vector<double> data) : rows(r), cols(c), v(std::move(data)) {}
    double* row(std::size_t i) { return v.data() + i * cols; }
    const double* row(std::size_t i) const { return v.data() + i * cols; }
};

inline Plane transpose(const Plane& p) {
    Plane t(p.cols, p.rows);
    for (std::size_t i = 0; i < p.rows; ++i)
        for (std::size_t j = 0; j < p.cols; ++j) t.v[j * p.rows + i] = p.v[i * p.cols + j];
    return t;
}

// Decimated periodic analysis along rows: a[k] = sum_m h[m] x[(2k+m) mod N].
inline std::pair<Plane, Plane> analyze_rows(const Plane& in, std::span<const double> h, std::span<const double> g) {
    const std::size_t n = in.cols;
    const std::size_t half = n / 2;
    Plane lo(in.rows, half), hi(in.rows, half);
    for (std::size_t r = 0; r < in.rows; ++r) {
        const double* x = in.row(r);
        double* a = lo.row(r);
        double* d = hi.row(r);
        for (std::size_t k = 0; k < half; ++k) {
            double sa = 0.0, sd = 0.0;
            for (std::size_t m = 0; m < h.size(); ++m) {
                const double xv = x[(2 * k + m) % n];
                sa += h[m] * xv;
                sd += g[m] * xv;
            }
            a[k] = sa;
            d[k] = sd;
        }
    }
    return {std::move(lo), std::move(hi)};
}

// Adjoint of analyze_rows.
inline Plane synthesize_rows(const Plane& lo, const Plane& hi, std::span<const double> h, std::span<const double> g) {
    const std::size_t half = lo.cols;
    const std::size_t n = 2 * half;
    Plane out(lo.rows, n);
    for (std::size_t r = 0; r < lo.rows; ++r) {
        const double* a = lo.row(r);
        const double* d = hi.row(r);
        double* x = out.row(r);
        for (std::size_t k = 0; k < half; ++k)
            for (std::size_t m = 0; m < h.size(); ++m) x[(2 * k + m) % n] += h[m] * a[k] + g[m] * d[k];
    }
    return out;
}

// Undecimated analysis with holes: a[i] = c sum_m h[m] x[(i + step m) mod N],
// c = 1/sqrt(2), which makes each level a Parseval frame.
inline std::pair<Plane, Plane> analyze_rows_atrous(const Plane& in, std::span<const double> h,
                                                   std::span<const double> g, std::size_t step) {
    const std::size_t n = in.cols;
    const double c = 1.0 / std::sqrt(2.0);
    Plane lo(in.rows, n), hi(in.rows, n);
    std::vector<std::size_t> offs(h.size());
    for (std::size_t m = 0; m < h.size(); ++m) offs[m] = (step * m) % n;
    for (std::size_t r = 0; r < in.rows; ++r) {
        const double* x = in.row(r);
        double* a = lo.row(r);
        double* d = hi.row(r);
        for (std::size_t i = 0; i < n; ++i) {
            double sa = 0.0, sd = 0.0;
            for (std::size_t m = 0; m < h.size(); ++m) {
                std::size_t idx = i + offs[m];
                if (idx >= n) idx -= n;
                sa += h[m] * x[idx];
                sd += g[m] * x[idx];
            }
            a[i] = c * sa;
            d[i] = c * sd;
        }
    }
    return {std::move(lo), std::move(hi)};
}

// Adjoint of analyze_rows_atrous (and its inverse).
inline Plane synthesize_rows_atrous(const Plane& lo, const Plane& hi, std::span<const double> h,
                                    std::span<const double> g, std::size_t step) {
    const std::size_t n = lo.cols;
    const double c = 1.0 / std::sqrt(2.0);
    Plane out(lo.rows, n);
    std::vector<std::size_t> offs(h.size());
    for (std::size_t m = 0; m < h.size(); ++m) offs[m] = (step * m) % n;
    for (std::size_t r = 0; r < lo.rows; ++r) {
        const double* a = lo.row(r);
        const double* d = hi.row(r);
        double* x = out.row(r);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t m = 0; m < h.size(); ++m) {
                std::size_t idx = i + n - offs[m];
                if (idx >= n) idx -= n;
                s += h[m] * a[idx] + g[m] * d[idx];
            }
            x[i] = c * s;
        }
    }
    return out;
}

struct LevelBands {
    Plane ll, horizontal, vertical, diagonal;
};

// One 2D level.  horizontal = high-pass along y, low-pass along x;
// vertical = high-pass along x, low-pass along y.
inline LevelBands analyze_level(const Plane& in, const TransformHandle& t, std::span<const double> g,
                                std::size_t step) {
    const bool atrous = t.kind == TransformKind::udwt2;
    auto [lx, hx] = atrous ? analyze_rows_atrous(in, t.filter, g, step) : analyze_rows(in, t.filter, g);
    auto split_columns = [&](const Plane& p) {
        auto [lo, hi] = atrous ? analyze_rows_atrous(transpose(p), t.filter, g, step)
                               : analyze_rows(transpose(p), t.filter, g);
        return std::pair{transpose(lo), transpose(hi)};
    };
    auto [ll, hl] = split_columns(lx);
    auto [lh, hh] = split_columns(hx);
    return {std::move(ll), std::move(hl), std::move(lh), std::move(hh)};
}

inline Plane synthesize_level(const LevelBands& b, const TransformHandle& t, std::span<const double> g,
                              std::size_t step) {
    const bool atrous = t.kind == TransformKind::udwt2;
    auto merge_columns = [&](const Plane& lo, const Plane& hi) {
        Plane merged = atrous ? synthesize_rows_atrous(transpose(lo), transpose(hi), t.filter, g, step)
                              : synthesize_rows(transpose(lo), transpose(hi), t.filter, g);
        return transpose(merged);
    };
    const Plane lx = merge_columns(b.ll, b.horizontal);
    const Plane hx = merge_columns(b.vertical, b.diagonal);
    return atrous ? synthesize_rows_atrous(lx, hx, t.filter, g, step) : synthesize_rows(lx, hx, t.filter, g);
}

inline Subband to_subband(SubbandKey key, Plane p) {
    return Subband(key, {p.rows, p.cols}, std::move(p.v));
}

inline Plane to_plane(const Subband& s) {
    return Plane(s.extent.at(0), s.extent.at(1), s.values);
}

}  // namespace detail

/// Subband layout produced by `forward` for an image of the given extent:
/// lowpass (orientation 0) first, then levels coarse to fine, orientations
/// 1 (horizontal), 2 (vertical), 3 (diagonal).  Detail level s sits at scale
/// index j = floor(log2 min(w, h)) - s.
inline CoefficientSet expected_layout(const TransformHandle& t, std::size_t width, std::size_t height) {
    validate_transform(t, width, height);
    const int J = finest_scale_index(width, height);
    const bool atrous = t.kind == TransformKind::udwt2;
    CoefficientSet set{CoefficientKind::observation, {}};
    auto extent_at = [&](int level) {
        if (atrous) return std::vector<std::size_t>{height, width};
        return std::vector<std::size_t>{height >> level, width >> level};
    };
    set.subbands.emplace_back(SubbandKey{J - t.levels, 0}, extent_at(t.levels));
    for (int s = t.levels; s >= 1; --s)
        for (int o = 1; o <= 3; ++o) set.subbands.emplace_back(SubbandKey{J - s, o}, extent_at(s));
    return set;
}

inline CoefficientSet forward(const Image& img, const TransformHandle& t) {
    validate_transform(t, img.width, img.height);
    const int J = finest_scale_index(img.width, img.height);
    const auto g = t.highpass();

    std::vector<detail::LevelBands> levels;
    detail::Plane current(img.height, img.width, img.pixels);
    for (int s = 1; s <= t.levels; ++s) {
        auto bands = detail::analyze_level(current, t, g, std::size_t{1} << (s - 1));
        current = std::move(bands.ll);
        levels.push_back(std::move(bands));
    }
    CoefficientSet set{CoefficientKind::observation, {}};
    set.subbands.push_back(detail::to_subband({J - t.levels, 0}, std::move(current)));
    for (int s = t.levels; s >= 1; --s) {
        auto& b = levels[static_cast<std::size_t>(s - 1)];
        set.subbands.push_back(detail::to_subband({J - s, 1}, std::move(b.horizontal)));
        set.subbands.push_back(detail::to_subband({J - s, 2}, std::move(b.vertical)));
        set.subbands.push_back(detail::to_subband({J - s, 3}, std::move(b.diagonal)));
    }
    return set;
}

/// Image extent implied by a coefficient layout (from its lowpass band).
inline std::pair<std::size_t, std::size_t> image_extent_of(const CoefficientSet& c, const TransformHandle& t) {
    for (const auto& s : c.subbands) {
        if (s.is_lowpass() && s.extent.size() == 2) {
            const std::size_t factor = t.kind == TransformKind::dwt2 ? (std::size_t{1} << t.levels) : 1;
            return {s.extent[1] * factor, s.extent[0] * factor};
        }
    }
    throw Error(ErrorKind::layout_mismatch, "coefficient set has no 2D lowpass band");
}

inline Image inverse(const CoefficientSet& c, const TransformHandle& t) {
    const auto [width, height] = image_extent_of(c, t);
    if (!c.same_layout(expected_layout(t, width, height)))
        throw Error(ErrorKind::layout_mismatch, "coefficients do not match the transform layout");
    const auto g = t.highpass();

    detail::Plane current = detail::to_plane(c.subbands[0]);
    std::size_t idx = 1;
    for (int s = t.levels; s >= 1; --s, idx += 3) {
        detail::LevelBands b{std::move(current), detail::to_plane(c.subbands[idx]),
                             detail::to_plane(c.subbands[idx + 1]), detail::to_plane(c.subbands[idx + 2])};
        current = detail::synthesize_level(b, t, g, std::size_t{1} << (s - 1));
    }
    return Image(width, height, std::move(current.v));
}

// ---------------------------------------------------------------------------

/// Empirical per-subband standard deviation of the transform of `reps`
/// white-noise images with standard deviation `sigma`.
inline NoiseScales calibrate_noise(const TransformHandle& t, std::size_t width, std::size_t height, double sigma,
                                   std::uint64_t seed, int reps) {
    if (reps < 1) throw Error(ErrorKind::invalid_parameter, "reps must be >= 1");
    if (sigma < 0.0) throw Error(ErrorKind::invalid_parameter, "sigma must be >= 0");
    const CoefficientSet layout = expected_layout(t, width, height);
    NoiseScales scales;
    if (sigma == 0.0) {
        for (const auto& s : layout.subbands) scales[s.key] = 0.0;
        return scales;
    }
    std::map<SubbandKey, double> sum_sq;
    std::map<SubbandKey, std::size_t> count;
    for (int rep = 0; rep < reps; ++rep) {
        auto gen = substream(seed, {0x6e6f697365ULL, static_cast<std::uint64_t>(rep)});
        std::normal_distribution<double> normal(0.0, sigma);
        Image noise(width, height);
        for (double& p : noise.pixels) p = normal(gen);
        for (const auto& s : forward(noise, t).subbands) {
            double acc = 0.0;
            for (double v : s.values) acc += v * v;
            sum_sq[s.key] += acc;
            count[s.key] += s.size();
        }
    }
    for (const auto& [key, acc] : sum_sq) scales[key] = std::sqrt(acc / static_cast<double>(count[key]));
    return scales;
}

/// median(|finest diagonal coefficients|) / 0.6745.
inline double estimate_sigma_mad(const CoefficientSet& c) {
    const Subband* finest = nullptr;
    for (const auto& s : c.subbands) {
        if (s.orientation() == 3 && (!finest || s.scale() > finest->scale())) finest = &s;
    }
    if (!finest || finest->values.empty())
        throw Error(ErrorKind::empty_coefficients, "no finest diagonal subband to estimate sigma from");
    std::vector<double> mags(finest->values.size());
    std::transform(finest->values.begin(), finest->values.end(), mags.begin(), [](double v) { return std::abs(v); });
    const std::size_t n = mags.size();
    const auto mid = mags.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(mags.begin(), mid, mags.end());
    double median = *mid;
    if (n % 2 == 0) median = 0.5 * (median + *std::max_element(mags.begin(), mid));
    return median / 0.6745;
}

}  // namespace steinblock
