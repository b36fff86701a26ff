#pragma once

// Sequence-model geometry: frame parameters, coefficient containers, block
// partitions and the block-size / scale-range formulas.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "steinblock/error.hpp"

namespace steinblock {

/// Parameters of the frame sequence model y = theta + n^{-r/2} z.
///
/// `mu` holds one anisotropy exponent per axis: subband extents grow like
/// 2^{mu_i j}.  The number of subbands at scale j is floor(c_star 2^{upsilon j}).
struct FrameSpec {
    int d = 1;
    double r = 1.0;
    double upsilon = 0.0;
    double c_star = 1.0;
    std::vector<double> mu{1.0};
    double delta = 0.0;

    double d_star() const { return std::accumulate(mu.begin(), mu.end(), 0.0); }

    double min_mu() const { return *std::min_element(mu.begin(), mu.end()); }

    /// floor(c_star 2^{upsilon j}), at least 1.
    std::size_t max_subbands(int j) const {
        const double count = std::floor(c_star * std::exp2(upsilon * j) + 1e-12);
        return static_cast<std::size_t>(std::max(1.0, count));
    }
};

namespace presets {

/// Separable 2D wavelets: three isotropic orientations per scale.
inline FrameSpec wavelet_2d() { return FrameSpec{2, 2.0, 0.0, 3.0, {1.0, 1.0}, 0.0}; }

/// Second-generation curvelets (parabolic scaling).  c_star = 16 matches the
/// usual 16 wedges at the first angular scale.
inline FrameSpec curvelet_2d() { return FrameSpec{2, 2.0, 0.5, 16.0, {1.0, 0.5}, 0.0}; }

/// One-dimensional orthogonal wavelets.
inline FrameSpec wavelet_1d() { return FrameSpec{1, 1.0, 0.0, 1.0, {1.0}, 0.0}; }

}  // namespace presets

/// Returns every violated FrameSpec invariant; empty when valid.
inline std::vector<std::string> validate_frame_spec(const FrameSpec& spec) {
    std::vector<std::string> violations;
    if (spec.d < 1) violations.emplace_back("d must be >= 1");
    if (!(spec.r >= 1.0 && spec.r <= static_cast<double>(spec.d)))
        violations.emplace_back("r must lie in [1, d]");
    if (!(spec.upsilon >= 0.0 && spec.upsilon <= 1.0))
        violations.emplace_back("upsilon must lie in [0, 1]");
    if (!(spec.c_star >= 1.0)) violations.emplace_back("c_star must be >= 1");
    if (spec.mu.size() != static_cast<std::size_t>(std::max(spec.d, 0)))
        violations.emplace_back("mu must have exactly d entries");
    if (std::any_of(spec.mu.begin(), spec.mu.end(), [](double m) { return !(m > 0.0); }))
        violations.emplace_back("mu_i must be positive");
    if (!(spec.delta >= 0.0)) violations.emplace_back("delta must be >= 0");
    return violations;
}

inline void require_valid(const FrameSpec& spec) {
    const auto violations = validate_frame_spec(spec);
    if (violations.empty()) return;
    std::string message = "invalid frame spec:";
    for (const auto& v : violations) message += " " + v + ";";
    throw Error(ErrorKind::invalid_parameter, message);
}

// ---------------------------------------------------------------------------

enum class CoefficientKind { observation, truth, estimate };

/// (scale j, orientation l).  Orientation 0 is reserved for a lowpass
/// residual, which every estimator passes through untouched.
struct SubbandKey {
    int scale = 0;
    int orientation = 0;

    auto operator<=>(const SubbandKey&) const = default;
};

using NoiseScales = std::map<SubbandKey, double>;

/// One subband: a dense row-major array (last axis fastest) over its extent.
struct Subband {
    SubbandKey key;
    std::vector<std::size_t> extent;
    std::vector<double> values;

    Subband() = default;
    Subband(SubbandKey k, std::vector<std::size_t> ext)
        : key(k), extent(std::move(ext)), values(element_count(extent), 0.0) {}
    Subband(SubbandKey k, std::vector<std::size_t> ext, std::vector<double> vals)
        : key(k), extent(std::move(ext)), values(std::move(vals)) {
        if (values.size() != element_count(extent))
            throw Error(ErrorKind::extent_mismatch, "subband value count does not match its extent");
    }

    static std::size_t element_count(std::span<const std::size_t> ext) {
        return std::accumulate(ext.begin(), ext.end(), std::size_t{1}, std::multiplies<>());
    }

    int scale() const { return key.scale; }
    int orientation() const { return key.orientation; }
    bool is_lowpass() const { return key.orientation == 0; }
    std::size_t size() const { return values.size(); }
};

/// Coefficients indexed by (j, l, k) with explicit per-subband extents.
struct CoefficientSet {
    CoefficientKind kind = CoefficientKind::observation;
    std::vector<Subband> subbands;

    bool empty() const {
        return std::all_of(subbands.begin(), subbands.end(), [](const Subband& s) { return s.values.empty(); });
    }

    std::size_t coefficient_count() const {
        std::size_t total = 0;
        for (const auto& s : subbands) total += s.size();
        return total;
    }

    const Subband* find(SubbandKey key) const {
        for (const auto& s : subbands)
            if (s.key == key) return &s;
        return nullptr;
    }
    Subband* find(SubbandKey key) {
        for (auto& s : subbands)
            if (s.key == key) return &s;
        return nullptr;
    }

    /// Same layout, all values zero, given kind.
    CoefficientSet zeros_like(CoefficientKind k) const {
        CoefficientSet out{k, {}};
        out.subbands.reserve(subbands.size());
        for (const auto& s : subbands) out.subbands.emplace_back(s.key, s.extent);
        return out;
    }

    bool same_layout(const CoefficientSet& other) const {
        if (subbands.size() != other.subbands.size()) return false;
        for (std::size_t i = 0; i < subbands.size(); ++i) {
            if (subbands[i].key != other.subbands[i].key || subbands[i].extent != other.subbands[i].extent)
                return false;
        }
        return true;
    }
};

/// Checks extents, value counts, duplicate keys and the per-scale subband
/// budget floor(c_star 2^{upsilon j}) (lowpass bands excluded).
inline std::vector<std::string> validate_layout(const CoefficientSet& set, const FrameSpec& spec) {
    std::vector<std::string> problems;
    std::map<int, std::size_t> per_scale;
    std::map<SubbandKey, int> seen;
    for (std::size_t i = 0; i < set.subbands.size(); ++i) {
        const auto& s = set.subbands[i];
        std::ostringstream where;
        where << "subband #" << i << " (j=" << s.scale() << ", l=" << s.orientation() << ")";
        if (s.extent.size() != static_cast<std::size_t>(spec.d))
            problems.push_back(where.str() + ": extent rank differs from d");
        if (std::any_of(s.extent.begin(), s.extent.end(), [](std::size_t e) { return e == 0; }))
            problems.push_back(where.str() + ": zero extent");
        if (s.values.size() != Subband::element_count(s.extent))
            problems.push_back(where.str() + ": value count does not match extent");
        if (++seen[s.key] > 1) problems.push_back(where.str() + ": duplicate key");
        if (!s.is_lowpass()) ++per_scale[s.scale()];
    }
    for (const auto& [j, count] : per_scale) {
        if (count > spec.max_subbands(j)) {
            std::ostringstream msg;
            msg << "scale " << j << " holds " << count << " subbands, budget is " << spec.max_subbands(j);
            problems.push_back(msg.str());
        }
    }
    return problems;
}

// ---------------------------------------------------------------------------

enum class LogBase { two, natural };

/// L = max(1, floor((r log n)^{1/d})), base-2 logarithm unless asked otherwise.
inline int theoretical_block_size(long long n, int d, double r, LogBase base = LogBase::two) {
    if (n < 2) throw Error(ErrorKind::invalid_parameter, "block size needs n >= 2");
    if (d < 1) throw Error(ErrorKind::invalid_parameter, "block size needs d >= 1");
    if (!(r >= 1.0 && r <= static_cast<double>(d)))
        throw Error(ErrorKind::invalid_parameter, "block size needs r in [1, d]");
    const double log_n = base == LogBase::two ? std::log2(static_cast<double>(n)) : std::log(static_cast<double>(n));
    const double x = r * log_n;
    long long L = static_cast<long long>(std::floor(std::pow(x, 1.0 / d)));
    // integer correction of the floating-point root
    const auto power = [d](long long b) { return std::pow(static_cast<double>(b), d); };
    const double slack = 1e-9 * std::max(1.0, x);
    while (power(L + 1) <= x + slack) ++L;
    while (L > 1 && power(L) > x + slack) --L;
    return static_cast<int>(std::max(1LL, L));
}

struct ScaleBounds {
    int j0 = 0;
    int j_star = 0;
};

/// j0 = floor(log2(L) / min mu_i), J* = floor(r / (d* + delta + upsilon) log2 n),
/// with j0 clamped to [0, J*].
inline ScaleBounds scale_bounds(const FrameSpec& spec, long long n, int L) {
    require_valid(spec);
    if (L < 1) throw Error(ErrorKind::invalid_parameter, "L must be >= 1");
    if (n < 2) throw Error(ErrorKind::invalid_parameter, "n must be >= 2");
    const double denom = spec.d_star() + spec.delta + spec.upsilon;
    if (!(denom > 0.0)) throw Error(ErrorKind::invalid_parameter, "d* + delta + upsilon must be positive");
    constexpr double eps = 1e-9;
    const int j_star = static_cast<int>(std::floor(spec.r / denom * std::log2(static_cast<double>(n)) + eps));
    int j0 = static_cast<int>(std::floor(std::log2(static_cast<double>(L)) / spec.min_mu() + eps));
    j0 = std::clamp(j0, 0, std::max(j_star, 0));
    return {j0, j_star};
}

// ---------------------------------------------------------------------------

/// Half-open index range along one axis.
struct Segment {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - begin; }
};

/// Cuts [0, extent) into floor(extent / L) pieces of length L, the remainder
/// merged into the last piece.  An extent shorter than L is a single piece.
inline std::vector<Segment> axis_segments(std::size_t extent, std::size_t L) {
    std::vector<Segment> segs;
    const std::size_t count = extent / L;
    if (count == 0) {
        segs.push_back({0, extent});
        return segs;
    }
    segs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) segs.push_back({i * L, (i + 1) * L});
    segs.back().end = extent;
    return segs;
}

struct Block {
    std::vector<std::size_t> index;    // block multi-index K (0-based)
    std::vector<std::size_t> members;  // row-major offsets into the subband
};

/// Partition of one subband into the blocks U_{j,K}.
class BlockPartition {
public:
    BlockPartition(std::vector<std::size_t> extent, std::size_t L) : L_(L), extent_(std::move(extent)) {
        if (L_ == 0) throw Error(ErrorKind::invalid_parameter, "block side L must be >= 1");
        if (extent_.empty()) throw Error(ErrorKind::invalid_parameter, "extent must have at least one axis");
        segments_.reserve(extent_.size());
        for (std::size_t e : extent_) {
            if (e == 0) throw Error(ErrorKind::invalid_parameter, "extent entries must be >= 1");
            segments_.push_back(axis_segments(e, L_));
        }
    }

    std::size_t block_side() const { return L_; }
    const std::vector<std::size_t>& subband_extent() const { return extent_; }
    const std::vector<std::vector<Segment>>& segments() const { return segments_; }

    std::size_t block_count() const {
        std::size_t n = 1;
        for (const auto& s : segments_) n *= s.size();
        return n;
    }

    /// Visits every block as (multi-index, member offsets).  The member
    /// buffer is reused between calls.
    template <typename F>
    void for_each_block(F&& visit) const {
        const std::size_t dims = extent_.size();
        std::vector<std::size_t> strides(dims, 1);
        for (std::size_t a = dims - 1; a > 0; --a) strides[a - 1] = strides[a] * extent_[a];

        std::vector<std::size_t> index(dims, 0);
        std::vector<std::size_t> members;
        std::vector<std::size_t> pos(dims);
        const std::size_t total = block_count();
        for (std::size_t b = 0; b < total; ++b) {
            members.clear();
            for (std::size_t a = 0; a < dims; ++a) pos[a] = segments_[a][index[a]].begin;
            for (bool done = false; !done;) {
                std::size_t offset = 0;
                for (std::size_t a = 0; a < dims; ++a) offset += pos[a] * strides[a];
                members.push_back(offset);
                done = true;
                for (std::size_t a = dims; a-- > 0;) {
                    const Segment& seg = segments_[a][index[a]];
                    if (++pos[a] < seg.end) {
                        done = false;
                        break;
                    }
                    pos[a] = seg.begin;
                }
            }
            visit(std::span<const std::size_t>(index), std::span<const std::size_t>(members));
            for (std::size_t a = dims; a > 0; --a) {
                if (++index[a - 1] < segments_[a - 1].size()) break;
                index[a - 1] = 0;
            }
        }
    }

    /// Materialized block list.
    std::vector<Block> blocks() const {
        std::vector<Block> out;
        out.reserve(block_count());
        for_each_block([&](std::span<const std::size_t> idx, std::span<const std::size_t> mem) {
            out.push_back({{idx.begin(), idx.end()}, {mem.begin(), mem.end()}});
        });
        return out;
    }

private:
    std::size_t L_;
    std::vector<std::size_t> extent_;
    std::vector<std::vector<Segment>> segments_;
};

inline BlockPartition build_partition(std::vector<std::size_t> extent, std::size_t L) {
    return BlockPartition(std::move(extent), L);
}

// ---------------------------------------------------------------------------

/// How a block's energy is normalized before the comparison with lambda sigma^2.
enum class BlockEnergy {
    /// (1/|U|) sum y^2, the mean over the block's actual cardinality.
    mean,
    /// mean scaled by L^{d-1}, i.e. sum y^2 / L for a full L^d block.
    side_normalized,
};

struct DenoiseConfig {
    int L = 1;
    double lambda = 4.50524;
    int j0 = 0;
    int J_star = 0;
    NoiseScales noise_scale;
    BlockEnergy energy = BlockEnergy::mean;

    void validate() const {
        if (L < 1) throw Error(ErrorKind::invalid_parameter, "L must be >= 1");
        if (!(lambda > 0.0)) throw Error(ErrorKind::invalid_parameter, "lambda must be positive");
        if (j0 < 0 || j0 > J_star) throw Error(ErrorKind::invalid_parameter, "need 0 <= j0 <= J*");
        for (const auto& [key, s] : noise_scale) {
            if (!(s > 0.0))
                throw Error(ErrorKind::invalid_parameter,
                            "noise scale for (j=" + std::to_string(key.scale) + ", l=" +
                                std::to_string(key.orientation) + ") must be positive");
        }
    }
};

}  // namespace steinblock
