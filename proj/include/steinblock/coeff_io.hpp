#pragma once

// External coefficient files ("SBC1"), all integers little-endian u32:
//
//   "SBC1" | d | S | S x ( j | B | B x ( l | extent[0..d) ) ) | float64 data
//
// Subbands appear in header order; each subband's values are row-major
// (last axis fastest) IEEE-754 doubles, little-endian.  A scale group is a
// maximal run of consecutive subbands sharing j.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <vector>

#include "steinblock/core_model.hpp"
#include "steinblock/error.hpp"

namespace steinblock {

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_f64(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

class ByteReader {
public:
    explicit ByteReader(std::vector<unsigned char> bytes) : bytes_(std::move(bytes)) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::uint32_t u32(const std::string& record) {
        need(4, record);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    double f64(const std::string& record) {
        need(8, record);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return std::bit_cast<double>(bits);
    }

    void need(std::size_t n, const std::string& record) const {
        if (remaining() < n)
            throw Error(ErrorKind::parse_error,
                        record + " truncated at byte " + std::to_string(pos_) + " (need " + std::to_string(n) +
                            ", have " + std::to_string(remaining()) + ")");
    }

private:
    std::vector<unsigned char> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline void save_external_coefficients(std::ostream& out, const CoefficientSet& set, int d) {
    std::vector<std::pair<int, std::vector<const Subband*>>> groups;
    for (const auto& s : set.subbands) {
        if (s.extent.size() != static_cast<std::size_t>(d))
            throw Error(ErrorKind::extent_mismatch, "subband rank differs from d");
        if (groups.empty() || groups.back().first != s.scale()) groups.push_back({s.scale(), {}});
        groups.back().second.push_back(&s);
    }
    out.write("SBC1", 4);
    detail::put_u32(out, static_cast<std::uint32_t>(d));
    detail::put_u32(out, static_cast<std::uint32_t>(groups.size()));
    for (const auto& [j, members] : groups) {
        detail::put_u32(out, static_cast<std::uint32_t>(j));
        detail::put_u32(out, static_cast<std::uint32_t>(members.size()));
        for (const Subband* s : members) {
            detail::put_u32(out, static_cast<std::uint32_t>(s->orientation()));
            for (std::size_t e : s->extent) detail::put_u32(out, static_cast<std::uint32_t>(e));
        }
    }
    for (const auto& s : set.subbands)
        for (double v : s.values) detail::put_f64(out, v);
}

inline void save_external_coefficients(const std::filesystem::path& path, const CoefficientSet& set, int d) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io_error, "cannot write " + path.string());
    save_external_coefficients(out, set, d);
}

inline CoefficientSet load_external_coefficients(std::istream& in, const FrameSpec& spec) {
    detail::ByteReader r(std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {}));
    r.need(4, "magic");
    if (r.u32("magic") != 0x31434253U)  // "SBC1"
        throw Error(ErrorKind::parse_error, "malformed header: magic is not SBC1");
    const std::uint32_t d = r.u32("header field d");
    if (d != static_cast<std::uint32_t>(spec.d))
        throw Error(ErrorKind::extent_mismatch,
                    "file dimension " + std::to_string(d) + " differs from frame d=" + std::to_string(spec.d));
    const std::uint32_t scales = r.u32("header field scale count");

    CoefficientSet set{CoefficientKind::observation, {}};
    std::size_t record = 0;
    for (std::uint32_t g = 0; g < scales; ++g) {
        const std::string where = "scale group #" + std::to_string(g);
        const auto j = static_cast<int>(r.u32(where + " scale index"));
        const std::uint32_t bands = r.u32(where + " subband count");
        for (std::uint32_t b = 0; b < bands; ++b, ++record) {
            const std::string rec = "subband record #" + std::to_string(record);
            const auto l = static_cast<int>(r.u32(rec + " orientation"));
            std::vector<std::size_t> extent(d);
            for (auto& e : extent) {
                e = r.u32(rec + " extent");
                if (e == 0) throw Error(ErrorKind::parse_error, rec + " declares a zero extent");
            }
            set.subbands.emplace_back(SubbandKey{j, l}, std::move(extent));
        }
    }
    for (std::size_t i = 0; i < set.subbands.size(); ++i) {
        auto& s = set.subbands[i];
        const std::string rec = "data of subband record #" + std::to_string(i);
        r.need(8 * s.values.size(), rec);
        for (double& v : s.values) v = r.f64(rec);
    }
    if (r.remaining() != 0)
        throw Error(ErrorKind::extent_mismatch, "file holds " + std::to_string(r.remaining()) +
                                                    " bytes beyond the " + std::to_string(set.subbands.size()) +
                                                    " declared subbands");
    const auto problems = validate_layout(set, spec);
    if (!problems.empty()) throw Error(ErrorKind::extent_mismatch, problems.front());
    return set;
}

inline CoefficientSet load_external_coefficients(const std::filesystem::path& path, const FrameSpec& spec) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io_error, "cannot open " + path.string());
    return load_external_coefficients(in, spec);
}

}  // namespace steinblock
