#pragma once

#include <array>
#include <cstdint>

namespace steinblock::filters {

/// Least-asymmetric Daubechies low-pass filter with 6 vanishing moments
/// (Symmlet 6), unit l2 norm, coefficients summing to sqrt(2).  Values are
/// the high-precision spectral factorization; they agree with the commonly
/// tabulated 15-digit values to 2e-12.  Mirrored in data/symmlet6.txt.
inline constexpr std::array<double, 12> symmlet6 = {
    -0.0078007083250323803, 0.0017677118642540077, 0.044724901770781388,  -0.021060292512370848,
    -0.072637522786376585,  0.33792942172816581,   0.78764114102865102,   0.49105594192797375,
    -0.048311742585698057,  -0.11799011114852002,  0.0034907120842221626, 0.015404109327044824,
};

/// FNV-1a 64 of data/symmlet6.txt (17 significant digits, one per line).
inline constexpr std::uint64_t symmlet6_file_fnv1a = 0xbe4295273c719ab5ULL;

}  // namespace steinblock::filters
