#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace steinblock {

enum class ErrorKind {
    invalid_parameter,
    missing_noise_scale,
    empty_coefficients,
    layout_mismatch,
    parse_error,
    extent_mismatch,
    io_error,
    degenerate_sigma,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::missing_noise_scale: return "missing-noise-scale";
    case ErrorKind::empty_coefficients: return "empty-coefficient-set";
    case ErrorKind::layout_mismatch: return "layout-mismatch";
    case ErrorKind::parse_error: return "parse-error";
    case ErrorKind::extent_mismatch: return "extent-mismatch";
    case ErrorKind::io_error: return "io-error";
    case ErrorKind::degenerate_sigma: return "degenerate-sigma";
    }
    return "unknown";
}

/// Exception carrying a machine-readable kind next to the message.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace steinblock
