#pragma once

// Binary (P5) and ASCII (P2) PGM, 8 or 16 bit.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <vector>

#include "steinblock/error.hpp"
#include "steinblock/transforms.hpp"

namespace steinblock {

namespace detail {

inline std::string next_pgm_token(std::istream& in) {
    std::string token;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    while (c != EOF && !std::isspace(c) && c != '#') {
        token.push_back(static_cast<char>(c));
        c = in.get();
    }
    if (token.empty()) throw Error(ErrorKind::parse_error, "unexpected end of PGM header");
    // the single whitespace after maxval is consumed here
    return token;
}

inline std::size_t parse_pgm_number(const std::string& token, const char* what) {
    try {
        std::size_t pos = 0;
        const unsigned long v = std::stoul(token, &pos);
        if (pos != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::parse_error, std::string("bad PGM ") + what + " '" + token + "'");
    }
}

}  // namespace detail

inline Image read_pgm(std::istream& in) {
    const std::string magic = detail::next_pgm_token(in);
    if (magic != "P5" && magic != "P2") throw Error(ErrorKind::parse_error, "not a PGM file (magic '" + magic + "')");
    const std::size_t width = detail::parse_pgm_number(detail::next_pgm_token(in), "width");
    const std::size_t height = detail::parse_pgm_number(detail::next_pgm_token(in), "height");
    const std::size_t maxval = detail::parse_pgm_number(detail::next_pgm_token(in), "maxval");
    if (width == 0 || height == 0) throw Error(ErrorKind::parse_error, "PGM has an empty extent");
    if (maxval == 0 || maxval > 65535) throw Error(ErrorKind::parse_error, "PGM maxval out of range");

    Image img(width, height);
    if (magic == "P2") {
        for (std::size_t i = 0; i < img.size(); ++i)
            img.pixels[i] = static_cast<double>(detail::parse_pgm_number(detail::next_pgm_token(in), "sample"));
        return img;
    }
    const std::size_t bytes_per = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(img.size() * bytes_per);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw Error(ErrorKind::parse_error, "PGM pixel data truncated");
    for (std::size_t i = 0; i < img.size(); ++i) {
        img.pixels[i] = bytes_per == 1 ? raw[i] : static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]);
    }
    return img;
}

inline Image read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io_error, "cannot open " + path.string());
    return read_pgm(in);
}

/// 8-bit P5; values are rounded and clipped to [0, 255] here and nowhere else.
inline void write_pgm(std::ostream& out, const Image& img) {
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.size());
    std::transform(img.pixels.begin(), img.pixels.end(), raw.begin(), [](double v) {
        return static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L));
    });
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

inline void write_pgm(const std::filesystem::path& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io_error, "cannot write " + path.string());
    write_pgm(out, img);
}

}  // namespace steinblock
