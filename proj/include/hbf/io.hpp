// SPDX-License-Identifier: Apache-2.0
//
// hbfsim — file formats
//
// Binary tensor containers (little-endian, length-validated):
//   HBFC  channel sets:  magic "HBFC", u32 version = 1, u32 N_c, u32 K,
//         u32 N_t, then N_c*K*N_t complex values as (f64 re, f64 im) pairs
//         in (m, k, n) row-major order.
//   HBFB  beamformers:   magic "HBFB", u32 version = 1, u32 n_slices,
//         u32 n_rows, u32 n_cols, payload in (slice, row, col) row-major
//         order. An analog matrix is stored as a single slice.
// Selection matrices serialize as one text line of N_t 0-based RF-chain
// indices. Experiment configs are flat "key = value" files with '#'
// comments.

#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <armadillo>

#include "hbf/channel.hpp"
#include "hbf/errors.hpp"
#include "hbf/selection.hpp"

namespace hbf {

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline void write_u32_le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_f64_le(std::ostream& os, double v) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i)
        b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t read_u32_le(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw ConfigError(path + ": truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline double read_f64_le(std::istream& is, const std::string& path) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8))
        throw ConfigError(path + ": truncated payload");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i)
        u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(u);
}

inline void check_magic(std::istream& is, const char expect[4], const std::string& path) {
    char m[4];
    if (!is.read(m, 4) || std::memcmp(m, expect, 4) != 0)
        throw ConfigError(path + ": bad magic, expected " + std::string(expect, 4));
}

inline void check_size(const std::string& path, std::uint64_t n_values) {
    const auto actual = std::filesystem::file_size(path);
    const std::uint64_t expected = 4 + 4 + 12 + 16 * n_values;
    if (actual != expected)
        throw ConfigError(path + ": size mismatch, expected " + std::to_string(expected) +
                          " bytes for the declared dimensions, found " + std::to_string(actual));
}

} // namespace detail

inline void save_channel_set(const std::string& path, const ChannelSet& chan) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ConfigError(path + ": cannot open for writing");
    os.write("HBFC", 4);
    detail::write_u32_le(os, 1);
    detail::write_u32_le(os, static_cast<std::uint32_t>(chan.h.n_slices));
    detail::write_u32_le(os, static_cast<std::uint32_t>(chan.h.n_rows));
    detail::write_u32_le(os, static_cast<std::uint32_t>(chan.h.n_cols));
    for (arma::uword m = 0; m < chan.h.n_slices; ++m)
        for (arma::uword k = 0; k < chan.h.n_rows; ++k)
            for (arma::uword n = 0; n < chan.h.n_cols; ++n) {
                detail::write_f64_le(os, chan.h(k, n, m).real());
                detail::write_f64_le(os, chan.h(k, n, m).imag());
            }
    if (!os)
        throw ConfigError(path + ": write failed");
}

// Low-level loader: coefficients only (shape K x N_t x N_c).
inline arma::cx_cube load_channel_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw ConfigError(path + ": cannot open");
    detail::check_magic(is, "HBFC", path);
    const auto version = detail::read_u32_le(is, path);
    if (version != 1)
        throw ConfigError(path + ": unsupported HBFC version " + std::to_string(version));
    const auto n_c = detail::read_u32_le(is, path);
    const auto k_users = detail::read_u32_le(is, path);
    const auto n_t = detail::read_u32_le(is, path);
    if (n_c == 0 || k_users == 0 || n_t == 0)
        throw ConfigError(path + ": zero dimension in header");
    detail::check_size(path, static_cast<std::uint64_t>(n_c) * k_users * n_t);
    arma::cx_cube h(k_users, n_t, n_c);
    for (arma::uword m = 0; m < n_c; ++m)
        for (arma::uword k = 0; k < k_users; ++k)
            for (arma::uword n = 0; n < n_t; ++n) {
                const double re = detail::read_f64_le(is, path);
                const double im = detail::read_f64_le(is, path);
                h(k, n, m) = {re, im};
            }
    return h;
}

// Loader that validates the stored dimensions against a configuration; the
// result carries no PathSet (only coefficients are stored).
inline ChannelSet load_channel_set(const std::string& path, const SystemConfig& cfg) {
    arma::cx_cube h = load_channel_tensor(path);
    if (h.n_rows != cfg.k_users || h.n_cols != cfg.n_t || h.n_slices != cfg.n_c)
        throw ConfigError(path + ": stored dimensions (K=" + std::to_string(h.n_rows) +
                          ", N_t=" + std::to_string(h.n_cols) + ", N_c=" +
                          std::to_string(h.n_slices) + ") disagree with the configuration");
    return ChannelSet{std::move(h), std::nullopt, cfg};
}

inline void save_beamformer(const std::string& path, const arma::cx_cube& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ConfigError(path + ": cannot open for writing");
    os.write("HBFB", 4);
    detail::write_u32_le(os, 1);
    detail::write_u32_le(os, static_cast<std::uint32_t>(f.n_slices));
    detail::write_u32_le(os, static_cast<std::uint32_t>(f.n_rows));
    detail::write_u32_le(os, static_cast<std::uint32_t>(f.n_cols));
    for (arma::uword s = 0; s < f.n_slices; ++s)
        for (arma::uword r = 0; r < f.n_rows; ++r)
            for (arma::uword c = 0; c < f.n_cols; ++c) {
                detail::write_f64_le(os, f(r, c, s).real());
                detail::write_f64_le(os, f(r, c, s).imag());
            }
    if (!os)
        throw ConfigError(path + ": write failed");
}

inline void save_beamformer(const std::string& path, const arma::cx_mat& f) {
    arma::cx_cube cube(f.n_rows, f.n_cols, 1);
    cube.slice(0) = f;
    save_beamformer(path, cube);
}

inline arma::cx_cube load_beamformer(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw ConfigError(path + ": cannot open");
    detail::check_magic(is, "HBFB", path);
    const auto version = detail::read_u32_le(is, path);
    if (version != 1)
        throw ConfigError(path + ": unsupported HBFB version " + std::to_string(version));
    const auto n_slices = detail::read_u32_le(is, path);
    const auto n_rows = detail::read_u32_le(is, path);
    const auto n_cols = detail::read_u32_le(is, path);
    if (n_slices == 0 || n_rows == 0 || n_cols == 0)
        throw ConfigError(path + ": zero dimension in header");
    detail::check_size(path, static_cast<std::uint64_t>(n_slices) * n_rows * n_cols);
    arma::cx_cube f(n_rows, n_cols, n_slices);
    for (arma::uword s = 0; s < n_slices; ++s)
        for (arma::uword r = 0; r < n_rows; ++r)
            for (arma::uword c = 0; c < n_cols; ++c) {
                const double re = detail::read_f64_le(is, path);
                const double im = detail::read_f64_le(is, path);
                f(r, c, s) = {re, im};
            }
    return f;
}

// One line of N_t 0-based RF chain indices, space separated.
inline std::string selection_to_text(const SelectionMatrix& sel) {
    const arma::uvec assign = assignment_of(sel);
    std::string out;
    for (arma::uword n = 0; n < assign.n_elem; ++n) {
        if (n)
            out += ' ';
        out += std::to_string(assign(n));
    }
    return out;
}

inline SelectionMatrix selection_from_text(const std::string& line, arma::uword k_users) {
    std::istringstream is(line);
    std::vector<arma::uword> vals;
    long long v = 0;
    while (is >> v) {
        if (v < 0)
            throw ConfigError("selection text: negative RF chain index");
        vals.push_back(static_cast<arma::uword>(v));
    }
    if (!is.eof()) {
        std::string tail;
        is.clear();
        is >> tail;
        throw ConfigError("selection text: unexpected token '" + tail + "'");
    }
    if (vals.empty())
        throw ConfigError("selection text: empty line");
    return selection_from_assignment(arma::uvec(vals), k_users);
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace detail

// Flat "key = value" file; '#' starts a comment, blank lines are skipped.
// Returns entries in file order (later duplicates override earlier ones at
// application time).
inline std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw ConfigError(path + ": cannot open");
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        out.emplace_back(key, value);
    }
    return out;
}

} // namespace hbf
