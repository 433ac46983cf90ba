// SPDX-License-Identifier: Apache-2.0
//
// hbfsim — geometric wideband channel model
//
// Frequency-domain downlink channels for a UPA transmitter: one LoS ray plus
// l_p NLoS rays per user, each NLoS ray carrying a CN(0,1) small-scale gain
// and a delay-induced phase ramp across subcarriers,
//
//   h[k,m] = sqrt(F_k) * ( a_t(theta_k, phi_k)
//            + sqrt(1/L_p) * sum_l alpha_{l,k} a_t(theta_{l,k}, phi_{l,k})
//                            * exp(-j 2 pi m tau_{l,k} / (N_c T_s)) ),
//
// with m = 1..N_c, free-space large-scale loss F_k = (lambda / (4 pi r_k))^2
// and T_s the OFDM symbol period. Channels are stored as a K x N_t x N_c cube
// whose slice m holds the row vectors h^T[k,m].

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include <armadillo>

#include "hbf/config.hpp"
#include "hbf/errors.hpp"

namespace hbf {

// All per-user path parameters of one channel realization.
struct PathSet {
    arma::vec theta_los; // K, LoS azimuth AoD, rad
    arma::vec phi_los;   // K, LoS elevation AoD, rad
    arma::mat theta_nlos; // l_p x K
    arma::mat phi_nlos;   // l_p x K
    arma::cx_mat alpha;   // l_p x K, small-scale gains, CN(0,1)
    arma::mat tau;        // l_p x K, path delays, s
    arma::vec f_k;        // K, large-scale path loss (linear power gain)
};

// A full channel realization. `paths` is absent for perturbed or
// file-loaded channels, where only the coefficients are known.
struct ChannelSet {
    arma::cx_cube h; // K x N_t x N_c; h.slice(m).row(k) = h^T[k,m]
    std::optional<PathSet> paths;
    SystemConfig config;
};

// UPA steering vector. Element (m1, m2) of the n_tv x n_th grid sits at index
// n = m1 * n_th + m2 and contributes phase (2 pi / lambda) * d *
// (m1 sin(theta) cos(phi) + m2 sin(phi)). No normalization factor: the
// entries are unit modulus.
inline arma::cx_vec array_response(double theta, double phi, const SystemConfig& cfg) {
    const double scale = 2.0 * kPi / cfg.lambda * cfg.d;
    const double u = std::sin(theta) * std::cos(phi);
    const double v = std::sin(phi);
    arma::cx_vec a(cfg.n_t);
    for (arma::uword m1 = 0; m1 < cfg.n_tv; ++m1)
        for (arma::uword m2 = 0; m2 < cfg.n_th; ++m2)
            a(m1 * cfg.n_th + m2) =
                std::polar(1.0, scale * (static_cast<double>(m1) * u + static_cast<double>(m2) * v));
    return a;
}

// Free-space large-scale loss F = (lambda / (4 pi r))^2 (linear power gain).
inline double path_loss(double r, double lambda) {
    if (r <= 0.0)
        throw DomainError("path_loss: range must be positive");
    if (lambda <= 0.0)
        throw DomainError("path_loss: wavelength must be positive");
    const double x = lambda / (4.0 * kPi * r);
    return x * x;
}

// Draw one set of path parameters. Deterministic given (cfg, seed); the draw
// order is fixed per user: LoS angles, then for each NLoS path its two angle
// offsets, complex gain and delay.
inline PathSet sample_paths(const SystemConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const arma::uword k_users = cfg.k_users;
    const arma::uword l_p = cfg.l_p;
    const double t_s = cfg.symbol_period();

    PathSet p;
    p.theta_los.set_size(k_users);
    p.phi_los.set_size(k_users);
    p.theta_nlos.set_size(l_p, k_users);
    p.phi_nlos.set_size(l_p, k_users);
    p.alpha.set_size(l_p, k_users);
    p.tau.set_size(l_p, k_users);
    p.f_k.set_size(k_users);

    auto uniform_pm = [&](double range) { return (2.0 * unif(rng) - 1.0) * range; };

    for (arma::uword k = 0; k < k_users; ++k) {
        p.theta_los(k) = uniform_pm(cfg.aod_range_rad);
        p.phi_los(k) = uniform_pm(cfg.aod_range_rad);
        for (arma::uword l = 0; l < l_p; ++l) {
            p.theta_nlos(l, k) = p.theta_los(k) + uniform_pm(cfg.angle_spread_rad);
            p.phi_nlos(l, k) = p.phi_los(k) + uniform_pm(cfg.angle_spread_rad);
            p.alpha(l, k) = std::complex<double>(gauss(rng), gauss(rng)) / std::sqrt(2.0);
            p.tau(l, k) = unif(rng) * cfg.delay_max_symbols * t_s;
        }
        p.f_k(k) = path_loss(cfg.r_k(k), cfg.lambda);
    }
    return p;
}

// Assemble frequency-domain coefficients from path parameters.
inline ChannelSet synthesize_channel(const PathSet& paths, const SystemConfig& cfg) {
    cfg.validate();
    if (paths.theta_los.n_elem != cfg.k_users || paths.phi_los.n_elem != cfg.k_users ||
        paths.f_k.n_elem != cfg.k_users)
        throw ConfigError("synthesize_channel: path set has wrong user count");
    if (paths.theta_nlos.n_rows != cfg.l_p || paths.theta_nlos.n_cols != cfg.k_users ||
        paths.alpha.n_rows != cfg.l_p || paths.tau.n_rows != cfg.l_p)
        throw ConfigError("synthesize_channel: path set has wrong NLoS shape");

    const double t_s = cfg.symbol_period();
    arma::cx_cube h(cfg.k_users, cfg.n_t, cfg.n_c);
    for (arma::uword k = 0; k < cfg.k_users; ++k) {
        const arma::cx_vec a_los = array_response(paths.theta_los(k), paths.phi_los(k), cfg);
        arma::cx_mat a_nlos(cfg.n_t, cfg.l_p);
        for (arma::uword l = 0; l < cfg.l_p; ++l)
            a_nlos.col(l) = array_response(paths.theta_nlos(l, k), paths.phi_nlos(l, k), cfg);

        const double amp = std::sqrt(paths.f_k(k));
        const double nlos_scale = cfg.l_p > 0 ? std::sqrt(1.0 / static_cast<double>(cfg.l_p)) : 0.0;
        for (arma::uword m = 0; m < cfg.n_c; ++m) {
            arma::cx_vec hk = a_los;
            if (cfg.l_p > 0) {
                // Subcarrier index in the model is 1-based: m_model = m + 1.
                const double ramp = -2.0 * kPi * static_cast<double>(m + 1) /
                                    (static_cast<double>(cfg.n_c) * t_s);
                arma::cx_vec coeff(cfg.l_p);
                for (arma::uword l = 0; l < cfg.l_p; ++l)
                    coeff(l) = paths.alpha(l, k) * std::polar(nlos_scale, ramp * paths.tau(l, k));
                hk += a_nlos * coeff;
            }
            h.slice(m).row(k) = (amp * hk).st();
        }
    }
    return ChannelSet{std::move(h), paths, cfg};
}

// Total energy sum |h|^2 over all entries of the coefficient cube.
inline double channel_energy(const arma::cx_cube& h) {
    double e = 0.0;
    for (arma::uword m = 0; m < h.n_slices; ++m)
        e += arma::accu(arma::square(arma::abs(h.slice(m))));
    return e;
}

// Additive white Gaussian CSI perturbation calibrated to a target normalized
// channel perturbation error: each entry receives CN(0, sigma_per^2) noise with
// sigma_per^2 = target_ncpe * sum|h|^2 / (K * N_t * N_c), so the expected
// NCPE of the output equals target_ncpe. target 0 returns an exact copy.
// Entry order for the noise draws is fixed: subcarrier-major, then user,
// then antenna. The result carries no PathSet.
inline ChannelSet perturb_channel(const ChannelSet& chan, double target_ncpe,
                                  std::uint64_t seed) {
    if (target_ncpe < 0.0)
        throw ConfigError("perturb_channel: target NCPE must be non-negative");
    ChannelSet out{chan.h, std::nullopt, chan.config};
    if (target_ncpe == 0.0)
        return out;

    const double total = channel_energy(chan.h);
    const arma::uword n_entries = chan.h.n_rows * chan.h.n_cols * chan.h.n_slices;
    if (n_entries == 0)
        throw ConfigError("perturb_channel: empty channel");
    const double sigma_per_sq = target_ncpe * total / static_cast<double>(n_entries);
    const double s = std::sqrt(sigma_per_sq / 2.0);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (arma::uword m = 0; m < out.h.n_slices; ++m)
        for (arma::uword k = 0; k < out.h.n_rows; ++k)
            for (arma::uword n = 0; n < out.h.n_cols; ++n)
                out.h(k, n, m) += std::complex<double>(s * gauss(rng), s * gauss(rng));
    return out;
}

} // namespace hbf
