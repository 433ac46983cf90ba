// SPDX-License-Identifier: Apache-2.0
//
// hbfsim — link-quality and efficiency metrics
//
// Per-user/per-subcarrier SINR under linear precoding, ergodic-style spectral
// efficiency (bps/Hz averaged over subcarriers), energy efficiency under a
// component power model, and the normalized channel perturbation error used to
// calibrate CSI robustness experiments.

#pragma once

#include <cmath>
#include <optional>
#include <string>

#include <armadillo>

#include "hbf/channel.hpp"
#include "hbf/config.hpp"
#include "hbf/errors.hpp"

namespace hbf {

enum class Architecture { dynamic_subarray, fully_connected };

// Component power consumption. Defaults: PA efficiency 0.37, 1 W baseband,
// 300 mW per RF chain, 40 mW per phase shifter, 5 mW per switch.
struct PowerModel {
    double epsilon = 0.37;
    double p_bb = 1.0;  // W
    double p_rf = 0.3;  // W per RF chain
    double p_ps = 0.04; // W per phase shifter
    double p_sw = 0.005; // W per switch
    Architecture architecture = Architecture::dynamic_subarray;
};

// SINR of user k on subcarrier m given per-subcarrier effective gains
// T[m] = H_equ[m] * F_BB[m] (entry (k, i): gain from stream i into user k):
// |T(k,k)|^2 / (sum_{i != k} |T(k,i)|^2 + sigma_sq). The interference sum
// skips the diagonal explicitly so near-orthogonal precoders do not suffer
// cancellation.
inline arma::mat sinr_equivalent(const arma::cx_cube& h_equ, const arma::cx_cube& f_bb,
                                 double sigma_sq) {
    if (sigma_sq <= 0.0)
        throw ConfigError("sinr: noise power must be positive");
    if (h_equ.n_slices != f_bb.n_slices || h_equ.n_cols != f_bb.n_rows)
        throw ConfigError("sinr: equivalent channel and beamformer dimensions disagree");
    const arma::uword k_users = h_equ.n_rows;
    const arma::uword n_streams = f_bb.n_cols;
    if (n_streams != k_users)
        throw ConfigError("sinr: expected one stream per user");

    arma::mat out(k_users, h_equ.n_slices);
    for (arma::uword m = 0; m < h_equ.n_slices; ++m) {
        const arma::cx_mat t = h_equ.slice(m) * f_bb.slice(m);
        for (arma::uword k = 0; k < k_users; ++k) {
            const double sig = std::norm(t(k, k));
            double interf = 0.0;
            for (arma::uword i = 0; i < k_users; ++i)
                if (i != k)
                    interf += std::norm(t(k, i));
            out(k, m) = sig / (interf + sigma_sq);
        }
    }
    return out;
}

// SINR computed from the physical channel and the factored precoder
// F_RF * F_BB[m]; the noise power is taken from the configuration.
inline arma::mat sinr(const ChannelSet& chan, const arma::cx_mat& f_rf, const arma::cx_cube& f_bb,
                      const SystemConfig& cfg) {
    if (f_rf.n_rows != chan.h.n_cols)
        throw ConfigError("sinr: analog beamformer row count must match antenna count");
    if (f_rf.n_cols != f_bb.n_rows)
        throw ConfigError("sinr: analog/digital beamformer dimensions disagree");
    arma::cx_cube h_equ(chan.h.n_rows, f_rf.n_cols, chan.h.n_slices);
    for (arma::uword m = 0; m < chan.h.n_slices; ++m)
        h_equ.slice(m) = chan.h.slice(m) * f_rf;
    return sinr_equivalent(h_equ, f_bb, cfg.sigma_m_sq);
}

// R = (1/N_c) sum_m sum_k log2(1 + SINR(k, m)).
inline double spectral_efficiency(const arma::mat& sinr_km, arma::uword n_c) {
    if (n_c == 0 || sinr_km.n_cols != n_c)
        throw ConfigError("spectral_efficiency: n_c must match the SINR column count");
    if (!sinr_km.is_finite() || arma::any(arma::vectorise(sinr_km) < 0.0))
        throw DomainError("spectral_efficiency: SINR entries must be finite and non-negative");
    constexpr double inv_ln2 = 1.4426950408889634074; // 1/ln(2)
    double r = 0.0;
    for (arma::uword m = 0; m < sinr_km.n_cols; ++m)
        for (arma::uword k = 0; k < sinr_km.n_rows; ++k)
            r += std::log1p(sinr_km(k, m)) * inv_ln2;
    return r / static_cast<double>(n_c);
}

// eta = R / (P_t / epsilon + P_BB + N_RF P_RF + P_network), where the
// phase-shifter network term depends on the architecture:
//   dynamic subarray: N_t (P_PS + P_SW)   (one shifter + one switch per antenna)
//   fully connected:  N_t N_RF P_PS       (a shifter per antenna/chain pair, no switches)
inline double energy_efficiency(double se, double p_t, arma::uword n_rf, arma::uword n_t,
                                const PowerModel& pm) {
    if (se < 0.0)
        throw DomainError("energy_efficiency: spectral efficiency must be non-negative");
    if (p_t < 0.0)
        throw DomainError("energy_efficiency: transmit power must be non-negative");
    if (pm.epsilon <= 0.0)
        throw ConfigError("energy_efficiency: PA efficiency must be positive");
    double network = 0.0;
    switch (pm.architecture) {
        case Architecture::dynamic_subarray:
            network = static_cast<double>(n_t) * (pm.p_ps + pm.p_sw);
            break;
        case Architecture::fully_connected:
            network = static_cast<double>(n_t) * static_cast<double>(n_rf) * pm.p_ps;
            break;
    }
    const double denom = p_t / pm.epsilon + pm.p_bb + static_cast<double>(n_rf) * pm.p_rf + network;
    if (denom <= 0.0)
        throw DomainError("energy_efficiency: total consumed power must be positive");
    return se / denom;
}

// Normalized channel perturbation error between a reference channel and its
// perturbed copy: sum ||h - h_per||^2 / sum ||h||^2 over all users/subcarriers.
inline double ncpe(const ChannelSet& h_true, const ChannelSet& h_per) {
    if (h_true.h.n_rows != h_per.h.n_rows || h_true.h.n_cols != h_per.h.n_cols ||
        h_true.h.n_slices != h_per.h.n_slices)
        throw ConfigError("ncpe: channel dimensions disagree");
    const double denom = channel_energy(h_true.h);
    if (denom <= 0.0)
        throw DomainError("ncpe: reference channel has zero energy");
    double num = 0.0;
    for (arma::uword m = 0; m < h_true.h.n_slices; ++m)
        num += arma::accu(arma::square(arma::abs(h_true.h.slice(m) - h_per.h.slice(m))));
    return num / denom;
}

// One evaluated operating point.
struct Evaluation {
    arma::mat sinr;           // K x N_c
    double se = 0.0;          // bps/Hz
    std::optional<double> ee; // bps/Hz/W, present when a power model was supplied
};

inline Evaluation evaluate(const ChannelSet& chan, const arma::cx_mat& f_rf,
                           const arma::cx_cube& f_bb, const SystemConfig& cfg,
                           const std::optional<PowerModel>& pm = std::nullopt,
                           std::optional<double> ee_power = std::nullopt) {
    Evaluation ev;
    ev.sinr = sinr(chan, f_rf, f_bb, cfg);
    ev.se = spectral_efficiency(ev.sinr, cfg.n_c);
    if (pm)
        ev.ee = energy_efficiency(ev.se, ee_power.value_or(cfg.p_t), cfg.k_users, cfg.n_t, *pm);
    return ev;
}

} // namespace hbf
