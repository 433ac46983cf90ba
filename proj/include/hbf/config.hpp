// SPDX-License-Identifier: Apache-2.0
//
// hbfsim — system-level configuration
//
// SystemConfig bundles the constants shared by every stage of the pipeline:
// UPA geometry, OFDM numerology, multipath statistics and the per-subcarrier
// transmit power budget. Derived quantities (total antenna count, wavelength,
// element spacing, per-subcarrier noise power) are filled in by derive() so a
// caller only has to set the primary fields it cares about.

#pragma once

#include <cmath>
#include <string>

#include <armadillo>

#include "hbf/errors.hpp"

namespace hbf {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s
inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Power unit conversions. dBm values are referenced to 1 mW.
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

struct SystemConfig {
    // UPA geometry: n_tv rows (vertical) by n_th columns (horizontal).
    arma::uword n_tv = 8;
    arma::uword n_th = 8;
    arma::uword n_t = 0; // derived: n_tv * n_th

    // One RF chain per served user (n_rf == k_users).
    arma::uword k_users = 4;

    // OFDM numerology.
    arma::uword n_c = 32;      // subcarriers
    double f_c = 3.0e9;        // carrier frequency, Hz
    double bandwidth = 30.0e6; // system bandwidth, Hz
    double lambda = 0.0;       // derived: wavelength, m
    double d = 0.0;            // element spacing, m; <= 0 requests lambda/2

    // Per-subcarrier noise power. <= 0 requests derivation from the PSD:
    // sigma_m_sq = 10^((noise_psd_dbm_hz - 30)/10) * bandwidth / n_c.
    double noise_psd_dbm_hz = -174.0;
    double sigma_m_sq = 0.0; // W

    // Per-subcarrier transmit power budget ||F_RF F_BB[m]||_F^2 <= p_t.
    double p_t = 0.01; // W

    // Multipath statistics.
    arma::uword l_p = 30;           // NLoS paths per user
    double delay_max_symbols = 8.0; // delays uniform on [0, delay_max_symbols * T_s]
    double angle_spread_rad = deg_to_rad(10.0); // NLoS offset around the LoS direction
    double aod_range_rad = kPi / 3.0;           // LoS AoD/AoA uniform on [-range, range]

    // User distances in metres; a single entry is broadcast to all users.
    arma::vec r_k = arma::vec{25.0e3};

    double symbol_period() const { return 1.0 / bandwidth; }

    // Fill derived fields from the primary ones. Idempotent.
    SystemConfig& derive() {
        n_t = n_tv * n_th;
        lambda = kSpeedOfLight / f_c;
        if (d <= 0.0)
            d = lambda / 2.0;
        if (sigma_m_sq <= 0.0)
            sigma_m_sq = dbm_to_watts(noise_psd_dbm_hz) * bandwidth / static_cast<double>(n_c);
        if (r_k.n_elem == 1 && k_users > 1)
            r_k = arma::vec(k_users, arma::fill::value(r_k(0)));
        return *this;
    }

    void validate() const {
        if (n_tv == 0 || n_th == 0)
            throw ConfigError("config: antenna grid dimensions must be positive");
        if (n_t != n_tv * n_th)
            throw ConfigError("config: n_t must equal n_tv * n_th (call derive())");
        if (k_users == 0)
            throw ConfigError("config: k_users must be positive");
        if (n_c == 0)
            throw ConfigError("config: n_c must be positive");
        if (f_c <= 0.0 || bandwidth <= 0.0)
            throw ConfigError("config: carrier frequency and bandwidth must be positive");
        if (lambda <= 0.0 || d <= 0.0)
            throw ConfigError("config: wavelength and element spacing must be positive (call derive())");
        if (sigma_m_sq <= 0.0)
            throw ConfigError("config: sigma_m_sq must be positive (call derive())");
        if (p_t <= 0.0)
            throw ConfigError("config: p_t must be positive");
        if (delay_max_symbols < 0.0)
            throw ConfigError("config: delay_max_symbols must be non-negative");
        if (angle_spread_rad < 0.0 || aod_range_rad < 0.0)
            throw ConfigError("config: angular spreads must be non-negative");
        if (r_k.n_elem != k_users)
            throw ConfigError("config: r_k must have one distance per user, got " +
                              std::to_string(r_k.n_elem) + " for " + std::to_string(k_users) +
                              " users");
        if (arma::any(r_k <= 0.0))
            throw ConfigError("config: user distances must be positive");
    }
};

// Convenience: the default downlink scenario with derived fields filled in.
inline SystemConfig default_config() { return SystemConfig{}.derive(); }

} // namespace hbf
