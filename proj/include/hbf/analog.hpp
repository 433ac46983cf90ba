// SPDX-License-Identifier: Apache-2.0
//
// hbfsim — analog beamforming (per-RF-chain phase profiles)
//
// The analog stage is a full N_t x K matrix of unit-modulus entries
// (magnitude 1/sqrt(N_t)); the dynamic-subarray connectivity is applied
// separately by masking with a selection matrix (see selection.hpp).

#pragma once

#include <cmath>
#include <complex>

#include <armadillo>

#include "hbf/channel.hpp"
#include "hbf/config.hpp"
#include "hbf/errors.hpp"

namespace hbf {

// Unconstrained-connectivity phase profile; entry magnitudes are 1/sqrt(N_t).
struct AnalogBeamformer {
    arma::cx_mat f_tilde; // N_t x K
};

// Steer each RF chain at its user's LoS direction: column k is the conjugate
// of the LoS steering vector, scaled to 1/sqrt(N_t).
inline AnalogBeamformer beam_align_los(const PathSet& paths, const SystemConfig& cfg) {
    if (paths.theta_los.n_elem != cfg.k_users || paths.phi_los.n_elem != cfg.k_users)
        throw ConfigError("beam_align_los: path set user count does not match config");
    const double amp = 1.0 / std::sqrt(static_cast<double>(cfg.n_t));
    arma::cx_mat f(cfg.n_t, cfg.k_users);
    for (arma::uword k = 0; k < cfg.k_users; ++k)
        f.col(k) = amp * arma::conj(array_response(paths.theta_los(k), paths.phi_los(k), cfg));
    return AnalogBeamformer{std::move(f)};
}

// Phase-match the subcarrier-averaged channel: column k entry n is
// (1/sqrt(N_t)) * exp(-j arg(mean_m h[k,m]_n)), which maximizes
// |mean_h^T f| under the unit-modulus constraint. A zero mean entry gets
// phase 0 by convention.
inline AnalogBeamformer conj_phase_match(const ChannelSet& chan) {
    const arma::uword k_users = chan.h.n_rows;
    const arma::uword n_t = chan.h.n_cols;
    if (chan.h.n_slices == 0)
        throw ConfigError("conj_phase_match: channel has no subcarriers");
    arma::cx_mat h_avg(k_users, n_t, arma::fill::zeros);
    for (arma::uword m = 0; m < chan.h.n_slices; ++m)
        h_avg += chan.h.slice(m);
    h_avg /= static_cast<double>(chan.h.n_slices);

    const double amp = 1.0 / std::sqrt(static_cast<double>(n_t));
    arma::cx_mat f(n_t, k_users);
    for (arma::uword k = 0; k < k_users; ++k)
        for (arma::uword n = 0; n < n_t; ++n)
            f(n, k) = std::polar(amp, -std::arg(h_avg(k, n)));
    return AnalogBeamformer{std::move(f)};
}

} // namespace hbf
