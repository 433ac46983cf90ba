// SPDX-License-Identifier: Apache-2.0
//
// hbfsim — dynamic-subarray antenna selection
//
// A selection matrix X is binary N_t x K with exactly one 1 per row: every
// antenna is routed (via its switch) to exactly one RF chain. The composed
// analog stage is F_RF = F_tilde ∘ X. This module provides the fixed
// partition patterns, random and channel-gain-greedy selection, a
// coordinate-ascent local search and the exhaustive oracle.
//
// Search note: candidate assignments can leave an RF chain with no antenna,
// making the inner digital solve structurally rank deficient. RankError /
// DegenerateError raised on a *candidate* therefore marks it infeasible
// (skipped); any other solver failure propagates, wrapped with the offending
// (antenna, candidate) context.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <armadillo>

#include "hbf/analog.hpp"
#include "hbf/channel.hpp"
#include "hbf/config.hpp"
#include "hbf/digital.hpp"
#include "hbf/errors.hpp"
#include "hbf/metrics.hpp"

namespace hbf {

// Binary antenna-to-RF-chain routing, one 1 per row.
struct SelectionMatrix {
    arma::umat x; // N_t x K
};

inline void validate_selection(const SelectionMatrix& sel, arma::uword expect_n_t = 0,
                               arma::uword expect_k = 0) {
    if (expect_n_t != 0 && sel.x.n_rows != expect_n_t)
        throw ConfigError("selection: expected " + std::to_string(expect_n_t) +
                          " antenna rows, got " + std::to_string(sel.x.n_rows));
    if (expect_k != 0 && sel.x.n_cols != expect_k)
        throw ConfigError("selection: expected " + std::to_string(expect_k) +
                          " RF-chain columns, got " + std::to_string(sel.x.n_cols));
    for (arma::uword n = 0; n < sel.x.n_rows; ++n) {
        arma::uword ones = 0;
        for (arma::uword k = 0; k < sel.x.n_cols; ++k) {
            if (sel.x(n, k) > 1)
                throw ConfigError("selection: matrix entries must be binary");
            ones += sel.x(n, k);
        }
        if (ones != 1)
            throw ConfigError("selection: antenna " + std::to_string(n) +
                              " must feed exactly one RF chain, feeds " + std::to_string(ones));
    }
}

inline SelectionMatrix selection_from_assignment(const arma::uvec& assign, arma::uword k_users) {
    arma::umat x(assign.n_elem, k_users, arma::fill::zeros);
    for (arma::uword n = 0; n < assign.n_elem; ++n) {
        if (assign(n) >= k_users)
            throw ConfigError("selection: assignment " + std::to_string(assign(n)) +
                              " out of range for " + std::to_string(k_users) + " RF chains");
        x(n, assign(n)) = 1;
    }
    return SelectionMatrix{std::move(x)};
}

// Row-wise position of the single 1 (validates on the way).
inline arma::uvec assignment_of(const SelectionMatrix& sel) {
    validate_selection(sel);
    arma::uvec assign(sel.x.n_rows);
    for (arma::uword n = 0; n < sel.x.n_rows; ++n)
        for (arma::uword k = 0; k < sel.x.n_cols; ++k)
            if (sel.x(n, k) == 1)
                assign(n) = k;
    return assign;
}

enum class FixedPattern { vertical, horizontal, squared, interlaced };

// Deterministic equal-size partitions of the n_tv x n_th grid. Antenna
// (m1, m2) sits at row index m1 * n_th + m2.
//   vertical:   bands of rows,        needs K | n_tv
//   horizontal: bands of columns,     needs K | n_th
//   squared:    K_v x K_h rectangles, needs a factorization K = K_v * K_h
//               with K_v | n_tv, K_h | n_th (K_v nearest sqrt(K), smallest on ties)
//   interlaced: round-robin by flat index, needs K | n_t
inline SelectionMatrix fixed_pattern(FixedPattern kind, const SystemConfig& cfg) {
    const arma::uword k_users = cfg.k_users;
    arma::uvec assign(cfg.n_t);
    auto flat = [&](arma::uword m1, arma::uword m2) { return m1 * cfg.n_th + m2; };
    switch (kind) {
        case FixedPattern::vertical: {
            if (cfg.n_tv % k_users != 0)
                throw ConfigError("fixed_pattern: vertical needs k_users | n_tv");
            const arma::uword band = cfg.n_tv / k_users;
            for (arma::uword m1 = 0; m1 < cfg.n_tv; ++m1)
                for (arma::uword m2 = 0; m2 < cfg.n_th; ++m2)
                    assign(flat(m1, m2)) = m1 / band;
            break;
        }
        case FixedPattern::horizontal: {
            if (cfg.n_th % k_users != 0)
                throw ConfigError("fixed_pattern: horizontal needs k_users | n_th");
            const arma::uword band = cfg.n_th / k_users;
            for (arma::uword m1 = 0; m1 < cfg.n_tv; ++m1)
                for (arma::uword m2 = 0; m2 < cfg.n_th; ++m2)
                    assign(flat(m1, m2)) = m2 / band;
            break;
        }
        case FixedPattern::squared: {
            const double root = std::sqrt(static_cast<double>(k_users));
            arma::uword best_kv = 0;
            double best_dist = std::numeric_limits<double>::infinity();
            for (arma::uword kv = 1; kv <= k_users; ++kv) {
                if (k_users % kv != 0 || cfg.n_tv % kv != 0 || cfg.n_th % (k_users / kv) != 0)
                    continue;
                const double dist = std::abs(static_cast<double>(kv) - root);
                if (dist < best_dist) {
                    best_dist = dist;
                    best_kv = kv;
                }
            }
            if (best_kv == 0)
                throw ConfigError("fixed_pattern: squared has no feasible K_v x K_h "
                                  "factorization for this grid");
            const arma::uword k_v = best_kv;
            const arma::uword k_h = k_users / k_v;
            const arma::uword band_v = cfg.n_tv / k_v;
            const arma::uword band_h = cfg.n_th / k_h;
            for (arma::uword m1 = 0; m1 < cfg.n_tv; ++m1)
                for (arma::uword m2 = 0; m2 < cfg.n_th; ++m2)
                    assign(flat(m1, m2)) = (m1 / band_v) * k_h + (m2 / band_h);
            break;
        }
        case FixedPattern::interlaced: {
            if (cfg.n_t % k_users != 0)
                throw ConfigError("fixed_pattern: interlaced needs k_users | n_t");
            for (arma::uword n = 0; n < cfg.n_t; ++n)
                assign(n) = n % k_users;
            break;
        }
    }
    return selection_from_assignment(assign, k_users);
}

inline SelectionMatrix random_selection(const SystemConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<arma::uword> pick(0, cfg.k_users - 1);
    arma::uvec assign(cfg.n_t);
    for (arma::uword n = 0; n < cfg.n_t; ++n)
        assign(n) = pick(rng);
    return selection_from_assignment(assign, cfg.k_users);
}

// Route each antenna to the user with the largest summed channel energy on
// that antenna, sum_m |h[k,m]_n|^2 (ties: smallest user index).
inline SelectionMatrix gain_greedy_select(const ChannelSet& chan, const SystemConfig& cfg) {
    if (chan.h.n_rows != cfg.k_users || chan.h.n_cols != cfg.n_t)
        throw ConfigError("gain_greedy_select: channel dimensions disagree with config");
    arma::mat energy(cfg.k_users, cfg.n_t, arma::fill::zeros);
    for (arma::uword m = 0; m < chan.h.n_slices; ++m)
        energy += arma::square(arma::abs(chan.h.slice(m)));
    arma::uvec assign(cfg.n_t);
    for (arma::uword n = 0; n < cfg.n_t; ++n) {
        arma::uword best_k = 0;
        for (arma::uword k = 1; k < cfg.k_users; ++k)
            if (energy(k, n) > energy(best_k, n))
                best_k = k;
        assign(n) = best_k;
    }
    return selection_from_assignment(assign, cfg.k_users);
}

// F_RF = F_tilde ∘ X.
inline arma::cx_mat compose(const AnalogBeamformer& analog, const SelectionMatrix& sel) {
    if (analog.f_tilde.n_rows != sel.x.n_rows || analog.f_tilde.n_cols != sel.x.n_cols)
        throw ConfigError("compose: analog beamformer and selection dimensions disagree");
    validate_selection(sel);
    return analog.f_tilde % arma::conv_to<arma::cx_mat>::from(
                                arma::conv_to<arma::mat>::from(sel.x));
}

namespace detail {

// SE of an equivalent channel under `solver`; infeasible candidates (rank
// deficient / degenerate) map to -inf, other failures are wrapped.
inline double candidate_se(const arma::cx_cube& h_equ, const DigitalSolver& solver, double p_t,
                           double sigma_sq, const std::string& context) {
    try {
        const DigitalBeamformer f = solver(EquivalentChannel{h_equ}, p_t, sigma_sq);
        return se_of(h_equ, f.f_bb, sigma_sq);
    } catch (const RankError&) {
        return -std::numeric_limits<double>::infinity();
    } catch (const DegenerateError&) {
        return -std::numeric_limits<double>::infinity();
    } catch (const std::exception& e) {
        throw NumericalError(context + ": inner solver failed: " + e.what());
    }
}

} // namespace detail

struct SelectionSearchResult {
    SelectionMatrix selection;
    std::vector<double> se_trace; // SE at init, then after each antenna decision
};

// Cyclic single-antenna coordinate ascent: sweeps the antennas in index
// order; for each antenna evaluates every reassignment with the inner
// digital solver on the composed equivalent channel and keeps the assignment
// with maximal SE (the current one on ties). Terminates after a sweep with
// no change, or after max_sweeps. The SE trace is non-decreasing by
// construction and records one entry per antenna decision.
inline SelectionSearchResult coordinate_ascent_select(const ChannelSet& chan,
                                                      const AnalogBeamformer& analog,
                                                      const SelectionMatrix& init,
                                                      const DigitalSolver& solver,
                                                      arma::uword max_sweeps,
                                                      const SystemConfig& cfg) {
    cfg.validate();
    if (max_sweeps == 0)
        throw ConfigError("coordinate_ascent_select: max_sweeps must be at least 1");
    if (chan.h.n_rows != cfg.k_users || chan.h.n_cols != cfg.n_t || chan.h.n_slices != cfg.n_c)
        throw ConfigError("coordinate_ascent_select: channel dimensions disagree with config");
    const arma::uword k_users = cfg.k_users;
    const arma::uword n_t = cfg.n_t;
    const arma::uword n_c = cfg.n_c;

    arma::uvec assign = assignment_of(init);
    if (assign.n_elem != n_t)
        throw ConfigError("coordinate_ascent_select: init selection has wrong antenna count");

    // Equivalent channel of the current assignment, updated incrementally:
    // moving antenna n from chain j0 to j1 shifts the rank-one contribution
    // h[:,n,m] * f_tilde(n, :) between columns j0 and j1.
    arma::cx_cube h_equ(k_users, k_users, n_c);
    {
        const arma::cx_mat f_rf = compose(analog, selection_from_assignment(assign, k_users));
        for (arma::uword m = 0; m < n_c; ++m)
            h_equ.slice(m) = chan.h.slice(m) * f_rf;
    }

    double se_cur = detail::candidate_se(h_equ, solver, cfg.p_t, cfg.sigma_m_sq,
                                         "coordinate_ascent_select (init)");
    std::vector<double> trace{se_cur};

    for (arma::uword sweep = 0; sweep < max_sweeps; ++sweep) {
        bool changed = false;
        for (arma::uword n = 0; n < n_t; ++n) {
            const arma::uword cur = assign(n);
            // Base: current equivalent channel with antenna n disconnected.
            arma::cx_cube base = h_equ;
            for (arma::uword m = 0; m < n_c; ++m)
                base.slice(m).col(cur) -= chan.h.slice(m).col(n) * analog.f_tilde(n, cur);

            arma::uword best_j = cur;
            double best_se = se_cur;
            arma::cx_cube best_cube;
            for (arma::uword j = 0; j < k_users; ++j) {
                if (j == cur)
                    continue;
                arma::cx_cube cand = base;
                for (arma::uword m = 0; m < n_c; ++m)
                    cand.slice(m).col(j) += chan.h.slice(m).col(n) * analog.f_tilde(n, j);
                const double se_j = detail::candidate_se(
                    cand, solver, cfg.p_t, cfg.sigma_m_sq,
                    "coordinate_ascent_select (antenna " + std::to_string(n) + ", candidate " +
                        std::to_string(j) + ")");
                if (se_j > best_se) {
                    best_se = se_j;
                    best_j = j;
                    best_cube = std::move(cand);
                }
            }
            if (best_j != cur) {
                assign(n) = best_j;
                h_equ = std::move(best_cube);
                se_cur = best_se;
                changed = true;
            }
            trace.push_back(se_cur);
        }
        if (!changed)
            break;
    }
    return SelectionSearchResult{selection_from_assignment(assign, k_users), std::move(trace)};
}

struct ExhaustiveResult {
    SelectionMatrix selection;
    double se;
};

// Enumerate all K^{N_t} assignments (refused above 1e6 candidates) and
// return the SE-maximal one; ties keep the lexicographically smallest
// assignment. Intended as a ground-truth oracle at desk scale.
inline ExhaustiveResult exhaustive_select(const ChannelSet& chan, const AnalogBeamformer& analog,
                                          const DigitalSolver& solver, const SystemConfig& cfg) {
    cfg.validate();
    if (chan.h.n_rows != cfg.k_users || chan.h.n_cols != cfg.n_t || chan.h.n_slices != cfg.n_c)
        throw ConfigError("exhaustive_select: channel dimensions disagree with config");
    const double n_candidates =
        std::pow(static_cast<double>(cfg.k_users), static_cast<double>(cfg.n_t));
    if (!(n_candidates <= 1e6)) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.4g", n_candidates);
        throw ConfigError("exhaustive_select: K^N_t = " + std::string(buf) +
                          " exceeds the 1e6 candidate guard");
    }

    arma::uvec assign(cfg.n_t, arma::fill::zeros);
    arma::uvec best_assign;
    double best_se = -std::numeric_limits<double>::infinity();
    std::uint64_t index = 0;
    while (true) {
        arma::cx_cube h_equ(cfg.k_users, cfg.k_users, cfg.n_c);
        const arma::cx_mat f_rf = compose(analog, selection_from_assignment(assign, cfg.k_users));
        for (arma::uword m = 0; m < cfg.n_c; ++m)
            h_equ.slice(m) = chan.h.slice(m) * f_rf;
        const double se =
            detail::candidate_se(h_equ, solver, cfg.p_t, cfg.sigma_m_sq,
                                 "exhaustive_select (candidate " + std::to_string(index) + ")");
        if (se > best_se) {
            best_se = se;
            best_assign = assign;
        }
        ++index;
        // Odometer increment from the last antenna: lexicographic order.
        arma::sword pos = static_cast<arma::sword>(cfg.n_t) - 1;
        while (pos >= 0) {
            if (++assign(static_cast<arma::uword>(pos)) < cfg.k_users)
                break;
            assign(static_cast<arma::uword>(pos)) = 0;
            --pos;
        }
        if (pos < 0)
            break;
    }
    if (best_assign.n_elem == 0)
        throw NumericalError("exhaustive_select: no feasible assignment found");
    return ExhaustiveResult{selection_from_assignment(best_assign, cfg.k_users), best_se};
}

} // namespace hbf
