// SPDX-License-Identifier: Apache-2.0
//
// hbfsim — per-subcarrier digital beamforming
//
// Given the equivalent channel H_equ[m] = H[m] * F_RF (rows g_k^T), this
// module provides
//   * zero forcing (scaled channel inverse),
//   * weighted-MMSE iteration with an exact per-subcarrier power constraint
//     enforced through a water-level bisection,
//   * a low-dimensional parametrization of the WMMSE update
//       f_k = (b I + sum_l c_l conj(g_l) g_l^T)^{-1} a_k conj(g_k)
//     with per-subcarrier scalars (a in C^K, b >= 0, c in R_+^K), and a
//     derivative-free projected gradient ascent over those parameters.
//
// All solvers return beamformers satisfying ||F_BB[m]||_F^2 = p_t exactly
// (up to scaling roundoff) on every subcarrier.

#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <armadillo>

#include "hbf/errors.hpp"
#include "hbf/metrics.hpp"

namespace hbf {

// Equivalent (baseband) channel after the analog stage: slice m row k holds
// g_k^T = h^T[k,m] * F_RF.
struct EquivalentChannel {
    arma::cx_cube h_equ; // K x K x N_c
};

// Digital beamformer: slice m column k is f_BB[k,m].
struct DigitalBeamformer {
    arma::cx_cube f_bb; // K x K x N_c
};

// Snapshot of the WMMSE auxiliary variables. The stored (u, w, mu) are the
// ones whose f-update produced the returned (best-SE) beamformer iterate, so
// feeding them through wmmse_to_params/param_beamformer reproduces it.
struct WmmseState {
    arma::cx_mat u; // K x N_c, MMSE receive scalars
    arma::mat w;    // K x N_c, MSE weights
    arma::vec mu;   // N_c, per-subcarrier power water-levels
    std::vector<double> se_trace; // SE after init and after each iteration
};

// Per-subcarrier beamforming parameters (see header comment).
struct ParamSet {
    arma::cx_mat a; // K x N_c
    arma::vec b;    // N_c, b >= 0 expected
    arma::mat c;    // K x N_c, c >= 0 expected
};

// full_sum: u and w denominators include the own-signal term (self-consistent
// MMSE receiver / MSE weight; SE is monotone non-decreasing across
// iterations). printed: the own-signal term is excluded from the
// denominators; kept selectable as a fidelity experiment — its weights can
// become negative and monotonicity is not guaranteed.
enum class WmmseVariant { full_sum, printed };

struct WmmseOptions {
    arma::uword max_iters = 200;
    double tol = 1e-6;      // stop when |SE_i - SE_{i-1}| < tol
    WmmseVariant variant = WmmseVariant::full_sum;
    double mu_tol = 1e-12;  // relative power tolerance of the inner bisection
    double cond_limit = 1e8; // default init: ZF below this condition number, else matched filter
};

inline EquivalentChannel equivalent_channel(const ChannelSet& chan, const arma::cx_mat& f_rf) {
    if (f_rf.n_rows != chan.h.n_cols)
        throw ConfigError("equivalent_channel: analog beamformer row count must match antennas");
    arma::cx_cube h_equ(chan.h.n_rows, f_rf.n_cols, chan.h.n_slices);
    for (arma::uword m = 0; m < chan.h.n_slices; ++m)
        h_equ.slice(m) = chan.h.slice(m) * f_rf;
    return EquivalentChannel{std::move(h_equ)};
}

// Scale every subcarrier's beamformer onto the power sphere ||F||_F^2 = p_t.
inline void project_power(arma::cx_cube& f_bb, double p_t) {
    if (p_t <= 0.0)
        throw ConfigError("project_power: power budget must be positive");
    for (arma::uword m = 0; m < f_bb.n_slices; ++m) {
        const double nn = arma::norm(f_bb.slice(m), "fro");
        if (nn == 0.0)
            throw DegenerateError("project_power: zero-norm beamformer at subcarrier " +
                                  std::to_string(m));
        f_bb.slice(m) *= std::sqrt(p_t) / nn;
    }
}

namespace detail {

inline double se_of(const arma::cx_cube& h_equ, const arma::cx_cube& f_bb, double sigma_sq) {
    return spectral_efficiency(sinr_equivalent(h_equ, f_bb, sigma_sq), h_equ.n_slices);
}

// Solve (b I + H^H diag(c) H) F = H^H diag(a) for one subcarrier.
inline arma::cx_mat regularized_update(const arma::cx_mat& h_m, const arma::cx_vec& a, double b,
                                       const arma::vec& c, const std::string& who) {
    arma::cx_mat m = h_m.t() * arma::diagmat(arma::conv_to<arma::cx_vec>::from(c)) * h_m;
    m.diag() += b;
    const arma::cx_mat q = h_m.t() * arma::diagmat(a);
    arma::cx_mat f;
    if (!arma::solve(f, m, q, arma::solve_opts::no_approx) || !f.is_finite())
        throw RankError(who + ": singular regularized system");
    return f;
}

} // namespace detail

// Zero forcing: F_BB[m] proportional to H_equ[m]^{-1}, scaled to the power
// budget. Refuses ill-conditioned channels instead of amplifying noise.
inline DigitalBeamformer zf(const EquivalentChannel& he, double p_t) {
    if (he.h_equ.n_cols != he.h_equ.n_rows)
        throw ConfigError("zf: equivalent channel must be square per subcarrier");
    if (p_t <= 0.0)
        throw ConfigError("zf: power budget must be positive");
    arma::cx_cube f(he.h_equ.n_rows, he.h_equ.n_rows, he.h_equ.n_slices);
    for (arma::uword m = 0; m < he.h_equ.n_slices; ++m) {
        const arma::cx_mat& h_m = he.h_equ.slice(m);
        const double cnd = arma::cond(h_m);
        if (!std::isfinite(cnd) || cnd > 1e12)
            throw RankError("zf: equivalent channel at subcarrier " + std::to_string(m) +
                            " is rank deficient (cond > 1e12)");
        arma::cx_mat w;
        if (!arma::inv(w, h_m))
            throw RankError("zf: inversion failed at subcarrier " + std::to_string(m));
        f.slice(m) = (std::sqrt(p_t) / arma::norm(w, "fro")) * w;
    }
    return DigitalBeamformer{std::move(f)};
}

// Eigen-factorized form of the regularized update at one subcarrier:
// with A = V diag(lambda) V^H (Hermitian) and B = V^H Q, the update
// F(mu) = (mu I + A)^{-1} Q has squared norm P(mu) = sum_i s_i/(mu+lambda_i)^2
// with s_i the squared row norms of B. P is strictly decreasing in mu > 0
// for PSD A, which the water-level bisection relies on.
struct QuadraticTerms {
    arma::vec lambda;   // eigenvalues of A (tiny negative roundoff clamped to 0)
    arma::cx_mat basis; // eigenvectors V
    arma::cx_mat b;     // V^H Q
    arma::vec s;        // squared row norms of b

    static QuadraticTerms make(const arma::cx_mat& a_mat, const arma::cx_mat& q) {
        if (a_mat.n_rows != a_mat.n_cols || q.n_rows != a_mat.n_rows)
            throw ConfigError("mu_bisection: quadratic term dimensions disagree");
        QuadraticTerms qt;
        if (!arma::eig_sym(qt.lambda, qt.basis, a_mat))
            throw NumericalError("mu_bisection: eigendecomposition failed");
        const double scale = qt.lambda.n_elem ? arma::abs(qt.lambda).max() : 0.0;
        for (arma::uword i = 0; i < qt.lambda.n_elem; ++i)
            if (qt.lambda(i) < 0.0 && qt.lambda(i) > -1e-12 * scale)
                qt.lambda(i) = 0.0;
        qt.b = qt.basis.t() * q;
        qt.s = arma::sum(arma::square(arma::abs(qt.b)), 1);
        return qt;
    }

    double power(double mu) const {
        double p = 0.0;
        for (arma::uword i = 0; i < s.n_elem; ++i) {
            if (s(i) == 0.0)
                continue; // exact-zero rows carry no energy even at a pole
            const double den = mu + lambda(i);
            if (den <= 0.0)
                return std::numeric_limits<double>::infinity();
            p += s(i) / (den * den);
        }
        return p;
    }

    arma::cx_mat beamformer(double mu) const {
        arma::cx_mat scaled = b;
        for (arma::uword i = 0; i < s.n_elem; ++i) {
            const double den = mu + lambda(i);
            scaled.row(i) *= den > 0.0 ? 1.0 / den : 0.0;
        }
        return basis * scaled;
    }
};

// Smallest mu >= 0 with ||(mu I + A)^{-1} Q||_F^2 <= p_t: returns 0 when the
// unconstrained update already fits the budget, otherwise brackets by
// doubling mu_hi from 1 until the power drops below p_t and bisects until
// |P(mu) - p_t| / p_t < tol (at most 200 bisection steps).
inline double mu_bisection(const QuadraticTerms& qt, double p_t, double tol = 1e-8) {
    if (p_t <= 0.0)
        throw ConfigError("mu_bisection: power budget must be positive");
    if (tol <= 0.0)
        throw ConfigError("mu_bisection: tolerance must be positive");
    if (qt.power(0.0) <= p_t)
        return 0.0;
    double hi = 1.0;
    arma::uword doublings = 0;
    while (qt.power(hi) >= p_t) {
        hi *= 2.0;
        if (++doublings > 200)
            throw NumericalError("mu_bisection: bracket not found after 200 doublings");
    }
    double lo = doublings > 0 ? hi / 2.0 : 0.0;
    double mid = hi;
    for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (lo + hi);
        const double p = qt.power(mid);
        if (std::abs(p - p_t) < tol * p_t)
            return mid;
        (p > p_t ? lo : hi) = mid;
    }
    return mid;
}

inline double mu_bisection(const arma::cx_mat& a_mat, const arma::cx_mat& q, double p_t,
                           double tol = 1e-8) {
    return mu_bisection(QuadraticTerms::make(a_mat, q), p_t, tol);
}

// One raw WMMSE beamformer update (no power projection): per subcarrier,
// F[m] = (mu[m] I + H^H diag(w|u|^2) H)^{-1} H^H diag(u w) with H = H_equ[m].
inline DigitalBeamformer wmmse_f_update(const EquivalentChannel& he, const arma::cx_mat& u,
                                        const arma::mat& w, const arma::vec& mu) {
    const arma::uword k_users = he.h_equ.n_rows;
    const arma::uword n_c = he.h_equ.n_slices;
    if (u.n_rows != k_users || u.n_cols != n_c || w.n_rows != k_users || w.n_cols != n_c ||
        mu.n_elem != n_c)
        throw ConfigError("wmmse_f_update: state dimensions disagree");
    arma::cx_cube f(k_users, k_users, n_c);
    for (arma::uword m = 0; m < n_c; ++m) {
        const arma::vec c = w.col(m) % arma::square(arma::abs(u.col(m)));
        const arma::cx_vec a = u.col(m) % arma::conv_to<arma::cx_vec>::from(w.col(m));
        f.slice(m) = detail::regularized_update(he.h_equ.slice(m), a, mu(m), c,
                                                "wmmse_f_update (subcarrier " +
                                                    std::to_string(m) + ")");
    }
    return DigitalBeamformer{std::move(f)};
}

inline DigitalBeamformer wmmse_f_update(const EquivalentChannel& he, const WmmseState& st) {
    return wmmse_f_update(he, st.u, st.w, st.mu);
}

// Weighted-MMSE iteration with exact per-subcarrier power projection. Starts
// from `init` (projected onto the power sphere), alternates the closed-form
// (u, w) update with the regularized f-update, and returns the iterate with
// the highest recorded SE together with the state that produced it. The SE
// trace holds the initial value followed by one entry per iteration.
inline std::pair<DigitalBeamformer, WmmseState> wmmse(const EquivalentChannel& he, double p_t,
                                                      double sigma_sq,
                                                      const DigitalBeamformer& init,
                                                      const WmmseOptions& opt = {}) {
    const arma::uword k_users = he.h_equ.n_rows;
    const arma::uword n_c = he.h_equ.n_slices;
    if (he.h_equ.n_cols != k_users)
        throw ConfigError("wmmse: equivalent channel must be K x K per subcarrier");
    if (init.f_bb.n_rows != k_users || init.f_bb.n_cols != k_users || init.f_bb.n_slices != n_c)
        throw ConfigError("wmmse: init dimensions disagree with the equivalent channel");
    if (p_t <= 0.0 || sigma_sq <= 0.0)
        throw ConfigError("wmmse: p_t and sigma_sq must be positive");
    if (opt.max_iters == 0)
        throw ConfigError("wmmse: max_iters must be at least 1");

    arma::cx_cube f = init.f_bb;
    project_power(f, p_t);

    WmmseState st;
    st.se_trace.reserve(opt.max_iters + 1);
    double se_cur = detail::se_of(he.h_equ, f, sigma_sq);
    if (!std::isfinite(se_cur))
        throw NumericalError("wmmse: non-finite SE at the initial beamformer");
    st.se_trace.push_back(se_cur);

    arma::cx_mat u(k_users, n_c);
    arma::mat w(k_users, n_c);
    arma::vec mu(n_c, arma::fill::zeros);

    arma::cx_cube best_f = f;
    double best_se = -std::numeric_limits<double>::infinity();
    arma::cx_mat best_u;
    arma::mat best_w;
    arma::vec best_mu;

    for (arma::uword iter = 1; iter <= opt.max_iters; ++iter) {
        for (arma::uword m = 0; m < n_c; ++m) {
            const arma::cx_mat& h_m = he.h_equ.slice(m);
            const arma::cx_mat t = h_m * f.slice(m);
            for (arma::uword k = 0; k < k_users; ++k) {
                const double sig = std::norm(t(k, k));
                double interf = 0.0;
                for (arma::uword i = 0; i < k_users; ++i)
                    if (i != k)
                        interf += std::norm(t(k, i));
                const double base = interf + sigma_sq;
                if (opt.variant == WmmseVariant::full_sum) {
                    u(k, m) = t(k, k) / (base + sig);
                    w(k, m) = (base + sig) / base; // = 1 + SINR_k >= 1
                } else {
                    u(k, m) = t(k, k) / base;
                    // With own-signal excluded the weight flips sign once
                    // SINR exceeds 1, which breaks the MSE interpretation.
                    const double den = base - sig;
                    if (den <= 0.0)
                        throw NumericalError("wmmse: printed-variant weight non-positive at "
                                             "subcarrier " + std::to_string(m));
                    w(k, m) = base / den;
                }
            }
            const arma::vec c = w.col(m) % arma::square(arma::abs(u.col(m)));
            const arma::cx_vec a = u.col(m) % arma::conv_to<arma::cx_vec>::from(w.col(m));
            const arma::cx_mat a_mat =
                h_m.t() * arma::diagmat(arma::conv_to<arma::cx_vec>::from(c)) * h_m;
            const arma::cx_mat q = h_m.t() * arma::diagmat(a);
            const QuadraticTerms qt = QuadraticTerms::make(a_mat, q);
            mu(m) = mu_bisection(qt, p_t, opt.mu_tol);
            arma::cx_mat f_m = qt.beamformer(mu(m));
            const double nn = arma::norm(f_m, "fro");
            if (!(nn > 0.0))
                throw NumericalError("wmmse: zero beamformer update at subcarrier " +
                                     std::to_string(m) + ", iteration " + std::to_string(iter));
            f.slice(m) = (std::sqrt(p_t) / nn) * f_m;
        }
        const double se_new = detail::se_of(he.h_equ, f, sigma_sq);
        if (!std::isfinite(se_new))
            throw NumericalError("wmmse: non-finite SE at iteration " + std::to_string(iter));
        st.se_trace.push_back(se_new);
        if (se_new > best_se) {
            best_se = se_new;
            best_f = f;
            best_u = u;
            best_w = w;
            best_mu = mu;
        }
        if (std::abs(se_new - se_cur) < opt.tol) {
            se_cur = se_new;
            break;
        }
        se_cur = se_new;
    }

    st.u = std::move(best_u);
    st.w = std::move(best_w);
    st.mu = std::move(best_mu);
    return {DigitalBeamformer{std::move(best_f)}, std::move(st)};
}

// Default initialization: per subcarrier, ZF when the equivalent channel is
// well conditioned, matched filter (H^H columns) otherwise.
inline std::pair<DigitalBeamformer, WmmseState> wmmse(const EquivalentChannel& he, double p_t,
                                                      double sigma_sq,
                                                      const WmmseOptions& opt = {}) {
    const arma::uword k_users = he.h_equ.n_rows;
    const arma::uword n_c = he.h_equ.n_slices;
    if (he.h_equ.n_cols != k_users)
        throw ConfigError("wmmse: equivalent channel must be K x K per subcarrier");
    arma::cx_cube f0(k_users, k_users, n_c);
    for (arma::uword m = 0; m < n_c; ++m) {
        const arma::cx_mat& h_m = he.h_equ.slice(m);
        const double cnd = arma::cond(h_m);
        arma::cx_mat w;
        if (std::isfinite(cnd) && cnd <= opt.cond_limit && arma::inv(w, h_m))
            f0.slice(m) = w;
        else
            f0.slice(m) = h_m.t();
    }
    project_power(f0, p_t); // throws DegenerateError on an all-zero equivalent channel
    return wmmse(he, p_t, sigma_sq, DigitalBeamformer{std::move(f0)}, opt);
}

// Map a WMMSE state onto the parametrization: a = u w, b = mu, c = w |u|^2.
// param_beamformer(wmmse_to_params(state)) then reproduces
// wmmse_f_update(state) exactly (up to the final power projection).
inline ParamSet wmmse_to_params(const WmmseState& st) {
    ParamSet ps;
    ps.a = st.u % arma::conv_to<arma::cx_mat>::from(st.w);
    ps.b = st.mu;
    ps.c = st.w % arma::square(arma::abs(st.u));
    return ps;
}

// Evaluate the parametrized beamformer and project onto the power sphere.
// The map is invariant to a common positive rescale of (a[,m], b[m], c[,m]).
// b and c are expected non-negative; small negative probe values are
// tolerated numerically (the regularized system may then be indefinite and
// can raise RankError).
inline DigitalBeamformer param_beamformer(const EquivalentChannel& he, const ParamSet& ps,
                                          double p_t) {
    const arma::uword k_users = he.h_equ.n_rows;
    const arma::uword n_c = he.h_equ.n_slices;
    if (he.h_equ.n_cols != k_users)
        throw ConfigError("param_beamformer: equivalent channel must be K x K per subcarrier");
    if (ps.a.n_rows != k_users || ps.a.n_cols != n_c || ps.b.n_elem != n_c ||
        ps.c.n_rows != k_users || ps.c.n_cols != n_c)
        throw ConfigError("param_beamformer: parameter dimensions disagree");
    if (!ps.a.is_finite() || !ps.b.is_finite() || !ps.c.is_finite())
        throw ConfigError("param_beamformer: parameters must be finite");
    if (p_t <= 0.0)
        throw ConfigError("param_beamformer: power budget must be positive");

    arma::cx_cube f(k_users, k_users, n_c);
    for (arma::uword m = 0; m < n_c; ++m) {
        arma::cx_mat f_m =
            detail::regularized_update(he.h_equ.slice(m), ps.a.col(m), ps.b(m), ps.c.col(m),
                                       "param_beamformer (subcarrier " + std::to_string(m) + ")");
        const double nn = arma::norm(f_m, "fro");
        if (nn == 0.0)
            throw DegenerateError("param_beamformer: zero-norm beamformer at subcarrier " +
                                  std::to_string(m) + " (all linear weights zero?)");
        f.slice(m) = (std::sqrt(p_t) / nn) * f_m;
    }
    return DigitalBeamformer{std::move(f)};
}

inline ParamSet default_params(arma::uword k_users, arma::uword n_c) {
    return ParamSet{arma::cx_mat(k_users, n_c, arma::fill::ones),
                    arma::vec(n_c, arma::fill::ones), arma::mat(k_users, n_c, arma::fill::ones)};
}

struct AscentOptions {
    arma::uword max_iters = 300;  // accepted ascent steps
    double fd_step_rel = 1e-6;    // relative central-difference step ...
    double fd_step_abs = 1e-2;    // ... with this absolute floor added to |x|
    double init_step = 0.25;      // initial line-search step along the unit gradient
    double step_grow = 2.0;       // growth after an accepted step
    arma::uword max_halvings = 40;
    double step_min = 1e-12;      // stop when the line search collapses
};

// Derivative-free projected gradient ascent of the SE over the parameter set
// (finite-difference gradient, backtracking line search, b/c clamped to
// R_+). Parameters are first normalized per subcarrier (an SE-invariant
// rescale) so the relative FD steps are well conditioned. Returns the final
// (= best-seen, the search only accepts strict improvements) parameters and
// the SE trace starting at the initial value. Probe points where the
// objective is undefined (singular system) are treated as rejected.
inline std::pair<ParamSet, std::vector<double>> param_ascent(const EquivalentChannel& he,
                                                             double p_t, double sigma_sq,
                                                             const ParamSet& init,
                                                             const AscentOptions& opt = {}) {
    const arma::uword k_users = he.h_equ.n_rows;
    const arma::uword n_c = he.h_equ.n_slices;
    if (he.h_equ.n_cols != k_users)
        throw ConfigError("param_ascent: equivalent channel must be K x K per subcarrier");
    if (init.a.n_rows != k_users || init.a.n_cols != n_c || init.b.n_elem != n_c ||
        init.c.n_rows != k_users || init.c.n_cols != n_c)
        throw ConfigError("param_ascent: parameter dimensions disagree");
    if (!init.a.is_finite() || !init.b.is_finite() || !init.c.is_finite())
        throw ConfigError("param_ascent: parameters must be finite");
    if (arma::any(init.b < 0.0) || arma::any(arma::vectorise(init.c) < 0.0))
        throw ConfigError("param_ascent: b and c must be non-negative");
    if (p_t <= 0.0 || sigma_sq <= 0.0)
        throw ConfigError("param_ascent: p_t and sigma_sq must be positive");

    ParamSet ps = init;
    for (arma::uword m = 0; m < n_c; ++m) {
        const double scale = std::max({arma::abs(ps.a.col(m)).max(), ps.b(m), ps.c.col(m).max()});
        if (scale <= 0.0)
            throw DegenerateError("param_ascent: all parameters of subcarrier " +
                                  std::to_string(m) + " are zero");
        ps.a.col(m) /= scale;
        ps.b(m) /= scale;
        ps.c.col(m) /= scale;
    }

    const arma::uword na = k_users * n_c;
    const arma::uword dim = 3 * na + n_c; // Re a, Im a, b, c
    auto pack = [&](const ParamSet& p) {
        arma::vec x(dim);
        x.subvec(0, na - 1) = arma::vectorise(arma::real(p.a));
        x.subvec(na, 2 * na - 1) = arma::vectorise(arma::imag(p.a));
        x.subvec(2 * na, 2 * na + n_c - 1) = p.b;
        x.subvec(2 * na + n_c, dim - 1) = arma::vectorise(p.c);
        return x;
    };
    auto unpack = [&](const arma::vec& x) {
        ParamSet p;
        const arma::mat re = arma::reshape(x.subvec(0, na - 1), k_users, n_c);
        const arma::mat im = arma::reshape(x.subvec(na, 2 * na - 1), k_users, n_c);
        p.a = arma::cx_mat(re, im);
        p.b = x.subvec(2 * na, 2 * na + n_c - 1);
        p.c = arma::reshape(x.subvec(2 * na + n_c, dim - 1), k_users, n_c);
        return p;
    };
    auto clamp_nonneg = [&](arma::vec& x) {
        for (arma::uword i = 2 * na; i < dim; ++i)
            x(i) = std::max(0.0, x(i));
    };
    auto se_at = [&](const arma::vec& x) -> std::optional<double> {
        try {
            const DigitalBeamformer f = param_beamformer(he, unpack(x), p_t);
            const double se = detail::se_of(he.h_equ, f.f_bb, sigma_sq);
            if (!std::isfinite(se))
                return std::nullopt;
            return se;
        } catch (const RankError&) {
            return std::nullopt;
        } catch (const DegenerateError&) {
            return std::nullopt;
        }
    };

    arma::vec x = pack(ps);
    clamp_nonneg(x);
    const auto se0 = se_at(x);
    if (!se0)
        throw NumericalError("param_ascent: objective undefined at the initial parameters");
    double se_cur = *se0;
    std::vector<double> trace{se_cur};

    double step = opt.init_step;
    for (arma::uword it = 0; it < opt.max_iters; ++it) {
        arma::vec g(dim, arma::fill::zeros);
        for (arma::uword i = 0; i < dim; ++i) {
            const double h = opt.fd_step_rel * (std::abs(x(i)) + opt.fd_step_abs);
            arma::vec xp = x; xp(i) += h;
            arma::vec xm = x; xm(i) -= h;
            const auto sp = se_at(xp);
            const auto sm = se_at(xm);
            if (sp && sm)
                g(i) = (*sp - *sm) / (2.0 * h);
            else if (sp)
                g(i) = (*sp - se_cur) / h;
            else if (sm)
                g(i) = (se_cur - *sm) / h;
        }
        const double gn = arma::norm(g);
        if (gn == 0.0)
            break;
        g /= gn;

        bool accepted = false;
        for (arma::uword t = 0; t <= opt.max_halvings && step >= opt.step_min; ++t) {
            arma::vec xt = x + step * g;
            clamp_nonneg(xt);
            const auto se_t = se_at(xt);
            if (se_t && *se_t > se_cur) {
                x = std::move(xt);
                se_cur = *se_t;
                trace.push_back(se_cur);
                step *= opt.step_grow;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted)
            break;
    }
    return {unpack(x), std::move(trace)};
}

// Type-erased digital stage used by the selection searches and the harness.
using DigitalSolver =
    std::function<DigitalBeamformer(const EquivalentChannel&, double p_t, double sigma_sq)>;

inline DigitalSolver make_zf_solver() {
    return [](const EquivalentChannel& he, double p_t, double) { return zf(he, p_t); };
}

inline DigitalSolver make_wmmse_solver(WmmseOptions opt = {}) {
    return [opt](const EquivalentChannel& he, double p_t, double sigma_sq) {
        return wmmse(he, p_t, sigma_sq, opt).first;
    };
}

} // namespace hbf
