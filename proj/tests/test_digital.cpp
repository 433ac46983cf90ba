// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace hbf;
using cx = std::complex<double>;

namespace {

void require_power(const DigitalBeamformer& f, double p_t, double rel = 1e-9) {
    for (arma::uword m = 0; m < f.f_bb.n_slices; ++m) {
        const double p = std::pow(arma::norm(f.f_bb.slice(m), "fro"), 2.0);
        REQUIRE_THAT(p, Catch::Matchers::WithinRel(p_t, rel));
    }
}

double se_of_pair(const EquivalentChannel& he, const DigitalBeamformer& f, double sigma_sq) {
    return spectral_efficiency(sinr_equivalent(he.h_equ, f.f_bb, sigma_sq), he.h_equ.n_slices);
}

// Objective used by the external finite-difference oracle: SE of the
// parametrized beamformer as a function of the packed real vector
// [Re a; Im a; b; c].
double packed_objective(const EquivalentChannel& he, const arma::vec& x, arma::uword k_users,
                        arma::uword n_c, double p_t, double sigma_sq) {
    ParamSet ps;
    ps.a = arma::cx_mat(arma::reshape(x.subvec(0, k_users * n_c - 1), k_users, n_c),
                        arma::reshape(x.subvec(k_users * n_c, 2 * k_users * n_c - 1), k_users,
                                      n_c));
    ps.b = x.subvec(2 * k_users * n_c, 2 * k_users * n_c + n_c - 1);
    ps.c = arma::reshape(x.subvec(2 * k_users * n_c + n_c, x.n_elem - 1), k_users, n_c);
    return se_of_pair(he, param_beamformer(he, ps, p_t), sigma_sq);
}

arma::vec pack_params(const ParamSet& ps) {
    return arma::join_vert(
        arma::join_vert(arma::vectorise(arma::real(ps.a)), arma::vectorise(arma::imag(ps.a))),
        arma::join_vert(ps.b, arma::vectorise(ps.c)));
}

arma::vec fd_gradient(const EquivalentChannel& he, const arma::vec& x, arma::uword k_users,
                      arma::uword n_c, double p_t, double sigma_sq, double step) {
    arma::vec g(x.n_elem);
    for (arma::uword i = 0; i < x.n_elem; ++i) {
        arma::vec hi = x, lo = x;
        hi(i) += step;
        lo(i) -= step;
        g(i) = (packed_objective(he, hi, k_users, n_c, p_t, sigma_sq) -
                packed_objective(he, lo, k_users, n_c, p_t, sigma_sq)) /
               (2.0 * step);
    }
    return g;
}

} // namespace

TEST_CASE("equivalent channel of a scaled identity is the scaled channel", "[digital]") {
    std::mt19937_64 rng(101);
    const arma::uword k = 3;
    arma::cx_cube h(k, k, 2);
    for (arma::uword m = 0; m < 2; ++m)
        h.slice(m) = testutil::random_cx_mat(k, k, rng);
    ChannelSet chan = testutil::channel_from_cube(h);
    const double s = 1.0 / std::sqrt(static_cast<double>(k));
    arma::cx_mat f_rf(s * arma::eye(k, k), arma::zeros(k, k));
    EquivalentChannel he = equivalent_channel(chan, f_rf);
    REQUIRE(arma::approx_equal(he.h_equ, arma::cx_cube(s * h), "reldiff", 1e-14));
}

TEST_CASE("channel rows orthogonal to the analog columns vanish", "[digital]") {
    arma::cx_cube h(2, 3, 1, arma::fill::zeros);
    h(0, 0, 0) = cx(2.0, 1.0);  // user 0 only sees antenna 0
    h(1, 1, 0) = cx(1.0, 0.0);
    h(1, 2, 0) = cx(0.0, 1.0);
    ChannelSet chan = testutil::channel_from_cube(h);
    arma::cx_mat f_rf(3, 2, arma::fill::zeros);
    f_rf(1, 0) = cx(0.5, 0.0);  // neither column touches antenna 0
    f_rf(2, 1) = cx(0.0, 0.5);
    EquivalentChannel he = equivalent_channel(chan, f_rf);
    REQUIRE(arma::norm(he.h_equ.slice(0).row(0)) == 0.0);
    REQUIRE(arma::norm(he.h_equ.slice(0).row(1)) > 0.0);
}

TEST_CASE("equivalent channel matches the naive triple-loop product", "[digital]") {
    std::mt19937_64 rng(103);
    const arma::uword k_users = 3, n_t = 7, n_c = 4;
    arma::cx_cube h(k_users, n_t, n_c);
    for (arma::uword m = 0; m < n_c; ++m)
        h.slice(m) = testutil::random_cx_mat(k_users, n_t, rng);
    ChannelSet chan = testutil::channel_from_cube(h);
    arma::cx_mat f_rf = testutil::random_cx_mat(n_t, k_users, rng);
    EquivalentChannel he = equivalent_channel(chan, f_rf);
    REQUIRE(he.h_equ.n_rows == k_users);
    REQUIRE(he.h_equ.n_cols == k_users);
    REQUIRE(he.h_equ.n_slices == n_c);
    for (arma::uword m = 0; m < n_c; ++m)
        for (arma::uword k = 0; k < k_users; ++k)
            for (arma::uword j = 0; j < k_users; ++j) {
                cx acc(0.0, 0.0);
                for (arma::uword n = 0; n < n_t; ++n)
                    acc += h(k, n, m) * f_rf(n, j);
                REQUIRE(std::abs(he.h_equ(k, j, m) - acc) <= 1e-12 * std::abs(acc));
            }
}

TEST_CASE("power projection hits the budget and rejects zero slices", "[digital]") {
    std::mt19937_64 rng(107);
    arma::cx_cube f(2, 2, 3);
    for (arma::uword m = 0; m < 3; ++m)
        f.slice(m) = testutil::random_cx_mat(2, 2, rng);
    project_power(f, 1.7);
    for (arma::uword m = 0; m < 3; ++m)
        REQUIRE_THAT(std::pow(arma::norm(f.slice(m), "fro"), 2.0),
                     Catch::Matchers::WithinRel(1.7, 1e-12));

    arma::cx_cube zero(2, 2, 1, arma::fill::zeros);
    REQUIRE_THROWS_AS(project_power(zero, 1.0), DegenerateError);
}

TEST_CASE("zero forcing on identity and diagonal channels", "[digital]") {
    // H = I, K = 2, p_t = 2: the inverse is I with squared norm 2 already.
    arma::cx_cube eye_cube(2, 2, 1);
    eye_cube.slice(0) = arma::cx_mat(arma::eye(2, 2), arma::zeros(2, 2));
    DigitalBeamformer f_eye = zf(EquivalentChannel{eye_cube}, 2.0);
    REQUIRE(arma::approx_equal(f_eye.f_bb.slice(0), eye_cube.slice(0), "absdiff", 1e-12));

    // H = diag(1, 2): inverse proportional to diag(1, 0.5), then scaled.
    arma::cx_cube diag_cube(2, 2, 1, arma::fill::zeros);
    diag_cube(0, 0, 0) = cx(1.0, 0.0);
    diag_cube(1, 1, 0) = cx(2.0, 0.0);
    const double p_t = 3.0;
    DigitalBeamformer f = zf(EquivalentChannel{diag_cube}, p_t);
    const double f00 = std::sqrt(p_t / 1.25);  // solves f00^2 (1 + 1/4) = p_t
    REQUIRE(std::abs(f.f_bb(0, 1, 0)) < 1e-14);
    REQUIRE(std::abs(f.f_bb(1, 0, 0)) < 1e-14);
    REQUIRE_THAT(std::abs(f.f_bb(0, 0, 0)), Catch::Matchers::WithinRel(f00, 1e-12));
    REQUIRE_THAT(std::abs(f.f_bb(1, 1, 0)), Catch::Matchers::WithinRel(f00 / 2.0, 1e-12));
    require_power(f, p_t);
}

TEST_CASE("zero forcing nulls interference on well-conditioned instances", "[digital]") {
    std::mt19937_64 rng(109);
    for (int trial = 0; trial < 50; ++trial) {
        EquivalentChannel he = testutil::random_equivalent_well_conditioned(3, 2, rng, 1e4);
        DigitalBeamformer f = zf(he, 1.0);
        require_power(f, 1.0);
        for (arma::uword m = 0; m < 2; ++m) {
            arma::cx_mat t = he.h_equ.slice(m) * f.f_bb.slice(m);
            const double max_diag = arma::abs(t.diag()).max();
            for (arma::uword i = 0; i < 3; ++i)
                for (arma::uword j = 0; j < 3; ++j)
                    if (i != j)
                        REQUIRE(std::abs(t(i, j)) <= 1e-10 * max_diag);
        }
    }
}

TEST_CASE("zero forcing refuses singular equivalent channels", "[digital]") {
    arma::cx_cube h(2, 2, 2);
    h.slice(0) = arma::cx_mat(arma::eye(2, 2), arma::zeros(2, 2));
    h.slice(1).zeros();
    h(0, 0, 1) = cx(1.0, 0.0);
    h(1, 0, 1) = cx(1.0, 0.0);  // rank one at subcarrier 1
    try {
        zf(EquivalentChannel{h}, 1.0);
        FAIL("expected RankError");
    } catch (const RankError& e) {
        REQUIRE(std::string(e.what()).find("1") != std::string::npos);
    }
}

TEST_CASE("mu bisection solves the scalar water level by hand", "[digital]") {
    // A = 1, Q = 1: power(mu) = 1/(mu+1)^2, so power = 0.25 at mu = 1.
    arma::cx_mat a_mat(1, 1), q(1, 1);
    a_mat(0, 0) = cx(1.0, 0.0);
    q(0, 0) = cx(1.0, 0.0);
    const double mu = mu_bisection(a_mat, q, 0.25);
    REQUIRE_THAT(mu, Catch::Matchers::WithinAbs(1.0, 1e-6));
}

TEST_CASE("mu is zero when the unconstrained power fits the budget", "[digital]") {
    arma::cx_mat a_mat(arma::eye(2, 2), arma::zeros(2, 2));
    arma::cx_mat q(0.1 * arma::eye(2, 2), arma::zeros(2, 2));
    REQUIRE(mu_bisection(a_mat, q, 1.0) == 0.0);
}

TEST_CASE("mu bisection meets the power budget on random instances", "[digital]") {
    std::mt19937_64 rng(113);
    for (int trial = 0; trial < 50; ++trial) {
        arma::cx_mat g = testutil::random_cx_mat(3, 3, rng);
        arma::cx_mat a_mat = g.t() * g;  // Hermitian PSD
        arma::cx_mat q = testutil::random_cx_mat(3, 3, rng);
        QuadraticTerms qt = QuadraticTerms::make(a_mat, q);

        // The factorized power matches a direct solve at several levels.
        for (double mu : {0.0, 0.3, 2.0}) {
            const arma::cx_mat direct =
                arma::solve(mu * arma::cx_mat(arma::eye(3, 3), arma::zeros(3, 3)) + a_mat, q);
            REQUIRE_THAT(qt.power(mu),
                         Catch::Matchers::WithinRel(std::pow(arma::norm(direct, "fro"), 2.0),
                                                    1e-9));
        }

        const double p_t = 0.5 * qt.power(0.0);  // force an active constraint
        const double mu = mu_bisection(qt, p_t);
        REQUIRE(mu > 0.0);
        REQUIRE(std::abs(qt.power(mu) - p_t) <= 1.1e-8 * p_t);
    }
}

TEST_CASE("single-user WMMSE reaches maximum-ratio transmission", "[digital]") {
    std::mt19937_64 rng(127);
    for (int trial = 0; trial < 20; ++trial) {
        const arma::uword n_c = 3;
        arma::cx_cube h(1, 1, n_c);
        for (arma::uword m = 0; m < n_c; ++m)
            h(0, 0, m) = testutil::random_cx_mat(1, 1, rng)(0, 0) + cx(0.2, 0.0);
        EquivalentChannel he{h};
        const double p_t = 2.0, sigma_sq = 0.5;
        auto [f, st] = wmmse(he, p_t, sigma_sq);
        require_power(f, p_t);

        double expected = 0.0;
        for (arma::uword m = 0; m < n_c; ++m)
            expected += std::log2(1.0 + p_t * std::norm(h(0, 0, m)) / sigma_sq);
        expected /= static_cast<double>(n_c);
        REQUIRE_THAT(se_of_pair(he, f, sigma_sq), Catch::Matchers::WithinAbs(expected, 1e-6));

        // The beamformer is a phase-aligned full-power scalar per subcarrier.
        for (arma::uword m = 0; m < n_c; ++m) {
            const cx t = h(0, 0, m) * f.f_bb(0, 0, m);
            REQUIRE_THAT(std::abs(t),
                         Catch::Matchers::WithinRel(std::abs(h(0, 0, m)) * std::sqrt(p_t), 1e-9));
        }
    }
}

TEST_CASE("WMMSE traces are non-decreasing and power-feasible", "[digital]") {
    std::mt19937_64 rng(131);
    for (int trial = 0; trial < 100; ++trial) {
        const arma::uword k = 1 + static_cast<arma::uword>(trial % 3);
        const arma::uword n_c = 1 + static_cast<arma::uword>(trial % 4);
        EquivalentChannel he = testutil::random_equivalent(k, n_c, rng);
        auto [f, st] = wmmse(he, 1.0, 0.1);
        require_power(f, 1.0);
        REQUIRE(st.se_trace.size() >= 2);
        for (std::size_t i = 1; i < st.se_trace.size(); ++i)
            REQUIRE(st.se_trace[i] >= st.se_trace[i - 1] - 1e-9);
        REQUIRE(arma::all(arma::vectorise(st.w) >= 1.0 - 1e-12));
        REQUIRE(arma::all(st.mu >= 0.0));
    }
}

TEST_CASE("WMMSE never ends below its zero-forcing start", "[digital]") {
    std::mt19937_64 rng(137);
    for (int trial = 0; trial < 500; ++trial) {
        EquivalentChannel he = testutil::random_equivalent_well_conditioned(2, 1, rng, 1e4);
        const double p_t = 1.0, sigma_sq = 0.1;
        DigitalBeamformer f_zf = zf(he, p_t);
        const double se_zf = se_of_pair(he, f_zf, sigma_sq);
        auto [f, st] = wmmse(he, p_t, sigma_sq, f_zf);
        REQUIRE(se_of_pair(he, f, sigma_sq) >= se_zf - 1e-9);
    }
}

TEST_CASE("WMMSE rejects an all-zero equivalent channel", "[digital]") {
    arma::cx_cube zero(2, 2, 1, arma::fill::zeros);
    REQUIRE_THROWS_AS(wmmse(EquivalentChannel{zero}, 1.0, 0.1), DegenerateError);
}

TEST_CASE("printed-denominator variant is available and guarded", "[digital]") {
    WmmseOptions opt;
    opt.variant = WmmseVariant::printed;

    // High-noise regime: the printed weights stay positive and the solver runs.
    arma::cx_cube h(1, 1, 1);
    h(0, 0, 0) = cx(2.0, 0.0);
    auto [f, st] = wmmse(EquivalentChannel{h}, 1.0, 100.0, opt);
    REQUIRE(std::isfinite(st.se_trace.back()));
    require_power(f, 1.0);

    // Low-noise regime: |t|^2 > sigma^2 makes the printed weight undefined.
    REQUIRE_THROWS_AS(wmmse(EquivalentChannel{h}, 1.0, 0.5, opt), NumericalError);
}

TEST_CASE("state mapping reproduces the WMMSE update through the parametrized form",
          "[digital]") {
    std::mt19937_64 rng(139);
    for (int trial = 0; trial < 25; ++trial) {
        EquivalentChannel he = testutil::random_equivalent(3, 2, rng);
        const double p_t = 1.0, sigma_sq = 0.2;
        auto [f, st] = wmmse(he, p_t, sigma_sq);

        DigitalBeamformer raw = wmmse_f_update(he, st);
        arma::cx_cube projected = raw.f_bb;
        project_power(projected, p_t);
        REQUIRE(arma::approx_equal(projected, f.f_bb, "reldiff", 1e-9));

        ParamSet ps = wmmse_to_params(st);
        REQUIRE(arma::all(ps.b >= 0.0));
        REQUIRE(arma::all(arma::vectorise(ps.c) >= 0.0));
        DigitalBeamformer via_params = param_beamformer(he, ps, p_t);
        REQUIRE(arma::approx_equal(via_params.f_bb, f.f_bb, "reldiff", 1e-9));
    }
}

TEST_CASE("wmmse_to_params is the direct algebraic map", "[digital]") {
    WmmseState st;
    st.u = arma::cx_mat(1, 1);
    st.u(0, 0) = cx(1.0, 0.0);
    st.w = arma::mat(1, 1, arma::fill::ones);
    st.mu = arma::vec(1, arma::fill::zeros);
    ParamSet ps = wmmse_to_params(st);
    REQUIRE(std::abs(ps.a(0, 0) - cx(1.0, 0.0)) == 0.0);
    REQUIRE(ps.b(0) == 0.0);
    REQUIRE(ps.c(0, 0) == 1.0);
}

TEST_CASE("parametrized beamformer hand case and degeneracies", "[digital]") {
    // K = 1, h = 1, a = 1, b = 1, c = 0: pre-projection f = (1)^(-1)*1*conj(1) = 1.
    arma::cx_cube h(1, 1, 1);
    h(0, 0, 0) = cx(1.0, 0.0);
    EquivalentChannel he{h};
    ParamSet ps;
    ps.a = arma::cx_mat(1, 1);
    ps.a(0, 0) = cx(1.0, 0.0);
    ps.b = arma::vec{1.0};
    ps.c = arma::mat(1, 1, arma::fill::zeros);
    DigitalBeamformer f = param_beamformer(he, ps, 4.0);
    REQUIRE(std::abs(f.f_bb(0, 0, 0) - cx(2.0, 0.0)) < 1e-12);  // projected to ||f||^2 = 4

    // All-zero linear weights at a subcarrier are degenerate.
    ParamSet zero = ps;
    zero.a(0, 0) = cx(0.0, 0.0);
    REQUIRE_THROWS_AS(param_beamformer(he, zero, 4.0), DegenerateError);

    // Mismatched dimensions are refused.
    ParamSet bad = ps;
    bad.b = arma::vec{1.0, 2.0};
    REQUIRE_THROWS_AS(param_beamformer(he, bad, 4.0), ConfigError);
}

TEST_CASE("parametrized beamformer is invariant to per-subcarrier rescales", "[digital]") {
    std::mt19937_64 rng(149);
    EquivalentChannel he = testutil::random_equivalent(3, 2, rng);
    ParamSet ps;
    ps.a = testutil::random_cx_mat(3, 2, rng);
    ps.b = arma::vec{0.5, 1.5};
    ps.c = arma::abs(testutil::random_cx_mat(3, 2, rng));
    DigitalBeamformer base = param_beamformer(he, ps, 1.0);

    ParamSet scaled = ps;
    scaled.a.col(0) *= 3.7;
    scaled.b(0) *= 3.7;
    scaled.c.col(0) *= 3.7;
    DigitalBeamformer same = param_beamformer(he, scaled, 1.0);
    REQUIRE(arma::approx_equal(same.f_bb, base.f_bb, "reldiff", 1e-12));
}

TEST_CASE("parameter ascent never falls below its WMMSE start", "[digital]") {
    std::mt19937_64 rng(151);
    for (int trial = 0; trial < 5; ++trial) {
        EquivalentChannel he = testutil::random_equivalent(2, 2, rng);
        const double p_t = 1.0, sigma_sq = 0.2;
        auto [f, st] = wmmse(he, p_t, sigma_sq);
        const double se_wmmse = se_of_pair(he, f, sigma_sq);

        AscentOptions opt;
        opt.max_iters = 30;
        auto [ps, trace] = param_ascent(he, p_t, sigma_sq, wmmse_to_params(st), opt);
        REQUIRE(trace.back() >= se_wmmse - 1e-9);
        for (std::size_t i = 1; i < trace.size(); ++i)
            REQUIRE(trace[i] >= trace[i - 1] - 1e-12);

        const double se_final = se_of_pair(he, param_beamformer(he, ps, p_t), sigma_sq);
        REQUIRE_THAT(se_final, Catch::Matchers::WithinAbs(trace.back(), 1e-10));
    }
}

TEST_CASE("single-user parameter ascent reaches the closed-form optimum", "[digital]") {
    std::mt19937_64 rng(157);
    arma::cx_cube h(1, 1, 2);
    for (arma::uword m = 0; m < 2; ++m)
        h(0, 0, m) = testutil::random_cx_mat(1, 1, rng)(0, 0) + cx(0.3, 0.0);
    EquivalentChannel he{h};
    const double p_t = 1.5, sigma_sq = 0.4;
    auto [ps, trace] = param_ascent(he, p_t, sigma_sq, default_params(1, 2));
    double expected = 0.0;
    for (arma::uword m = 0; m < 2; ++m)
        expected += std::log2(1.0 + p_t * std::norm(h(0, 0, m)) / sigma_sq);
    expected /= 2.0;
    REQUIRE_THAT(trace.back(), Catch::Matchers::WithinAbs(expected, 1e-6));
}

TEST_CASE("parameter ascent improves a generic start on random instances", "[digital]") {
    std::mt19937_64 rng(163);
    EquivalentChannel he = testutil::random_equivalent_well_conditioned(2, 2, rng, 1e3);
    const double p_t = 1.0, sigma_sq = 0.05;
    AscentOptions opt;
    opt.max_iters = 60;
    auto [ps, trace] = param_ascent(he, p_t, sigma_sq, default_params(2, 2), opt);
    REQUIRE(trace.back() > trace.front());
    REQUIRE(arma::all(ps.b >= 0.0));
    REQUIRE(arma::all(arma::vectorise(ps.c) >= 0.0));
}

TEST_CASE("parameter ascent validates its initialization", "[digital]") {
    std::mt19937_64 rng(167);
    EquivalentChannel he = testutil::random_equivalent(2, 1, rng);
    ParamSet bad = default_params(2, 1);
    bad.b(0) = -1.0;
    REQUIRE_THROWS_AS(param_ascent(he, 1.0, 0.1, bad), ConfigError);
    ParamSet bad_c = default_params(2, 1);
    bad_c.c(0, 0) = -0.5;
    REQUIRE_THROWS_AS(param_ascent(he, 1.0, 0.1, bad_c), ConfigError);
}

TEST_CASE("finite-difference gradients are self-consistent across step sizes", "[digital]") {
    std::mt19937_64 rng(173);
    for (int trial = 0; trial < 5; ++trial) {
        const arma::uword k = 2, n_c = 1;
        EquivalentChannel he = testutil::random_equivalent_well_conditioned(k, n_c, rng, 1e3);
        const double p_t = 1.0, sigma_sq = 0.2;
        // A generic (non-stationary) point: all-ones parameters.
        arma::vec x = pack_params(default_params(k, n_c));

        const double step = 1e-5;
        arma::vec g1 = fd_gradient(he, x, k, n_c, p_t, sigma_sq, step);
        arma::vec g2 = fd_gradient(he, x, k, n_c, p_t, sigma_sq, step / 2.0);
        REQUIRE(arma::norm(g1) > 1e-6);  // non-degenerate check point
        REQUIRE(arma::norm(g1 - g2) <= 1e-3 * arma::norm(g2));
    }
}

TEST_CASE("solver handles expose ZF and WMMSE uniformly", "[digital]") {
    std::mt19937_64 rng(179);
    EquivalentChannel he = testutil::random_equivalent_well_conditioned(2, 2, rng, 1e3);
    DigitalSolver zf_solver = make_zf_solver();
    DigitalSolver wmmse_solver = make_wmmse_solver();
    DigitalBeamformer a = zf_solver(he, 1.0, 0.1);
    DigitalBeamformer b = wmmse_solver(he, 1.0, 0.1);
    require_power(a, 1.0);
    require_power(b, 1.0);
    REQUIRE(se_of_pair(he, b, 0.1) >= se_of_pair(he, a, 0.1) - 1e-9);
}
