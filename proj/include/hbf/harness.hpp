// SPDX-License-Identifier: Apache-2.0
//
// hbfsim — reproducible ensemble experiments
//
// An ExperimentSpec names one scheme (analog method / selection method /
// digital method), the system configuration, the ensemble size and the
// operating-point grids (transmit power in dBm, target NCPE). run() executes
// the full pipeline per (power, NCPE, realization) triple and returns one
// ResultRow per successful point; failures are captured per row, never
// crashing the ensemble. compare() runs several schemes on *identical*
// channel realizations (same seeds) for paired comparisons.
//
// Reproducibility: realization r draws its paths from base_seed + r; the CSI
// perturbation and random-selection streams are derived with a splitmix64
// mix so they are independent of the path stream. Rows are emitted in
// deterministic (power, NCPE, realization) order regardless of thread count,
// and all design work for a row happens on the thread that owns the row.
//
// Robustness protocol: beamformers are designed on the perturbed channel and
// evaluated on the true channel. beam_align_los uses the true path geometry
// (the perturbation is defined on coefficients, not on paths), so the NCPE
// sweep stresses the CSI-driven stages.

#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <armadillo>

#include "hbf/analog.hpp"
#include "hbf/channel.hpp"
#include "hbf/config.hpp"
#include "hbf/digital.hpp"
#include "hbf/errors.hpp"
#include "hbf/io.hpp"
#include "hbf/metrics.hpp"
#include "hbf/selection.hpp"

namespace hbf {

enum class AnalogMethod { beam_align_los, conj_phase_match };
enum class SelectionMethod {
    vertical,
    horizontal,
    squared,
    interlaced,
    random,
    gain_greedy,
    coordinate_ascent,
    exhaustive,
    fully_connected // bypasses selection; switches the power model architecture
};
enum class DigitalMethod { zf, wmmse, param_ascent };

inline std::string to_string(AnalogMethod m) {
    switch (m) {
        case AnalogMethod::beam_align_los: return "beam_align_los";
        case AnalogMethod::conj_phase_match: return "conj_phase_match";
    }
    return "?";
}

inline std::string to_string(SelectionMethod m) {
    switch (m) {
        case SelectionMethod::vertical: return "vertical";
        case SelectionMethod::horizontal: return "horizontal";
        case SelectionMethod::squared: return "squared";
        case SelectionMethod::interlaced: return "interlaced";
        case SelectionMethod::random: return "random";
        case SelectionMethod::gain_greedy: return "gain_greedy";
        case SelectionMethod::coordinate_ascent: return "coordinate_ascent";
        case SelectionMethod::exhaustive: return "exhaustive";
        case SelectionMethod::fully_connected: return "fully_connected";
    }
    return "?";
}

inline std::string to_string(DigitalMethod m) {
    switch (m) {
        case DigitalMethod::zf: return "zf";
        case DigitalMethod::wmmse: return "wmmse";
        case DigitalMethod::param_ascent: return "param_ascent";
    }
    return "?";
}

inline AnalogMethod analog_method_from(const std::string& s) {
    if (s == "beam_align_los") return AnalogMethod::beam_align_los;
    if (s == "conj_phase_match") return AnalogMethod::conj_phase_match;
    throw ConfigError("unknown analog method '" + s + "'");
}

inline SelectionMethod selection_method_from(const std::string& s) {
    if (s == "vertical") return SelectionMethod::vertical;
    if (s == "horizontal") return SelectionMethod::horizontal;
    if (s == "squared") return SelectionMethod::squared;
    if (s == "interlaced") return SelectionMethod::interlaced;
    if (s == "random") return SelectionMethod::random;
    if (s == "gain_greedy") return SelectionMethod::gain_greedy;
    if (s == "coordinate_ascent") return SelectionMethod::coordinate_ascent;
    if (s == "exhaustive") return SelectionMethod::exhaustive;
    if (s == "fully_connected") return SelectionMethod::fully_connected;
    throw ConfigError("unknown selection method '" + s + "'");
}

inline DigitalMethod digital_method_from(const std::string& s) {
    if (s == "zf") return DigitalMethod::zf;
    if (s == "wmmse") return DigitalMethod::wmmse;
    if (s == "param_ascent") return DigitalMethod::param_ascent;
    throw ConfigError("unknown digital method '" + s + "'");
}

struct ExperimentSpec {
    SystemConfig config;
    AnalogMethod analog_method = AnalogMethod::conj_phase_match;
    SelectionMethod selection_method = SelectionMethod::coordinate_ascent;
    DigitalMethod digital_method = DigitalMethod::wmmse;

    arma::uword realizations = 1;
    std::uint64_t base_seed = 1;
    std::vector<double> pt_sweep_dbm = {10.0};
    std::vector<double> ncpe_sweep = {0.0};

    PowerModel power_model; // architecture forced from selection_method at run time
    bool ee_total_power = false; // EE denominator uses N_c * p_t instead of p_t

    WmmseOptions wmmse_options;
    AscentOptions ascent_options;
    arma::uword ca_max_sweeps = 10;
    bool ca_inner_wmmse = false; // coordinate-ascent inner solver: ZF (default) or WMMSE

    unsigned threads = 0; // 0 = hardware concurrency
    std::string label;    // CSV scheme label; empty = "analog/selection/digital"
};

inline std::string scheme_label(const ExperimentSpec& spec) {
    if (!spec.label.empty())
        return spec.label;
    return to_string(spec.analog_method) + "/" + to_string(spec.selection_method) + "/" +
           to_string(spec.digital_method);
}

struct ResultRow {
    std::string scheme;
    arma::uword k_users = 0;
    arma::uword n_t = 0;
    arma::uword n_c = 0;
    double pt_dbm = 0.0;
    double ncpe_target = 0.0;
    std::uint64_t seed = 0; // per-realization channel seed (base_seed + r)
    arma::uword realization = 0;
    double se = 0.0;           // bps/Hz, evaluated on the true channel
    double ee = 0.0;           // bps/Hz/W
    double wall_time_ms = 0.0; // design + evaluation time for this row
};

struct RunReport {
    std::vector<ResultRow> rows;        // (power, NCPE, realization) order
    std::vector<std::string> failures;  // one line per failed row
};

struct SummaryRow {
    std::string scheme;
    double pt_dbm = 0.0;
    double ncpe_target = 0.0;
    arma::uword n = 0;
    double mean_se = 0.0;
    double std_se = 0.0;
    double mean_ee = 0.0;
    double std_ee = 0.0;
};

struct CompareReport {
    std::vector<ResultRow> rows;       // (power, NCPE, realization, scheme) order
    std::vector<SummaryRow> summary;   // (scheme, power, NCPE) order
    std::vector<std::string> failures;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Re-check every constraint on the designed beamformers just before a row is
// accepted: unit-modulus analog entries, one RF chain per antenna, exact
// per-subcarrier power.
inline void audit_constraints(const AnalogBeamformer& analog,
                              const std::optional<SelectionMatrix>& sel,
                              const DigitalBeamformer& f_bb, double p_t) {
    const double amp = 1.0 / std::sqrt(static_cast<double>(analog.f_tilde.n_rows));
    for (arma::uword j = 0; j < analog.f_tilde.n_cols; ++j)
        for (arma::uword n = 0; n < analog.f_tilde.n_rows; ++n)
            if (std::abs(std::abs(analog.f_tilde(n, j)) / amp - 1.0) > 1e-9)
                throw NumericalError("constraint audit: analog entry (" + std::to_string(n) +
                                     ", " + std::to_string(j) + ") is not unit modulus");
    if (sel)
        validate_selection(*sel);
    for (arma::uword m = 0; m < f_bb.f_bb.n_slices; ++m) {
        const double p = arma::accu(arma::square(arma::abs(f_bb.f_bb.slice(m))));
        if (std::abs(p - p_t) > 1e-9 * p_t)
            throw NumericalError("constraint audit: ||F_BB[" + std::to_string(m) +
                                 "]||_F^2 deviates from p_t by more than 1e-9 relative");
    }
}

namespace detail {

struct SlottedRun {
    std::vector<std::optional<ResultRow>> slots; // r * n_points + point index
    std::vector<std::string> failures;           // realization-ascending order
    std::size_t n_points = 0;
};

inline ResultRow run_point(const ExperimentSpec& spec, const SystemConfig& cfg_base,
                           const PathSet& paths, const ChannelSet& h_true,
                           const ChannelSet& h_des, double pt_dbm, double ncpe_target,
                           std::uint64_t selection_seed, arma::uword realization) {
    SystemConfig cfg = cfg_base;
    cfg.p_t = dbm_to_watts(pt_dbm);

    const auto t0 = std::chrono::steady_clock::now();

    AnalogBeamformer analog = spec.analog_method == AnalogMethod::beam_align_los
                                  ? beam_align_los(paths, cfg)
                                  : conj_phase_match(h_des);

    const DigitalSolver inner = spec.ca_inner_wmmse ? make_wmmse_solver(spec.wmmse_options)
                                                    : make_zf_solver();
    std::optional<SelectionMatrix> sel;
    switch (spec.selection_method) {
        case SelectionMethod::vertical:
            sel = fixed_pattern(FixedPattern::vertical, cfg);
            break;
        case SelectionMethod::horizontal:
            sel = fixed_pattern(FixedPattern::horizontal, cfg);
            break;
        case SelectionMethod::squared:
            sel = fixed_pattern(FixedPattern::squared, cfg);
            break;
        case SelectionMethod::interlaced:
            sel = fixed_pattern(FixedPattern::interlaced, cfg);
            break;
        case SelectionMethod::random:
            sel = random_selection(cfg, selection_seed);
            break;
        case SelectionMethod::gain_greedy:
            sel = gain_greedy_select(h_des, cfg);
            break;
        case SelectionMethod::coordinate_ascent: {
            const SelectionMatrix init = cfg.n_t % cfg.k_users == 0
                                             ? fixed_pattern(FixedPattern::interlaced, cfg)
                                             : gain_greedy_select(h_des, cfg);
            sel = coordinate_ascent_select(h_des, analog, init, inner, spec.ca_max_sweeps, cfg)
                      .selection;
            break;
        }
        case SelectionMethod::exhaustive:
            sel = exhaustive_select(h_des, analog, inner, cfg).selection;
            break;
        case SelectionMethod::fully_connected:
            break;
    }

    const arma::cx_mat f_rf = sel ? compose(analog, *sel) : analog.f_tilde;
    const EquivalentChannel h_equ = equivalent_channel(h_des, f_rf);

    DigitalBeamformer f_bb;
    switch (spec.digital_method) {
        case DigitalMethod::zf:
            f_bb = zf(h_equ, cfg.p_t);
            break;
        case DigitalMethod::wmmse:
            f_bb = wmmse(h_equ, cfg.p_t, cfg.sigma_m_sq, spec.wmmse_options).first;
            break;
        case DigitalMethod::param_ascent: {
            const auto seeded = wmmse(h_equ, cfg.p_t, cfg.sigma_m_sq, spec.wmmse_options);
            const ParamSet init = wmmse_to_params(seeded.second);
            const auto ascent =
                param_ascent(h_equ, cfg.p_t, cfg.sigma_m_sq, init, spec.ascent_options);
            f_bb = param_beamformer(h_equ, ascent.first, cfg.p_t);
            break;
        }
    }

    audit_constraints(analog, sel, f_bb, cfg.p_t);

    PowerModel pm = spec.power_model;
    pm.architecture = spec.selection_method == SelectionMethod::fully_connected
                          ? Architecture::fully_connected
                          : Architecture::dynamic_subarray;
    const double ee_power = spec.ee_total_power ? static_cast<double>(cfg.n_c) * cfg.p_t
                                                : cfg.p_t;
    const Evaluation ev = evaluate(h_true, f_rf, f_bb.f_bb, cfg, pm, ee_power);

    const auto t1 = std::chrono::steady_clock::now();

    ResultRow row;
    row.scheme = scheme_label(spec);
    row.k_users = cfg.k_users;
    row.n_t = cfg.n_t;
    row.n_c = cfg.n_c;
    row.pt_dbm = pt_dbm;
    row.ncpe_target = ncpe_target;
    row.seed = spec.base_seed + realization;
    row.realization = realization;
    row.se = ev.se;
    row.ee = *ev.ee;
    row.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return row;
}

inline SlottedRun run_impl(const ExperimentSpec& spec) {
    SystemConfig cfg = spec.config;
    cfg.derive();
    cfg.validate();
    if (spec.realizations == 0)
        throw ConfigError("run: realizations must be at least 1");
    if (spec.pt_sweep_dbm.empty() || spec.ncpe_sweep.empty())
        throw ConfigError("run: power and NCPE sweeps must be non-empty");
    for (double t : spec.ncpe_sweep)
        if (t < 0.0)
            throw ConfigError("run: NCPE targets must be non-negative");
    const std::string label = scheme_label(spec);
    if (label.find(',') != std::string::npos || label.find('\n') != std::string::npos)
        throw ConfigError("run: scheme label must not contain commas or newlines");
    if (spec.selection_method == SelectionMethod::exhaustive) {
        const double n_candidates =
            std::pow(static_cast<double>(cfg.k_users), static_cast<double>(cfg.n_t));
        if (!(n_candidates <= 1e6))
            throw ConfigError("run: exhaustive selection refused, K^N_t exceeds 1e6");
    }

    const arma::uword n_r = spec.realizations;
    const std::size_t n_pt = spec.pt_sweep_dbm.size();
    const std::size_t n_nc = spec.ncpe_sweep.size();
    SlottedRun out;
    out.n_points = n_pt * n_nc;
    out.slots.assign(n_r * out.n_points, std::nullopt);
    std::vector<std::vector<std::string>> fail_by_r(n_r);

    auto do_realization = [&](arma::uword r) {
        PathSet paths;
        std::optional<ChannelSet> h_true;
        try {
            paths = sample_paths(cfg, spec.base_seed + r);
            h_true = synthesize_channel(paths, cfg);
        } catch (const std::exception& e) {
            fail_by_r[r].push_back("realization " + std::to_string(r) +
                                   ": channel generation failed: " + e.what());
            return;
        }
        const std::uint64_t r_stream = splitmix64(spec.base_seed + r);
        const std::uint64_t selection_seed = splitmix64(r_stream ^ 0xA0761D6478BD642FULL);
        for (std::size_t nc_idx = 0; nc_idx < n_nc; ++nc_idx) {
            const double target = spec.ncpe_sweep[nc_idx];
            std::optional<ChannelSet> h_des_holder;
            const ChannelSet* h_des = &*h_true;
            if (target > 0.0) {
                const std::uint64_t per_seed =
                    splitmix64(r_stream ^ (0x517CC1B727220A95ULL + nc_idx));
                try {
                    h_des_holder = perturb_channel(*h_true, target, per_seed);
                    h_des = &*h_des_holder;
                } catch (const std::exception& e) {
                    fail_by_r[r].push_back("realization " + std::to_string(r) + " ncpe " +
                                           format_g17(target) + ": perturbation failed: " +
                                           e.what());
                    continue;
                }
            }
            for (std::size_t pt_idx = 0; pt_idx < n_pt; ++pt_idx) {
                const double pt_dbm = spec.pt_sweep_dbm[pt_idx];
                try {
                    out.slots[r * out.n_points + nc_idx * n_pt + pt_idx] =
                        run_point(spec, cfg, paths, *h_true, *h_des, pt_dbm, target,
                                  selection_seed, r);
                } catch (const std::exception& e) {
                    fail_by_r[r].push_back("pt " + format_g17(pt_dbm) + " dBm, ncpe " +
                                           format_g17(target) + ", realization " +
                                           std::to_string(r) + ": " + e.what());
                }
            }
        }
    };

    unsigned n_threads = spec.threads ? spec.threads : std::thread::hardware_concurrency();
    if (n_threads == 0)
        n_threads = 1;
    n_threads = static_cast<unsigned>(
        std::min<arma::uword>(n_threads, n_r));
    if (n_threads <= 1) {
        for (arma::uword r = 0; r < n_r; ++r)
            do_realization(r);
    } else {
        std::atomic<arma::uword> next{0};
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned t = 0; t < n_threads; ++t)
            pool.emplace_back([&] {
                for (arma::uword r = next.fetch_add(1); r < n_r; r = next.fetch_add(1))
                    do_realization(r);
            });
        for (auto& th : pool)
            th.join();
    }

    for (auto& fr : fail_by_r)
        for (auto& f : fr)
            out.failures.push_back(std::move(f));
    return out;
}

} // namespace detail

// Execute one scheme over the full (power, NCPE, realization) grid.
inline RunReport run(const ExperimentSpec& spec) {
    detail::SlottedRun sr = detail::run_impl(spec);
    RunReport report;
    report.failures = std::move(sr.failures);
    const std::size_t n_pt = spec.pt_sweep_dbm.size();
    const std::size_t n_nc = spec.ncpe_sweep.size();
    for (std::size_t pt_idx = 0; pt_idx < n_pt; ++pt_idx)
        for (std::size_t nc_idx = 0; nc_idx < n_nc; ++nc_idx)
            for (arma::uword r = 0; r < spec.realizations; ++r) {
                auto& slot = sr.slots[r * sr.n_points + nc_idx * n_pt + pt_idx];
                if (slot)
                    report.rows.push_back(std::move(*slot));
            }
    return report;
}

// Run several schemes on identical channel realizations (paired seeds) and
// merge the results. All specs must agree on the system dimensions, seeds
// and sweep grids; labels must be unique.
inline CompareReport compare(const std::vector<ExperimentSpec>& specs) {
    if (specs.empty())
        throw ConfigError("compare: need at least one scheme");
    for (std::size_t i = 1; i < specs.size(); ++i) {
        const auto& a = specs[0];
        const auto& b = specs[i];
        SystemConfig ca = a.config, cb = b.config;
        ca.derive();
        cb.derive();
        if (ca.n_t != cb.n_t || ca.k_users != cb.k_users || ca.n_c != cb.n_c)
            throw ConfigError("compare: schemes disagree on system dimensions");
        if (a.base_seed != b.base_seed || a.realizations != b.realizations)
            throw ConfigError("compare: schemes must share base_seed and realizations "
                              "for paired comparisons");
        if (a.pt_sweep_dbm != b.pt_sweep_dbm || a.ncpe_sweep != b.ncpe_sweep)
            throw ConfigError("compare: schemes must share the sweep grids");
    }
    for (std::size_t i = 0; i < specs.size(); ++i)
        for (std::size_t j = i + 1; j < specs.size(); ++j)
            if (scheme_label(specs[i]) == scheme_label(specs[j]))
                throw ConfigError("compare: duplicate scheme label '" + scheme_label(specs[i]) +
                                  "'");

    std::vector<detail::SlottedRun> runs;
    runs.reserve(specs.size());
    CompareReport report;
    for (const auto& spec : specs) {
        runs.push_back(detail::run_impl(spec));
        for (auto& f : runs.back().failures)
            report.failures.push_back(scheme_label(spec) + ": " + std::move(f));
    }

    const std::size_t n_pt = specs[0].pt_sweep_dbm.size();
    const std::size_t n_nc = specs[0].ncpe_sweep.size();
    const arma::uword n_r = specs[0].realizations;
    for (std::size_t pt_idx = 0; pt_idx < n_pt; ++pt_idx)
        for (std::size_t nc_idx = 0; nc_idx < n_nc; ++nc_idx)
            for (arma::uword r = 0; r < n_r; ++r)
                for (auto& sr : runs) {
                    auto& slot = sr.slots[r * sr.n_points + nc_idx * n_pt + pt_idx];
                    if (slot)
                        report.rows.push_back(std::move(*slot));
                }

    for (std::size_t s = 0; s < specs.size(); ++s) {
        const std::string label = scheme_label(specs[s]);
        for (std::size_t pt_idx = 0; pt_idx < n_pt; ++pt_idx)
            for (std::size_t nc_idx = 0; nc_idx < n_nc; ++nc_idx) {
                SummaryRow sum;
                sum.scheme = label;
                sum.pt_dbm = specs[s].pt_sweep_dbm[pt_idx];
                sum.ncpe_target = specs[s].ncpe_sweep[nc_idx];
                double se_1 = 0.0, se_2 = 0.0, ee_1 = 0.0, ee_2 = 0.0;
                for (const auto& row : report.rows)
                    if (row.scheme == label && row.pt_dbm == sum.pt_dbm &&
                        row.ncpe_target == sum.ncpe_target) {
                        ++sum.n;
                        se_1 += row.se;
                        se_2 += row.se * row.se;
                        ee_1 += row.ee;
                        ee_2 += row.ee * row.ee;
                    }
                if (sum.n > 0) {
                    const double n = static_cast<double>(sum.n);
                    sum.mean_se = se_1 / n;
                    sum.mean_ee = ee_1 / n;
                    if (sum.n > 1) {
                        sum.std_se = std::sqrt(std::max(0.0, (se_2 - n * sum.mean_se * sum.mean_se) /
                                                                 (n - 1.0)));
                        sum.std_ee = std::sqrt(std::max(0.0, (ee_2 - n * sum.mean_ee * sum.mean_ee) /
                                                                 (n - 1.0)));
                    }
                }
                report.summary.push_back(std::move(sum));
            }
    }
    return report;
}

inline void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows,
                           bool include_timing = true) {
    os << "scheme,k_users,n_t,n_c,pt_dbm,ncpe_target,seed,realization,se_bps_hz,ee_bps_hz_per_w";
    if (include_timing)
        os << ",wall_time_ms";
    os << "\n";
    for (const auto& r : rows) {
        os << r.scheme << ',' << r.k_users << ',' << r.n_t << ',' << r.n_c << ','
           << format_g17(r.pt_dbm) << ',' << format_g17(r.ncpe_target) << ',' << r.seed << ','
           << r.realization << ',' << format_g17(r.se) << ',' << format_g17(r.ee);
        if (include_timing)
            os << ',' << format_g17(r.wall_time_ms);
        os << "\n";
    }
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
    os << "scheme,pt_dbm,ncpe_target,n,mean_se_bps_hz,std_se_bps_hz,mean_ee_bps_hz_per_w,"
          "std_ee_bps_hz_per_w\n";
    for (const auto& r : rows)
        os << r.scheme << ',' << format_g17(r.pt_dbm) << ',' << format_g17(r.ncpe_target) << ','
           << r.n << ',' << format_g17(r.mean_se) << ',' << format_g17(r.std_se) << ','
           << format_g17(r.mean_ee) << ',' << format_g17(r.std_ee) << "\n";
}

namespace detail {

inline double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + value + "' as a number");
    }
    if (pos != value.size())
        throw ConfigError("key '" + key + "': trailing characters in '" + value + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + value + "' as an integer");
    }
    if (pos != value.size())
        throw ConfigError("key '" + key + "': trailing characters in '" + value + "'");
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "yes")
        return true;
    if (value == "0" || value == "false" || value == "no")
        return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + value + "'");
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        const auto comma = value.find(',', start);
        const std::string item =
            trim(comma == std::string::npos ? value.substr(start) : value.substr(start, comma - start));
        if (item.empty())
            throw ConfigError("key '" + key + "': empty list item");
        out.push_back(parse_double(key, item));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    if (out.empty())
        throw ConfigError("key '" + key + "': empty list");
    return out;
}

} // namespace detail

// Apply one "key = value" entry onto an experiment spec. Angles are given in
// degrees in config files and converted to radians here.
inline void apply_config_entry(ExperimentSpec& spec, const std::string& key,
                               const std::string& value) {
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_double_list;
    using detail::parse_u64;
    auto as_uword = [&](const std::string& k, const std::string& v) {
        return static_cast<arma::uword>(parse_u64(k, v));
    };

    if (key == "n_tv") spec.config.n_tv = as_uword(key, value);
    else if (key == "n_th") spec.config.n_th = as_uword(key, value);
    else if (key == "k_users") spec.config.k_users = as_uword(key, value);
    else if (key == "n_c") spec.config.n_c = as_uword(key, value);
    else if (key == "l_p") spec.config.l_p = as_uword(key, value);
    else if (key == "f_c_hz") spec.config.f_c = parse_double(key, value);
    else if (key == "bandwidth_hz") spec.config.bandwidth = parse_double(key, value);
    else if (key == "d_m") spec.config.d = parse_double(key, value);
    else if (key == "noise_psd_dbm_hz") spec.config.noise_psd_dbm_hz = parse_double(key, value);
    else if (key == "sigma_m_sq_w") spec.config.sigma_m_sq = parse_double(key, value);
    else if (key == "delay_max_symbols") spec.config.delay_max_symbols = parse_double(key, value);
    else if (key == "angle_spread_deg") spec.config.angle_spread_rad = deg_to_rad(parse_double(key, value));
    else if (key == "aod_range_deg") spec.config.aod_range_rad = deg_to_rad(parse_double(key, value));
    else if (key == "r_k_m") spec.config.r_k = arma::vec(parse_double_list(key, value));
    else if (key == "analog") spec.analog_method = analog_method_from(value);
    else if (key == "selection") spec.selection_method = selection_method_from(value);
    else if (key == "digital") spec.digital_method = digital_method_from(value);
    else if (key == "realizations") spec.realizations = as_uword(key, value);
    else if (key == "seed") spec.base_seed = parse_u64(key, value);
    else if (key == "pt_dbm") spec.pt_sweep_dbm = parse_double_list(key, value);
    else if (key == "ncpe") spec.ncpe_sweep = parse_double_list(key, value);
    else if (key == "threads") spec.threads = static_cast<unsigned>(parse_u64(key, value));
    else if (key == "label") spec.label = value;
    else if (key == "ee_total_power") spec.ee_total_power = parse_bool(key, value);
    else if (key == "pa_efficiency") spec.power_model.epsilon = parse_double(key, value);
    else if (key == "p_bb_w") spec.power_model.p_bb = parse_double(key, value);
    else if (key == "p_rf_w") spec.power_model.p_rf = parse_double(key, value);
    else if (key == "p_ps_w") spec.power_model.p_ps = parse_double(key, value);
    else if (key == "p_sw_w") spec.power_model.p_sw = parse_double(key, value);
    else if (key == "wmmse_max_iters") spec.wmmse_options.max_iters = as_uword(key, value);
    else if (key == "wmmse_tol") spec.wmmse_options.tol = parse_double(key, value);
    else if (key == "wmmse_mu_tol") spec.wmmse_options.mu_tol = parse_double(key, value);
    else if (key == "wmmse_variant") {
        if (value == "full_sum") spec.wmmse_options.variant = WmmseVariant::full_sum;
        else if (value == "printed") spec.wmmse_options.variant = WmmseVariant::printed;
        else throw ConfigError("key 'wmmse_variant': expected full_sum or printed");
    }
    else if (key == "ascent_max_iters") spec.ascent_options.max_iters = as_uword(key, value);
    else if (key == "ascent_init_step") spec.ascent_options.init_step = parse_double(key, value);
    else if (key == "ascent_fd_step_rel") spec.ascent_options.fd_step_rel = parse_double(key, value);
    else if (key == "ca_max_sweeps") spec.ca_max_sweeps = as_uword(key, value);
    else if (key == "ca_inner") {
        if (value == "zf") spec.ca_inner_wmmse = false;
        else if (value == "wmmse") spec.ca_inner_wmmse = true;
        else throw ConfigError("key 'ca_inner': expected zf or wmmse");
    }
    else throw ConfigError("unknown key '" + key + "'");
}

inline void apply_config_file(ExperimentSpec& spec, const std::string& path) {
    for (const auto& [key, value] : parse_key_values(path))
        apply_config_entry(spec, key, value);
}

} // namespace hbf
