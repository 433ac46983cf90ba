// SPDX-License-Identifier: Apache-2.0
//
// hbfsim command line: reproducible channel generation and ensemble
// experiments for the dynamic-subarray hybrid beamforming downlink.
//
//   hbfsim gen-channels --out <prefix> [--config f] [--seed s] [--realizations n]
//   hbfsim run      [--config f] [--scheme s] [--pt-dbm p] [--ncpe e] [...]
//   hbfsim sweep    [--config f] [--scheme s] [--pt-dbm p1,p2,...] [--ncpe e1,...]
//   hbfsim compare  --out rows.csv --scheme a --scheme b [...]
//
// A scheme is either a selection method ("coordinate_ascent", "vertical",
// "fully_connected", ...) or a full "analog/selection/digital" triple such
// as "conj_phase_match/coordinate_ascent/wmmse".
//
// Exit codes: 0 success, 2 configuration error, 1 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <hbf/hbf.hpp>

namespace {

void apply_scheme(hbf::ExperimentSpec& spec, const std::string& scheme) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream is(scheme);
    while (std::getline(is, item, '/'))
        parts.push_back(item);
    if (parts.size() == 1) {
        spec.selection_method = hbf::selection_method_from(parts[0]);
    } else if (parts.size() == 3) {
        spec.analog_method = hbf::analog_method_from(parts[0]);
        spec.selection_method = hbf::selection_method_from(parts[1]);
        spec.digital_method = hbf::digital_method_from(parts[2]);
    } else {
        throw hbf::ConfigError("scheme '" + scheme +
                               "' must be a selection method or an "
                               "analog/selection/digital triple");
    }
    // The label stays canonical (analog/selection/digital) so bare selection
    // names still produce fully qualified CSV rows; `label=` in a config
    // file overrides it.
}

void write_rows(const std::string& out_path, const std::vector<hbf::ResultRow>& rows,
                bool include_timing) {
    if (out_path.empty()) {
        hbf::write_rows_csv(std::cout, rows, include_timing);
        return;
    }
    const auto parent = std::filesystem::path(out_path).parent_path();
    if (!parent.empty())
        std::filesystem::create_directories(parent);
    std::ofstream os(out_path);
    if (!os)
        throw hbf::ConfigError(out_path + ": cannot open for writing");
    hbf::write_rows_csv(os, rows, include_timing);
}

int report_failures(const std::vector<std::string>& failures, std::size_t n_rows) {
    if (!failures.empty()) {
        std::cerr << "warning: " << failures.size() << " row(s) failed\n";
        for (const auto& f : failures)
            std::cerr << "  " << f << "\n";
        if (n_rows == 0) {
            std::cerr << "error: all rows failed\n";
            return 1;
        }
    }
    return 0;
}

std::string summary_path_for(const std::string& out_path) {
    if (out_path.size() > 4 && out_path.substr(out_path.size() - 4) == ".csv")
        return out_path.substr(0, out_path.size() - 4) + ".summary.csv";
    return out_path + ".summary.csv";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamic-subarray hybrid beamforming downlink simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string pt_list, ncpe_list;
    std::uint64_t seed = 0;
    std::uint64_t realizations = 0;
    unsigned threads = 0;
    std::vector<std::string> schemes;
    bool keep_timing = false;

    auto add_common = [&](CLI::App* cmd, bool with_scheme) {
        cmd->add_option("--config", config_path, "key = value experiment config file");
        cmd->add_option("--seed", seed, "base seed (realization r uses seed + r)");
        cmd->add_option("--realizations", realizations, "ensemble size");
        cmd->add_option("--out", out_path, "output path (default: stdout)");
        cmd->add_option("--threads", threads, "worker threads (0 = hardware)");
        if (with_scheme)
            cmd->add_option("--scheme", schemes,
                            "selection method or analog/selection/digital triple");
    };

    CLI::App* gen = app.add_subcommand("gen-channels", "write channel realizations as .hbfc files");
    gen->add_option("--config", config_path, "key = value experiment config file");
    gen->add_option("--seed", seed, "base seed (realization r uses seed + r)");
    gen->add_option("--realizations", realizations, "number of channel files");
    gen->add_option("--out", out_path, "output prefix, files are <prefix>_<r>.hbfc")->required();

    CLI::App* run_cmd = app.add_subcommand("run", "one scheme at one operating point");
    add_common(run_cmd, true);
    run_cmd->add_option("--pt-dbm", pt_list, "per-subcarrier transmit power, dBm");
    run_cmd->add_option("--ncpe", ncpe_list, "target normalized channel perturbation error");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "one scheme over power/NCPE grids");
    add_common(sweep_cmd, true);
    sweep_cmd->add_option("--pt-dbm", pt_list, "comma-separated power grid, dBm");
    sweep_cmd->add_option("--ncpe", ncpe_list, "comma-separated NCPE grid");

    CLI::App* cmp_cmd = app.add_subcommand("compare", "several schemes on identical channels");
    add_common(cmp_cmd, true);
    cmp_cmd->add_option("--pt-dbm", pt_list, "comma-separated power grid, dBm");
    cmp_cmd->add_option("--ncpe", ncpe_list, "comma-separated NCPE grid");
    std::string summary_path;
    cmp_cmd->add_option("--summary-out", summary_path, "summary CSV path");
    cmp_cmd->add_flag("--keep-timing", keep_timing,
                      "keep the wall_time_ms column (rows then differ across runs)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        hbf::ExperimentSpec base;
        if (!config_path.empty())
            hbf::apply_config_file(base, config_path);
        if (gen->count("--seed") || run_cmd->count("--seed") || sweep_cmd->count("--seed") ||
            cmp_cmd->count("--seed"))
            base.base_seed = seed;
        if (gen->count("--realizations") || run_cmd->count("--realizations") ||
            sweep_cmd->count("--realizations") || cmp_cmd->count("--realizations"))
            base.realizations = static_cast<arma::uword>(realizations);
        if (run_cmd->count("--threads") || sweep_cmd->count("--threads") ||
            cmp_cmd->count("--threads"))
            base.threads = threads;
        if (!pt_list.empty())
            base.pt_sweep_dbm = hbf::detail::parse_double_list("pt-dbm", pt_list);
        if (!ncpe_list.empty())
            base.ncpe_sweep = hbf::detail::parse_double_list("ncpe", ncpe_list);

        if (app.got_subcommand(gen)) {
            hbf::SystemConfig cfg = base.config;
            cfg.derive();
            cfg.validate();
            const auto parent = std::filesystem::path(out_path).parent_path();
            if (!parent.empty())
                std::filesystem::create_directories(parent);
            const arma::uword n = base.realizations;
            for (arma::uword r = 0; r < n; ++r) {
                const hbf::PathSet paths = hbf::sample_paths(cfg, base.base_seed + r);
                const hbf::ChannelSet chan = hbf::synthesize_channel(paths, cfg);
                char suffix[16];
                std::snprintf(suffix, sizeof(suffix), "_%04llu.hbfc",
                              static_cast<unsigned long long>(r));
                hbf::save_channel_set(out_path + suffix, chan);
            }
            std::cout << "wrote " << n << " channel file(s) with prefix " << out_path << "\n";
            return 0;
        }

        if (app.got_subcommand(run_cmd) || app.got_subcommand(sweep_cmd)) {
            if (schemes.size() > 1)
                throw hbf::ConfigError("run/sweep take a single --scheme; use compare");
            if (!schemes.empty())
                apply_scheme(base, schemes[0]);
            if (app.got_subcommand(run_cmd) &&
                (base.pt_sweep_dbm.size() != 1 || base.ncpe_sweep.size() != 1))
                throw hbf::ConfigError("run expects a single operating point; use sweep for grids");
            const hbf::RunReport report = hbf::run(base);
            write_rows(out_path, report.rows, true);
            return report_failures(report.failures, report.rows.size());
        }

        // compare
        if (schemes.size() < 2)
            throw hbf::ConfigError("compare needs at least two --scheme arguments");
        if (out_path.empty())
            throw hbf::ConfigError("compare requires --out (two CSV files are written)");
        std::vector<hbf::ExperimentSpec> specs;
        specs.reserve(schemes.size());
        for (const auto& s : schemes) {
            hbf::ExperimentSpec spec = base;
            apply_scheme(spec, s);
            specs.push_back(std::move(spec));
        }
        const hbf::CompareReport report = hbf::compare(specs);
        write_rows(out_path, report.rows, keep_timing);
        const std::string sum_path = summary_path.empty() ? summary_path_for(out_path)
                                                          : summary_path;
        std::ofstream os(sum_path);
        if (!os)
            throw hbf::ConfigError(sum_path + ": cannot open for writing");
        hbf::write_summary_csv(os, report.summary);
        return report_failures(report.failures, report.rows.size());
    } catch (const hbf::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
