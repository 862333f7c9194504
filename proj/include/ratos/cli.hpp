#pragma once

// Command-line front end:
//
//   run <config> [--engine polariton|mb] [--out FILE] [--summary FILE] [--set KEY=VALUE]...
//   sweep <config> --param KEY --values v1,v2,... [--out DIR] [--engine E] [--set KEY=VALUE]...
//   fit ratos-energy <summary.json> [--metric NAME]
//   validate <config>
//
// Exit codes: 0 success, 1 usage or config error, 2 physics or grid error.

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ratos/analysis.hpp"
#include "ratos/config.hpp"
#include "ratos/error.hpp"
#include "ratos/io.hpp"
#include "ratos/protocols.hpp"

namespace ratos::cli {

enum ExitCode : int { ok = 0, usage = 1, physics = 2 };

namespace detail {

inline std::vector<std::pair<std::string, std::string>> parse_sets(const std::vector<std::string>& sets) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects KEY=VALUE, got '" + s + "'");
        out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    return out;
}

inline std::string file_label(std::size_t index, std::size_t count) {
    const std::size_t width = std::to_string(count > 0 ? count - 1 : 0).size();
    std::string n = std::to_string(index);
    return "run_" + std::string(width > n.size() ? width - n.size() : 0, '0') + n;
}

inline void print_metrics(std::ostream& out, const std::map<std::string, double>& scalars) {
    for (const auto& [k, v] : scalars) out << k << " = " << std::setprecision(9) << v << '\n';
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"ratos: double-Lambda slow-light and frequency-conversion simulator", "ratos"};
    app.require_subcommand(1);

    std::string config_path, engine, out_path, summary_path, param, metric = "e1_fraction", summary_in;
    std::vector<std::string> sets, values;

    auto* run = app.add_subcommand("run", "run one experiment and write its waveform CSV");
    run->add_option("config", config_path, "config file")->required();
    run->add_option("--engine", engine, "polariton or mb")->check(CLI::IsMember({"polariton", "mb"}));
    run->add_option("--out", out_path, "CSV output path");
    run->add_option("--summary", summary_path, "JSON summary output path");
    run->add_option("--set", sets, "override a config key, e.g. medium.od_1=200");

    auto* sweep = app.add_subcommand("sweep", "run once per value of one config key");
    sweep->add_option("config", config_path, "config file")->required();
    sweep->add_option("--param", param, "key to vary, e.g. control.retrieve.power")->required();
    sweep->add_option("--values", values, "comma-separated values")->required()->delimiter(',');
    sweep->add_option("--out", out_path, "output directory (default: current)");
    sweep->add_option("--engine", engine, "polariton or mb")->check(CLI::IsMember({"polariton", "mb"}));
    sweep->add_option("--set", sets, "override a config key");

    auto* fit = app.add_subcommand("fit", "fit a sweep summary");
    fit->require_subcommand(1);
    auto* fit_energy = fit->add_subcommand("ratos-energy", "fit a * P_pump / (c * P_pump + P_ret)");
    fit_energy->add_option("summary", summary_in, "summary JSON from sweep or run")->required();
    fit_energy->add_option("--metric", metric, "normalized energy metric to fit (default e1_fraction)");

    auto* validate = app.add_subcommand("validate", "parse and check a config without running it");
    validate->add_option("config", config_path, "config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage;
    }

    try {
        auto overrides = detail::parse_sets(sets);
        if (!engine.empty()) overrides.emplace_back("experiment.engine", engine);

        if (*validate) {
            (void)config::parse_config(io::read_file(config_path), overrides);
            out << "OK\n";
            return ok;
        }
        if (*run) {
            const auto spec = config::parse_config(io::read_file(config_path), overrides);
            const auto result = protocols::run(spec);
            for (const auto& w : result.warnings) err << "warning: " << w << '\n';
            detail::print_metrics(out, result.scalars);
            if (!out_path.empty()) io::emit_csv(result, out_path);
            if (!summary_path.empty())
                io::write_atomic(summary_path, io::summary_text(spec, io::summary_runs(spec, result, "run")));
            return ok;
        }
        if (*sweep) {
            const std::string text = io::read_file(config_path);
            const std::filesystem::path dir = out_path.empty() ? std::filesystem::path(".") : std::filesystem::path(out_path);
            std::filesystem::create_directories(dir);
            std::vector<io::SummaryRun> runs;
            std::optional<protocols::ExperimentSpec> first;
            for (std::size_t i = 0; i < values.size(); ++i) {
                auto point = overrides;
                point.emplace_back(param, values[i]);
                const auto spec = config::parse_config(text, point);
                if (!first) first = spec;
                const auto result = protocols::run(spec);
                for (const auto& w : result.warnings) err << "warning [" << param << "=" << values[i] << "]: " << w << '\n';
                const std::string label = detail::file_label(i, values.size());
                io::emit_csv(result, dir / (label + ".csv"));
                auto expanded = io::summary_runs(spec, result, label + " " + param + "=" + values[i]);
                for (auto& r : expanded) runs.push_back(std::move(r));
                out << label << ' ' << param << '=' << values[i] << '\n';
            }
            io::write_atomic(dir / "summary.json", io::summary_text(*first, runs, param));
            out << "wrote " << values.size() << " CSV files and " << (dir / "summary.json").string() << '\n';
            return ok;
        }
        if (*fit_energy) {
            const auto in = io::fit_input_from_summary(io::read_file(summary_in), metric);
            const auto f = analysis::ratos_energy_fit(in.p_pump, in.p_rets, in.values);
            out << std::setprecision(9) << "a = " << f.params[0] << " +- " << f.std_errors[0] << '\n'
                << "c = " << f.params[1] << " +- " << f.std_errors[1] << '\n'
                << "r2 = " << f.r2 << '\n'
                << "a/c = " << f.params[0] / f.params[1] << '\n';
            return ok;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return is_physics_error(e) ? physics : usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    }
    return usage;
}

}  // namespace ratos::cli
