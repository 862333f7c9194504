#pragma once

// CSV waveforms and JSON run summaries.
//
// CSV: header `t_us,e1_re,e1_im,e2_re,e2_im,p1,p2`, one row per grid sample,
// 9 significant digits, LF line endings. Fields are Rabi units (rad/s), powers
// their squares. Files are written to a temporary name and renamed into place.

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "ratos/error.hpp"
#include "ratos/model.hpp"
#include "ratos/protocols.hpp"
#include "ratos/units.hpp"

namespace ratos::io {

inline constexpr const char* csv_header = "t_us,e1_re,e1_im,e2_re,e2_im,p1,p2";
inline constexpr int summary_schema_version = 1;

/// Writes `content` to `path` via a sibling temporary file and a rename.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.flush();
        if (!f) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

inline void append_number(std::string& out, double x) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x + 0.0, std::chars_format::general, 9);
    out.append(buf, r.ptr);
}

inline std::string to_csv(const Waveform& w) {
    std::string out = csv_header;
    out += '\n';
    out.reserve(out.size() + w.grid.size() * 96);
    for (std::size_t i = 0; i < w.grid.size(); ++i) {
        const double row[] = {units::to_us(w.grid.time(i)),
                              w.e1[i].real(), w.e1[i].imag(), w.e2[i].real(), w.e2[i].imag(), w.p1(i), w.p2(i)};
        for (std::size_t c = 0; c < 7; ++c) {
            if (c) out += ',';
            append_number(out, row[c]);
        }
        out += '\n';
    }
    return out;
}

inline void emit_csv(const protocols::ExperimentResult& result, const std::filesystem::path& path) {
    write_atomic(path, to_csv(result.waveform));
}

struct CsvTable {
    std::vector<double> t_us;
    Waveform waveform;
    std::vector<double> p1, p2;
};

inline CsvTable parse_csv(std::string_view text) {
    CsvTable t;
    std::size_t pos = 0;
    int line = 0;
    std::vector<std::array<double, 7>> rows;
    bool header = false;
    while (pos < text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        std::string_view row = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line;
        if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
        if (!header) {
            if (row != csv_header) throw ConfigError("csv: unexpected header '" + std::string(row) + "'", line);
            header = true;
            continue;
        }
        if (row.empty()) continue;
        std::array<double, 7> v{};
        std::size_t c = 0, start = 0;
        for (; c < 7; ++c) {
            const std::size_t comma = c < 6 ? row.find(',', start) : row.size();
            if (comma == std::string_view::npos) throw ConfigError("csv: expected 7 fields", line);
            const std::string_view field = row.substr(start, comma - start);
            const auto r = std::from_chars(field.data(), field.data() + field.size(), v[c]);
            if (r.ec != std::errc() || r.ptr != field.data() + field.size())
                throw ConfigError("csv: bad number '" + std::string(field) + "'", line, static_cast<int>(start) + 1);
            start = comma + 1;
        }
        rows.push_back(v);
    }
    if (!header) throw ConfigError("csv: empty file");
    if (rows.size() < 2) throw ConfigError("csv: need at least 2 rows");
    const TimeGrid grid(units::from_us(rows.front()[0]), units::from_us(rows.back()[0]), rows.size());
    t.waveform = Waveform::zeros(grid);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& v = rows[i];
        t.t_us.push_back(v[0]);
        t.waveform.e1[i] = {v[1], v[2]};
        t.waveform.e2[i] = {v[3], v[4]};
        t.p1.push_back(v[5]);
        t.p2.push_back(v[6]);
    }
    return t;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

using nlohmann::ordered_json;

inline ordered_json number_or_null(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

/// Spec echo in internal SI units.
inline ordered_json spec_json(const protocols::ExperimentSpec& s) {
    const MediumParams& m = s.medium;
    ordered_json j;
    j["kind"] = protocols::kind_name(s.kind);
    j["engine"] = protocols::engine_name(s.engine);
    j["medium"] = {{"length_m", m.length},        {"od_1", m.od_1},          {"od_2", m.od_2},
                   {"gamma_e1_rad_s", m.gamma_e1}, {"gamma_e2_rad_s", m.gamma_e2}, {"gamma_gs_rad_s", m.gamma_gs},
                   {"g_ratio", m.g_ratio},         {"delta_1_rad_s", m.delta_1}, {"delta_2_rad_s", m.delta_2},
                   {"delta_2ph_rad_s", m.delta_2ph}};
    j["signal"] = {{"center_s", s.signal.center}, {"fwhm_s", s.signal.fwhm}, {"peak_rad_s", s.signal.peak}};
    j["controls"] = {{"k_pump_rad_s_per_sqrt_mw", s.power_map.k_pump},
                     {"k_retrieve_rad_s_per_sqrt_mw", s.power_map.k_retrieve},
                     {"pump_power_mw", s.pump_power},
                     {"retrieve_power_mw", s.retrieve_power},
                     {"pump_schedule", s.pump_schedule.has_value()},
                     {"retrieve_schedule", s.retrieve_schedule.has_value()}};
    j["grid"] = {{"t_start_s", s.grid.t_start()}, {"t_end_s", s.grid.t_end()}, {"n_t", s.grid.size()},
                 {"n_z", s.n_z}, {"order", s.order}};
    j["experiment"] = {{"rise_s", s.rise},           {"pump_off_s", s.pump_off},
                       {"dark_time_s", s.dark_time}, {"retrieve_channel", s.retrieve_channel},
                       {"delta_t_s", s.delta_t},     {"retrieve_on_s", s.retrieve_on},
                       {"retrieve_powers_mw", s.retrieve_powers}, {"loss", s.loss.enabled},
                       {"eit_window", s.loss.eit_window},          {"slow_reference", s.slow_reference}};
    return j;
}

inline ordered_json metrics_json(const std::map<std::string, double>& scalars) {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : scalars) j[k] = number_or_null(v);
    return j;
}

struct SummaryRun {
    std::string label;
    std::map<std::string, double> metrics;
    std::vector<std::string> warnings;
};

/// Per-run metrics of a result; a beam-splitter series expands into one run per retrieve power.
inline std::vector<SummaryRun> summary_runs(const protocols::ExperimentSpec& spec,
                                            const protocols::ExperimentResult& r, const std::string& label) {
    std::vector<SummaryRun> runs;
    const auto series = r.series.find("retrieve_power");
    if (series != r.series.end() && series->second.size() > 1) {
        for (std::size_t i = 0; i < series->second.size(); ++i) {
            SummaryRun run{label + "#" + std::to_string(i), {}, {}};
            for (const auto& [name, values] : r.series) run.metrics[name] = values[i];
            run.metrics["pump_power"] = spec.pump_power;
            runs.push_back(std::move(run));
        }
        if (!runs.empty()) runs.front().warnings = r.warnings;
        return runs;
    }
    SummaryRun run{label, r.scalars, r.warnings};
    run.metrics["pump_power"] = spec.pump_power;
    run.metrics["retrieve_power"] = spec.retrieve_power;
    runs.push_back(std::move(run));
    return runs;
}

inline std::string summary_text(const protocols::ExperimentSpec& spec, const std::vector<SummaryRun>& runs,
                                const std::string& sweep_param = "") {
    ordered_json j;
    j["schema_version"] = summary_schema_version;
    j["spec"] = spec_json(spec);
    if (!sweep_param.empty()) j["sweep_param"] = sweep_param;
    ordered_json arr = ordered_json::array();
    for (const auto& r : runs) {
        ordered_json o;
        o["label"] = r.label;
        o["metrics"] = metrics_json(r.metrics);
        o["warnings"] = r.warnings;
        arr.push_back(std::move(o));
    }
    j["runs"] = std::move(arr);
    return j.dump(2) + "\n";
}

struct FitInput {
    double p_pump = 0.0;
    std::vector<double> p_rets;
    std::vector<double> values;
};

/// Pulls (P_ret, metric) pairs out of a summary for the energy fit.
inline FitInput fit_input_from_summary(std::string_view text, const std::string& metric) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("summary: invalid JSON: ") + e.what());
    }
    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer())
        throw ConfigError("summary: missing schema_version");
    if (j["schema_version"].get<int>() != summary_schema_version)
        throw ConfigError("summary: unsupported schema_version " + j["schema_version"].dump());
    if (!j.contains("runs") || !j["runs"].is_array()) throw ConfigError("summary: missing runs array");
    FitInput in;
    bool have_pump = false;
    for (const auto& run : j["runs"]) {
        const auto& m = run.at("metrics");
        auto need = [&](const char* key) {
            if (!m.contains(key) || !m[key].is_number())
                throw ConfigError("summary: run " + run.value("label", std::string("?")) + " lacks metric '" + key + "'");
            return m[key].get<double>();
        };
        const double pp = need("pump_power");
        if (have_pump && pp != in.p_pump) throw ConfigError("summary: runs use different pump powers");
        in.p_pump = pp;
        have_pump = true;
        in.p_rets.push_back(need("retrieve_power"));
        in.values.push_back(need(metric.c_str()));
    }
    return in;
}

}  // namespace ratos::io
