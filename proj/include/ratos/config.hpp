#pragma once

// Experiment config documents.
//
//   # comment
//   [section]
//   key = value [unit]
//
// Values are in the human units listed in `key_table`; a trailing unit word is
// optional but, when present, must match. Conversion to SI happens here and
// nowhere else.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ratos/error.hpp"
#include "ratos/protocols.hpp"
#include "ratos/schedule.hpp"
#include "ratos/units.hpp"

namespace ratos::config {

enum class ValueType { number, integer, boolean, word, schedule, number_list };

struct KeySpec {
    std::string_view section;
    std::string_view key;
    ValueType type;
    std::string_view unit;  // empty: dimensionless
    std::string_view help;
};

inline constexpr KeySpec key_table[] = {
    {"medium", "length", ValueType::number, "cm", "cell length"},
    {"medium", "od_1", ValueType::number, "", "resonant optical depth of the signal transition"},
    {"medium", "od_2", ValueType::number, "", "optical depth of the Ratos transition (default: from g_ratio)"},
    {"medium", "gamma_e1", ValueType::number, "MHz", "optical coherence decay, signal transition"},
    {"medium", "gamma_e2", ValueType::number, "MHz", "optical coherence decay, Ratos transition"},
    {"medium", "gamma_gs", ValueType::number, "kHz", "ground-state decoherence"},
    {"medium", "g_ratio", ValueType::number, "", "g1/g2 (default: from the optical depths)"},
    {"medium", "delta_1", ValueType::number, "MHz", "one-photon detuning, signal"},
    {"medium", "delta_2", ValueType::number, "MHz", "one-photon detuning, Ratos"},
    {"medium", "delta_2ph", ValueType::number, "MHz", "two-photon detuning"},
    {"signal", "center", ValueType::number, "us", "input pulse center"},
    {"signal", "fwhm", ValueType::number, "us", "input intensity FWHM"},
    {"signal", "peak", ValueType::number, "kHz", "peak signal Rabi frequency / 2pi"},
    {"control.pump", "k", ValueType::number, "MHz/sqrt(mW)", "Rabi frequency / 2pi per sqrt(power)"},
    {"control.pump", "power", ValueType::number, "mW", "pump power"},
    {"control.pump", "schedule", ValueType::schedule, "", "explicit pump schedule (replaces the protocol's)"},
    {"control.retrieve", "k", ValueType::number, "MHz/sqrt(mW)", "Rabi frequency / 2pi per sqrt(power)"},
    {"control.retrieve", "power", ValueType::number, "mW", "retrieve power"},
    {"control.retrieve", "schedule", ValueType::schedule, "", "explicit retrieve schedule"},
    {"grid", "t_start", ValueType::number, "us", "first time sample"},
    {"grid", "t_end", ValueType::number, "us", "last time sample"},
    {"grid", "n_t", ValueType::integer, "", "number of time samples (exclusive with dt)"},
    {"grid", "dt", ValueType::number, "ns", "maximum time step (exclusive with n_t)"},
    {"grid", "n_z", ValueType::integer, "", "z slices for mb (0 = automatic)"},
    {"grid", "order", ValueType::integer, "", "z-marching order for mb: 2 or 4"},
    {"experiment", "kind", ValueType::word, "", "eit_slowlight|storage|cross_retrieval|ratos|beamsplitter|cw_fwm"},
    {"experiment", "engine", ValueType::word, "", "polariton|mb"},
    {"experiment", "loss", ValueType::boolean, "", "polariton engine: enable decoherence and EIT window"},
    {"experiment", "eit_window", ValueType::boolean, "", "polariton engine: EIT low-pass when loss is on"},
    {"experiment", "rise", ValueType::number, "us", "10-90% time of every protocol edge"},
    {"experiment", "pump_off", ValueType::number, "us", "pump turn-off time"},
    {"experiment", "dark_time", ValueType::number, "us", "storage time between pump off and retrieve on"},
    {"experiment", "retrieve_channel", ValueType::integer, "", "storage: 1 (pump) or 2 (retrieve)"},
    {"experiment", "delta_t", ValueType::number, "us", "ratos: retrieve on minus pump off"},
    {"experiment", "retrieve_on", ValueType::number, "us", "beamsplitter: retrieve turn-on time"},
    {"experiment", "retrieve_powers", ValueType::number_list, "mW", "beamsplitter: retrieve power sweep"},
    {"experiment", "slow_reference", ValueType::boolean, "", "also run the slowed pulse for normalization"},
};

inline const KeySpec* find_key(std::string_view section, std::string_view key) {
    for (const auto& k : key_table)
        if (k.section == section && k.key == key) return &k;
    return nullptr;
}

struct Entry {
    std::string value;
    int line = 0;    // 0: came from an override
    int column = 0;  // of the first value character
};

/// Raw sections and entries, keys checked against `key_table`.
struct Document {
    std::map<std::string, std::map<std::string, Entry>> sections;

    const Entry* get(std::string_view section, std::string_view key) const {
        const auto s = sections.find(std::string(section));
        if (s == sections.end()) return nullptr;
        const auto k = s->second.find(std::string(key));
        return k == s->second.end() ? nullptr : &k->second;
    }
    bool has(std::string_view section, std::string_view key) const { return get(section, key) != nullptr; }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool known_section(std::string_view s) {
    return std::any_of(std::begin(key_table), std::end(key_table), [&](const KeySpec& k) { return k.section == s; });
}

inline std::string keys_of(std::string_view section) {
    std::string out;
    for (const auto& k : key_table)
        if (k.section == section) out += (out.empty() ? "" : ", ") + std::string(k.key);
    return out;
}

inline std::string qualified(std::string_view section, std::string_view key) {
    return "[" + std::string(section) + "]." + std::string(key);
}

}  // namespace detail

inline Document parse_document(std::string_view text) {
    Document doc;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        const std::string_view raw = text.substr(pos, eol - pos);
        ++line_no;
        pos = eol + 1;

        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) {
            if (eol == text.size()) break;
            continue;
        }
        const int indent = static_cast<int>(line.data() - raw.data()) + 1;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("section header lacks closing ']'", line_no, indent);
            const std::string_view name = detail::trim(line.substr(1, line.size() - 2));
            if (!detail::known_section(name))
                throw ConfigError("unknown section [" + std::string(name) +
                                      "]; known: medium, signal, control.pump, control.retrieve, grid, experiment",
                                  line_no, indent);
            section = std::string(name);
            doc.sections[section];
        } else {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no, indent);
            const std::string_view key = detail::trim(line.substr(0, eq));
            const std::string_view value = detail::trim(line.substr(eq + 1));
            if (section.empty()) throw ConfigError("key '" + std::string(key) + "' before any section", line_no, indent);
            if (key.empty()) throw ConfigError("missing key before '='", line_no, indent);
            if (!find_key(section, key))
                throw ConfigError("unknown key '" + std::string(key) + "' in [" + section +
                                      "]; allowed: " + detail::keys_of(section),
                                  line_no, indent);
            if (value.empty())
                throw ConfigError("missing value for " + detail::qualified(section, key), line_no, indent);
            auto& entries = doc.sections[section];
            if (const auto prev = entries.find(std::string(key)); prev != entries.end())
                throw ConfigError("duplicate key " + detail::qualified(section, key) + " (first set on line " +
                                      std::to_string(prev->second.line) + ")",
                                  line_no, indent);
            const int column = static_cast<int>(value.data() - raw.data()) + 1;
            entries[std::string(key)] = Entry{std::string(value), line_no, column};
        }
        if (eol == text.size()) break;
    }
    return doc;
}

/// Sets "section.key" to `value`, as if it had been written in the file.
inline void apply_override(Document& doc, const std::string& dotted, const std::string& value) {
    const auto dot = dotted.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == dotted.size())
        throw ConfigError("override '" + dotted + "': expected section.key");
    const std::string section = dotted.substr(0, dot), key = dotted.substr(dot + 1);
    if (!find_key(section, key)) {
        if (!detail::known_section(section)) throw ConfigError("override '" + dotted + "': unknown section");
        throw ConfigError("override '" + dotted + "': unknown key; allowed in [" + section +
                          "]: " + detail::keys_of(section));
    }
    doc.sections[section][key] = Entry{value, 0, 0};
}

namespace detail {

class Reader {
public:
    explicit Reader(const Document& doc) : doc_(doc) {}

    const Entry* entry(std::string_view section, std::string_view key) const { return doc_.get(section, key); }

    [[noreturn]] void fail(const Entry& e, std::string_view section, std::string_view key, const std::string& msg) const {
        if (e.line == 0) throw ConfigError("override " + std::string(section) + "." + std::string(key) + ": " + msg);
        throw ConfigError(qualified(section, key) + ": " + msg, e.line, e.column);
    }

    double parse_number(const Entry& e, std::string_view section, std::string_view key, std::string_view text,
                        std::string_view unit) const {
        text = trim(text);
        std::string_view num = text, suffix;
        if (const auto sp = text.find_first_of(" \t"); sp != std::string_view::npos) {
            num = text.substr(0, sp);
            suffix = trim(text.substr(sp));
        }
        if (!suffix.empty() && suffix != unit) {
            if (unit.empty()) fail(e, section, key, "unit violation: value is dimensionless, got '" + std::string(suffix) + "'");
            fail(e, section, key,
                 "unit violation: expected " + std::string(unit) + ", got '" + std::string(suffix) + "'");
        }
        if (!num.empty() && num.front() == '+') num.remove_prefix(1);
        double v = 0.0;
        const auto r = std::from_chars(num.data(), num.data() + num.size(), v);
        if (num.empty() || r.ec != std::errc() || r.ptr != num.data() + num.size() || !std::isfinite(v))
            fail(e, section, key, "not a number: '" + std::string(text) + "'");
        return v;
    }

    std::optional<double> number(std::string_view section, std::string_view key) const {
        const Entry* e = entry(section, key);
        if (!e) return std::nullopt;
        return parse_number(*e, section, key, e->value, find_key(section, key)->unit);
    }

    double number_or(std::string_view section, std::string_view key, double fallback) const {
        return number(section, key).value_or(fallback);
    }

    double nonnegative(std::string_view section, std::string_view key, double fallback) const {
        const auto v = number(section, key);
        if (v && *v < 0.0) fail(*entry(section, key), section, key, "must be >= 0");
        return v.value_or(fallback);
    }

    double positive(std::string_view section, std::string_view key, double fallback) const {
        const auto v = number(section, key);
        if (v && !(*v > 0.0)) fail(*entry(section, key), section, key, "must be > 0");
        return v.value_or(fallback);
    }

    std::optional<long long> integer(std::string_view section, std::string_view key) const {
        const Entry* e = entry(section, key);
        if (!e) return std::nullopt;
        const std::string_view s = trim(e->value);
        long long v = 0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
            fail(*e, section, key, "not an integer: '" + e->value + "'");
        return v;
    }

    std::optional<bool> boolean(std::string_view section, std::string_view key) const {
        const Entry* e = entry(section, key);
        if (!e) return std::nullopt;
        if (e->value == "true") return true;
        if (e->value == "false") return false;
        fail(*e, section, key, "expected true or false, got '" + e->value + "'");
    }

    std::vector<double> list(std::string_view section, std::string_view key) const {
        const Entry* e = entry(section, key);
        if (!e) return {};
        std::vector<double> out;
        std::string_view rest = e->value;
        while (true) {
            const auto comma = rest.find(',');
            const std::string_view item = trim(rest.substr(0, comma));
            if (item.empty()) fail(*e, section, key, "empty list item");
            out.push_back(parse_number(*e, section, key, item, find_key(section, key)->unit));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        return out;
    }

    std::optional<dsl::ScheduleExpr> schedule(std::string_view section, std::string_view key) const {
        const Entry* e = entry(section, key);
        if (!e) return std::nullopt;
        if (e->line == 0) {
            try {
                return dsl::parse_schedule(e->value, 0, 1);
            } catch (const dsl::ScheduleError& err) {
                throw ConfigError("override " + std::string(section) + "." + std::string(key) + ": " + err.what());
            }
        }
        return dsl::parse_schedule(e->value, e->line, e->column);
    }

    void require(std::string_view section, std::string_view key, const std::string& why) const {
        if (!entry(section, key)) throw ConfigError("missing key " + qualified(section, key) + " (" + why + ")");
    }

private:
    const Document& doc_;
};

}  // namespace detail

/// Builds a validated spec from a parsed document.
inline protocols::ExperimentSpec to_spec(const Document& doc) {
    using namespace units;
    using protocols::Kind;
    const detail::Reader r(doc);
    protocols::ExperimentSpec s;

    r.require("experiment", "kind", "every config names its experiment");
    const Entry& kind_entry = *r.entry("experiment", "kind");
    const auto kind = protocols::parse_kind(kind_entry.value);
    if (!kind) r.fail(kind_entry, "experiment", "kind", "unknown kind '" + kind_entry.value + "'");
    s.kind = *kind;
    if (const Entry* e = r.entry("experiment", "engine")) {
        const auto engine = protocols::parse_engine(e->value);
        if (!engine) r.fail(*e, "experiment", "engine", "expected polariton or mb, got '" + e->value + "'");
        s.engine = *engine;
    }

    // Medium.
    r.require("medium", "od_1", "optical depth of the signal transition");
    MediumParams& m = s.medium;
    m.length = from_cm(r.positive("medium", "length", 5.0));
    m.od_1 = r.nonnegative("medium", "od_1", 0.0);
    m.gamma_e1 = from_mhz(r.positive("medium", "gamma_e1", to_mhz(m.gamma_e1)));
    m.gamma_e2 = from_mhz(r.positive("medium", "gamma_e2", to_mhz(m.gamma_e2)));
    m.gamma_gs = from_khz(r.nonnegative("medium", "gamma_gs", m.gamma_gs / from_khz(1.0)));
    m.delta_1 = from_mhz(r.number_or("medium", "delta_1", 0.0));
    m.delta_2 = from_mhz(r.number_or("medium", "delta_2", 0.0));
    m.delta_2ph = from_mhz(r.number_or("medium", "delta_2ph", 0.0));
    const auto od_2 = r.number("medium", "od_2");
    const auto g_ratio = r.number("medium", "g_ratio");
    if (g_ratio && !(*g_ratio > 0.0)) r.fail(*r.entry("medium", "g_ratio"), "medium", "g_ratio", "must be > 0");
    if (od_2 && *od_2 < 0.0) r.fail(*r.entry("medium", "od_2"), "medium", "od_2", "must be >= 0");
    m.g_ratio = g_ratio.value_or(1.0);
    if (od_2) {
        m.od_2 = *od_2;
        if (!g_ratio && m.od_1 > 0.0 && m.od_2 > 0.0) m.g_ratio = std::sqrt(m.coupling_1() / m.coupling_2());
    } else {
        m.od_2 = m.matching_od_2();
    }
    if (m.od_1 > 0.0 && m.od_2 > 0.0) {
        const double implied = std::sqrt(m.coupling_1() / m.coupling_2());
        if (std::abs(implied - m.g_ratio) > 1e-9 * m.g_ratio)
            throw ConfigError("[medium]: g_ratio = " + dsl::format_number(m.g_ratio) +
                                  " contradicts od_1, od_2 and the decay rates (they imply " +
                                  dsl::format_number(implied) + "); give only one of g_ratio and od_2",
                              r.entry("medium", "g_ratio")->line);
    }

    // Signal.
    s.signal.center = from_us(r.number_or("signal", "center", to_us(s.signal.center)));
    s.signal.fwhm = from_us(r.positive("signal", "fwhm", to_us(s.signal.fwhm)));
    s.signal.peak = from_khz(r.nonnegative("signal", "peak", s.signal.peak / from_khz(1.0)));

    // Controls.
    s.power_map.k_pump = from_mhz(r.positive("control.pump", "k", to_mhz(s.power_map.k_pump)));
    s.power_map.k_retrieve = from_mhz(r.positive("control.retrieve", "k", to_mhz(s.power_map.k_retrieve)));
    if (const auto e = r.schedule("control.pump", "schedule")) s.pump_schedule = dsl::to_channel(*e, s.power_map.k_pump);
    if (const auto e = r.schedule("control.retrieve", "schedule"))
        s.retrieve_schedule = dsl::to_channel(*e, s.power_map.k_retrieve);
    if (!s.pump_schedule && s.kind != Kind::cw_fwm) r.require("control.pump", "power", "or give control.pump.schedule");
    s.pump_power = r.nonnegative("control.pump", "power", 0.0);
    s.retrieve_power = r.nonnegative("control.retrieve", "power", 0.0);

    // Grid.
    const double t_start = from_us(r.number_or("grid", "t_start", 0.0));
    const double t_end = from_us(r.number_or("grid", "t_end", 12.0));
    if (!(t_end > t_start)) throw ConfigError("[grid]: t_end must exceed t_start", r.entry("grid", "t_end") ? r.entry("grid", "t_end")->line : 0);
    const auto n_t = r.integer("grid", "n_t");
    const auto dt = r.number("grid", "dt");
    if (n_t && dt) throw ConfigError("[grid]: give n_t or dt, not both", r.entry("grid", "dt")->line);
    if (n_t) {
        if (*n_t < 2) r.fail(*r.entry("grid", "n_t"), "grid", "n_t", "need at least 2 samples");
        s.grid = TimeGrid(t_start, t_end, static_cast<std::size_t>(*n_t));
    } else {
        const double step = from_ns(dt.value_or(5.0));
        if (!(step > 0.0)) r.fail(*r.entry("grid", "dt"), "grid", "dt", "must be > 0");
        s.grid = TimeGrid::with_max_step(t_start, t_end, step);
    }
    if (const auto nz = r.integer("grid", "n_z")) {
        if (*nz < 0) r.fail(*r.entry("grid", "n_z"), "grid", "n_z", "must be >= 0");
        s.n_z = static_cast<std::size_t>(*nz);
    }
    if (const auto order = r.integer("grid", "order")) {
        if (*order != 2 && *order != 4) r.fail(*r.entry("grid", "order"), "grid", "order", "must be 2 or 4");
        s.order = static_cast<int>(*order);
    }

    // Experiment.
    s.loss.enabled = r.boolean("experiment", "loss").value_or(false);
    s.loss.eit_window = r.boolean("experiment", "eit_window").value_or(true);
    s.slow_reference = r.boolean("experiment", "slow_reference").value_or(false);
    s.rise = from_us(r.positive("experiment", "rise", to_us(s.rise)));
    const bool needs_timing = s.kind == Kind::storage || s.kind == Kind::cross_retrieval || s.kind == Kind::ratos;
    const bool ret_needed = s.kind != Kind::eit_slowlight && !s.retrieve_schedule;
    if (needs_timing && !s.pump_schedule) r.require("experiment", "pump_off", "pump turn-off time");
    s.pump_off = from_us(r.number_or("experiment", "pump_off", to_us(s.pump_off)));
    if ((s.kind == Kind::storage || s.kind == Kind::cross_retrieval) && !(s.pump_schedule && s.retrieve_schedule))
        r.require("experiment", "dark_time", "storage time");
    s.dark_time = from_us(r.nonnegative("experiment", "dark_time", to_us(s.dark_time)));
    if (const auto ch = r.integer("experiment", "retrieve_channel")) {
        if (*ch != 1 && *ch != 2)
            r.fail(*r.entry("experiment", "retrieve_channel"), "experiment", "retrieve_channel", "must be 1 or 2");
        s.retrieve_channel = static_cast<int>(*ch);
    }
    if (s.kind == Kind::ratos && !s.retrieve_schedule) r.require("experiment", "delta_t", "retrieve turn-on relative to pump turn-off");
    s.delta_t = from_us(r.number_or("experiment", "delta_t", to_us(s.delta_t)));
    if (s.kind == Kind::beamsplitter && !s.retrieve_schedule)
        r.require("experiment", "retrieve_on", "retrieve turn-on time");
    s.retrieve_on = from_us(r.number_or("experiment", "retrieve_on", to_us(s.retrieve_on)));
    s.retrieve_powers = r.list("experiment", "retrieve_powers");
    for (std::size_t i = 0; i < s.retrieve_powers.size(); ++i)
        if (s.retrieve_powers[i] < 0.0)
            r.fail(*r.entry("experiment", "retrieve_powers"), "experiment", "retrieve_powers", "powers must be >= 0");
    if (ret_needed && !(s.kind == Kind::beamsplitter && !s.retrieve_powers.empty()))
        r.require("control.retrieve", "power", "or give control.retrieve.schedule");

    try {
        s.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    return s;
}

inline protocols::ExperimentSpec parse_config(std::string_view text,
                                              const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    Document doc = parse_document(text);
    for (const auto& [key, value] : overrides) apply_override(doc, key, value);
    return to_spec(doc);
}

}  // namespace ratos::config
