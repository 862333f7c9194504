#pragma once

// Experiment builders. Each kind assembles a control schedule from a handful
// of timing parameters, runs the chosen engine and collects scalar metrics.
//
// Schedules per kind (P_p = pump_power, P_r = retrieve_power, all edges `rise`):
//   eit_slowlight    pump const(P_p); retrieve off
//   storage          pump const(P_p) off at pump_off, back on at pump_off + dark_time
//                    with P_r (retrieve_channel = 1), or retrieve on with P_r (= 2)
//   cross_retrieval  storage with retrieve_channel forced to 2
//   ratos            pump const(P_p) off at pump_off; retrieve on at pump_off + delta_t
//   beamsplitter     pump const(P_p); retrieve on at retrieve_on, once per P_r in retrieve_powers
//   cw_fwm           both controls constant; steady-state response to a CW input

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ratos/analysis.hpp"
#include "ratos/error.hpp"
#include "ratos/mbsolver.hpp"
#include "ratos/model.hpp"
#include "ratos/polariton.hpp"
#include "ratos/units.hpp"

namespace ratos::protocols {

enum class Kind { eit_slowlight, storage, cross_retrieval, ratos, beamsplitter, cw_fwm };
enum class Engine { polariton, mb };

inline const char* kind_name(Kind k) {
    switch (k) {
        case Kind::eit_slowlight: return "eit_slowlight";
        case Kind::storage: return "storage";
        case Kind::cross_retrieval: return "cross_retrieval";
        case Kind::ratos: return "ratos";
        case Kind::beamsplitter: return "beamsplitter";
        case Kind::cw_fwm: return "cw_fwm";
    }
    return "?";
}

inline std::optional<Kind> parse_kind(const std::string& s) {
    for (Kind k : {Kind::eit_slowlight, Kind::storage, Kind::cross_retrieval, Kind::ratos, Kind::beamsplitter,
                   Kind::cw_fwm})
        if (s == kind_name(k)) return k;
    return std::nullopt;
}

inline const char* engine_name(Engine e) { return e == Engine::mb ? "mb" : "polariton"; }

inline std::optional<Engine> parse_engine(const std::string& s) {
    if (s == "polariton") return Engine::polariton;
    if (s == "mb") return Engine::mb;
    return std::nullopt;
}

struct SignalParams {
    double center = 1e-6;                 // s
    double fwhm = 400e-9;                 // s, intensity FWHM
    double peak = units::from_khz(10.0);  // rad/s, peak signal Rabi frequency
};

struct ExperimentSpec {
    Kind kind = Kind::eit_slowlight;
    Engine engine = Engine::polariton;
    MediumParams medium;
    PowerMap power_map;
    SignalParams signal;
    TimeGrid grid = TimeGrid::with_max_step(0.0, 12e-6, 5e-9);
    std::size_t n_z = 0;  // mb only; 0 = automatic
    int order = 4;        // mb only
    polariton::LossModel loss;

    double pump_power = 4.0;      // mW
    double retrieve_power = 4.0;  // mW
    double rise = 200e-9;         // s, every protocol edge
    double pump_off = 2.5e-6;     // s
    double dark_time = 1e-6;      // s
    int retrieve_channel = 1;     // storage: channel used for retrieval
    double delta_t = -0.5e-6;     // s, retrieve on minus pump off
    double retrieve_on = 2e-6;    // s, beamsplitter retrieve turn-on
    std::vector<double> retrieve_powers;  // mW, beamsplitter sweep

    // Replace the kind's schedule for that channel (powers in mW, k from power_map).
    std::optional<ControlChannel> pump_schedule;
    std::optional<ControlChannel> retrieve_schedule;

    // Also run the eit_slowlight pulse and report fractions relative to it.
    bool slow_reference = false;

    void validate() const {
        medium.validate();
        power_map.validate();
        if (!(signal.fwhm > 0.0)) throw DomainError("signal: fwhm must be > 0");
        if (!(signal.peak >= 0.0)) throw DomainError("signal: peak must be >= 0");
        if (!(pump_power >= 0.0) || !(retrieve_power >= 0.0)) throw DomainError("control: powers must be >= 0 mW");
        for (double p : retrieve_powers)
            if (!(p >= 0.0)) throw DomainError("beamsplitter: retrieve powers must be >= 0 mW");
        if (!(rise > 0.0)) throw DomainError("experiment: rise must be > 0");
        if (!(dark_time >= 0.0)) throw DomainError("storage: dark_time must be >= 0");
        if (retrieve_channel != 1 && retrieve_channel != 2) throw DomainError("storage: retrieve_channel must be 1 or 2");
        if (order != 2 && order != 4) throw GridError("grid: z-marching order must be 2 or 4");
    }
};

/// One-line description of the spec, attached to errors.
inline std::string describe(const ExperimentSpec& s) {
    std::ostringstream o;
    o << "kind=" << kind_name(s.kind) << " engine=" << engine_name(s.engine) << " od=" << s.medium.od_1 << '/'
      << s.medium.od_2 << " P_pump=" << s.pump_power << "mW P_ret=" << s.retrieve_power << "mW grid=["
      << units::to_us(s.grid.t_start()) << ", " << units::to_us(s.grid.t_end()) << "]us n_t=" << s.grid.size();
    return o.str();
}

struct ExperimentResult {
    Waveform waveform;
    std::map<std::string, double> scalars;
    std::optional<mb::AdiabaticityReport> report;
    std::vector<std::string> warnings;
    std::map<std::string, std::vector<double>> series;
};

namespace detail {

[[noreturn]] inline void rethrow_with(const std::string& context) {
    try {
        throw;
    } catch (const DomainError& e) {
        throw DomainError(std::string(e.what()) + context);
    } catch (const ResolutionError& e) {
        throw ResolutionError(std::string(e.what()) + context);
    } catch (const GridError& e) {
        throw GridError(std::string(e.what()) + context);
    } catch (const AccuracyError& e) {
        throw AccuracyError(std::string(e.what()) + context);
    } catch (const EmptyPulseError& e) {
        throw EmptyPulseError(std::string(e.what()) + context);
    } catch (const FitError& e) {
        throw FitError(std::string(e.what()) + context);
    } catch (const ProtocolError& e) {
        throw ProtocolError(std::string(e.what()) + context);
    }
}

inline void add_channel_metrics(std::map<std::string, double>& out, const std::string& name,
                                const std::vector<cplx>& samples, const TimeGrid& grid) {
    const double e = analysis::energy(samples, grid);
    out[name + "_energy"] = e;
    if (!(e > 0.0)) return;
    const auto m = analysis::metrics(samples, grid);
    out[name + "_peak"] = m.peak_power;
    out[name + "_fwhm"] = m.fwhm;
    out[name + "_arrival"] = m.arrival_time;
}

/// Energy of `samples` over t >= t_from.
inline double energy_after(const std::vector<cplx>& samples, const TimeGrid& grid, double t_from) {
    double e = 0.0;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i)
        if (grid.time(i) >= t_from) e += 0.5 * (std::norm(samples[i]) + std::norm(samples[i + 1]));
    return e * grid.dt();
}

}  // namespace detail

/// Distance the polariton travels between t0 and t1 under `schedule` (m).
inline double path_length(const ControlSchedule& schedule, const MediumParams& medium, double t0, double t1,
                          std::size_t steps = 2000) {
    if (t1 == t0) return 0.0;
    if (t1 < t0) return -path_length(schedule, medium, t1, t0, steps);
    const double h = (t1 - t0) / static_cast<double>(steps);
    double x = 0.0;
    auto v = [&](double t) { return polariton::group_velocity(schedule.omega_1(t), schedule.omega_2(t), medium); };
    double prev = v(t0);
    for (std::size_t i = 1; i <= steps; ++i) {
        const double cur = v(t0 + h * static_cast<double>(i));
        x += 0.5 * h * (prev + cur);
        prev = cur;
    }
    return x;
}

struct InsideCheck {
    bool inside = false;   // both half-max points between 0 and L at t_off
    bool escaped = false;  // pulse center already past L at t_off
    double front = 0.0;    // m, leading half-max position at t_off
    double back = 0.0;     // m, trailing half-max position (negative: not yet entered)
};

inline InsideCheck pulse_inside(const SignalParams& signal, const ControlSchedule& schedule,
                                const MediumParams& medium, double t_off) {
    InsideCheck c;
    const double half = 0.5 * signal.fwhm;
    c.front = path_length(schedule, medium, signal.center - half, t_off);
    c.back = path_length(schedule, medium, signal.center + half, t_off);
    if (t_off < signal.center + half) c.back = -1.0;
    c.escaped = path_length(schedule, medium, signal.center, t_off) > medium.length;
    c.inside = c.back >= 0.0 && c.front <= medium.length;
    return c;
}

/// Control schedule in Rabi units (k folded into each channel).
inline ControlSchedule build_schedule(const ExperimentSpec& s) {
    const double kp = s.power_map.k_pump, kr = s.power_map.k_retrieve;
    ControlSchedule out;
    switch (s.kind) {
        case Kind::eit_slowlight:
        case Kind::cw_fwm:
            out.pump = ControlChannel::constant(s.pump_power, kp);
            out.retrieve = s.kind == Kind::cw_fwm ? ControlChannel::constant(s.retrieve_power, kr) : ControlChannel{};
            out.retrieve.k = kr;
            break;
        case Kind::storage:
        case Kind::cross_retrieval: {
            const int channel = s.kind == Kind::cross_retrieval ? 2 : s.retrieve_channel;
            const double t_on = s.pump_off + s.dark_time;
            out.pump = ControlChannel::turn_off(s.pump_off, s.rise, s.pump_power, kp);
            out.retrieve.k = kr;
            if (channel == 1)
                out.pump.add(PowerTerm{Shape::ramp_on, t_on, 0.0, s.rise, s.retrieve_power});
            else
                out.retrieve.add(PowerTerm{Shape::ramp_on, t_on, 0.0, s.rise, s.retrieve_power});
            break;
        }
        case Kind::ratos:
            out.pump = ControlChannel::turn_off(s.pump_off, s.rise, s.pump_power, kp);
            out.retrieve = ControlChannel::ramp_on(s.pump_off + s.delta_t, s.rise, s.retrieve_power, kr);
            break;
        case Kind::beamsplitter:
            out.pump = ControlChannel::constant(s.pump_power, kp);
            out.retrieve = ControlChannel::ramp_on(s.retrieve_on, s.rise, s.retrieve_power, kr);
            break;
    }
    if (s.pump_schedule) {
        out.pump = *s.pump_schedule;
        out.pump.k = kp;
    }
    if (s.retrieve_schedule) {
        out.retrieve = *s.retrieve_schedule;
        out.retrieve.k = kr;
    }
    return out;
}

inline PulseEnvelope build_pulse(const ExperimentSpec& s) {
    return gaussian_pulse(s.signal.center, s.signal.fwhm, s.signal.peak, s.grid);
}

/// Runs one engine on one schedule.
inline Waveform propagate(const ExperimentSpec& s, const PulseEnvelope& pulse, const ControlSchedule& schedule,
                          std::optional<mb::AdiabaticityReport>* report, std::vector<std::string>& warnings) {
    if (s.engine == Engine::mb) {
        mb::MbResult r = mb::integrate(pulse, schedule, s.medium, {s.grid, s.n_z, s.order});
        if (report) {
            if (*report) {
                (*report)->max_bright_fraction = std::max((*report)->max_bright_fraction, r.report.max_bright_fraction);
                (*report)->max_theta_rate = std::max((*report)->max_theta_rate, r.report.max_theta_rate);
            } else {
                *report = r.report;
            }
        }
        warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
        return std::move(r.waveform);
    }
    polariton::TransportResult r = polariton::transport(pulse, schedule, s.medium, s.loss);
    warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
    return std::move(r.waveform);
}

namespace detail {

inline void add_common(ExperimentResult& out, const Waveform& w, double input_energy) {
    add_channel_metrics(out.scalars, "e1", w.e1, w.grid);
    add_channel_metrics(out.scalars, "e2", w.e2, w.grid);
    const double e1 = out.scalars["e1_energy"], e2 = out.scalars["e2_energy"];
    out.scalars["input_energy"] = input_energy;
    out.scalars["e1_fraction"] = e1 / input_energy;
    out.scalars["e2_fraction"] = e2 / input_energy;
    out.scalars["total_fraction"] = (e1 + e2) / input_energy;
    if (e1 > 0.0) out.scalars["ratio"] = e2 / e1;
    if (e1 + e2 > 0.0) out.scalars["e2_purity"] = e2 / (e1 + e2);
}

inline ExperimentResult run_cw(const ExperimentSpec& s) {
    const ControlSchedule sched = build_schedule(s);
    const double o1 = sched.omega_1(s.grid.t_start()), o2 = sched.omega_2(s.grid.t_start());
    const cplx input = s.signal.peak;
    cplx e1, e2;
    if (s.engine == Engine::mb) {
        const mb::CwResponse r = mb::cw_response(o1, o2, s.medium, input, s.n_z);
        e1 = r.e1_out;
        e2 = r.e2_out;
    } else {
        // Dark-state projection only: the bright remainder is absorbed.
        const polariton::PolaritonState st = polariton::composition(o1, o2, s.medium);
        e1 = st.w1 * st.w1 * input;
        e2 = st.w1 * st.w2 * input;
    }
    ExperimentResult out;
    out.waveform = Waveform::zeros(s.grid);
    std::fill(out.waveform.e1.begin(), out.waveform.e1.end(), e1);
    std::fill(out.waveform.e2.begin(), out.waveform.e2.end(), e2);
    const double p_in = std::norm(input);
    out.scalars["input_power"] = p_in;
    out.scalars["p1"] = std::norm(e1);
    out.scalars["p2"] = std::norm(e2);
    if (p_in > 0.0) {
        out.scalars["transmission_1"] = std::norm(e1) / p_in;
        out.scalars["conversion_2"] = std::norm(e2) / p_in;
    }
    out.scalars["omega_1"] = o1;
    out.scalars["omega_2"] = o2;
    return out;
}

}  // namespace detail

/// Runs the experiment. Deterministic for a fixed spec.
inline ExperimentResult run(const ExperimentSpec& spec) {
    try {
        spec.validate();
        if (spec.kind == Kind::cw_fwm) return detail::run_cw(spec);

        const PulseEnvelope pulse = build_pulse(spec);
        const double input_energy = pulse.energy();
        if (!(input_energy > 0.0)) throw EmptyPulseError("signal: input pulse carries no energy");
        ExperimentResult out;
        auto* report = spec.engine == Engine::mb ? &out.report : nullptr;

        if (spec.kind == Kind::beamsplitter) {
            std::vector<double> powers = spec.retrieve_powers;
            if (powers.empty()) powers.push_back(spec.retrieve_power);
            std::vector<double> ratio, f1, f2, ft, predicted;
            for (std::size_t i = 0; i < powers.size(); ++i) {
                ExperimentSpec point = spec;
                point.retrieve_power = powers[i];
                const ControlSchedule sched = build_schedule(point);
                Waveform w = propagate(point, pulse, sched, report, out.warnings);
                const double e1 = analysis::energy(w.e1, w.grid), e2 = analysis::energy(w.e2, w.grid);
                ratio.push_back(e1 > 0.0 ? e2 / e1 : INFINITY);
                f1.push_back(e1 / input_energy);
                f2.push_back(e2 / input_energy);
                ft.push_back((e1 + e2) / input_energy);
                const double t_end = w.grid.t_end();
                const double o1 = sched.omega_1(t_end), o2 = sched.omega_2(t_end);
                predicted.push_back(o1 > 0.0 ? polariton::predict_splitting(o1, o2, point.medium) : INFINITY);
                if (i == 0) out.waveform = std::move(w);
            }
            out.series["retrieve_power"] = powers;
            out.series["ratio"] = ratio;
            out.series["predicted_ratio"] = predicted;
            out.series["e1_fraction"] = f1;
            out.series["e2_fraction"] = f2;
            out.series["total_fraction"] = ft;
            detail::add_common(out, out.waveform, input_energy);
            out.scalars["retrieve_power"] = powers.front();
            out.scalars["predicted_ratio"] = predicted.front();
        } else {
            const ControlSchedule sched = build_schedule(spec);
            out.waveform = propagate(spec, pulse, sched, report, out.warnings);
            detail::add_common(out, out.waveform, input_energy);

            if ((spec.kind == Kind::storage || spec.kind == Kind::cross_retrieval || spec.kind == Kind::ratos) &&
                !spec.pump_schedule) {
                const InsideCheck inside = pulse_inside(spec.signal, sched, spec.medium, spec.pump_off);
                if (!inside.inside)
                    out.warnings.push_back("protocol: signal pulse is not fully inside the cell at pump turn-off");
            }
            if (spec.kind == Kind::storage || spec.kind == Kind::cross_retrieval) {
                // Light leaving before mid-storage is leakage, not retrieval.
                const double t_from = spec.pump_off + 0.5 * spec.dark_time;
                const double r1 = detail::energy_after(out.waveform.e1, out.waveform.grid, t_from);
                const double r2 = detail::energy_after(out.waveform.e2, out.waveform.grid, t_from);
                out.scalars["retrieve_window_start"] = t_from;
                out.scalars["retrieved_energy"] = r1 + r2;
                out.scalars["retrieved_fraction"] = (r1 + r2) / input_energy;
            }
        }

        if (spec.slow_reference && spec.kind != Kind::eit_slowlight) {
            ExperimentSpec ref = spec;
            ref.kind = Kind::eit_slowlight;
            ref.pump_schedule.reset();
            ref.retrieve_schedule.reset();
            std::vector<std::string> ignored;
            const Waveform w = propagate(ref, pulse, build_schedule(ref), nullptr, ignored);
            const double slow = analysis::energy(w.e1, w.grid);
            out.scalars["slow_energy"] = slow;
            if (slow > 0.0) {
                out.scalars["e1_vs_slow"] = out.scalars["e1_energy"] / slow;
                out.scalars["e2_vs_slow"] = out.scalars["e2_energy"] / slow;
                out.scalars["total_vs_slow"] = (out.scalars["e1_energy"] + out.scalars["e2_energy"]) / slow;
                if (auto it = out.series.find("e1_fraction"); it != out.series.end()) {
                    std::vector<double> v1, v2;
                    for (double f : it->second) v1.push_back(f * input_energy / slow);
                    for (double f : out.series["e2_fraction"]) v2.push_back(f * input_energy / slow);
                    out.series["e1_vs_slow"] = v1;
                    out.series["e2_vs_slow"] = v2;
                }
            }
        }
        if (out.report) {
            out.scalars["max_bright_fraction"] = out.report->max_bright_fraction;
            out.scalars["max_theta_rate"] = out.report->max_theta_rate;
        }
        return out;
    } catch (const Error&) {
        detail::rethrow_with(" [" + describe(spec) + "]");
    }
}

struct DelaySweep {
    std::vector<double> delta_t;  // s
    std::vector<double> arrival;  // s, e2 peak time
};

/// Runs a ratos spec once per delay and records the e2 arrival time.
inline DelaySweep sweep_delay(const ExperimentSpec& spec, const std::vector<double>& delta_ts) {
    if (spec.kind != Kind::ratos) throw ProtocolError("sweep_delay: needs a ratos spec");
    bool negative = false, positive = false;
    for (double d : delta_ts) (d < 0.0 ? negative : positive) = true;
    if (!negative || !positive) throw ProtocolError("sweep_delay: delays must include negative and positive values");
    DelaySweep out;
    for (double d : delta_ts) {
        ExperimentSpec point = spec;
        point.delta_t = d;
        const InsideCheck inside = pulse_inside(point.signal, build_schedule(point), point.medium, point.pump_off);
        if (inside.escaped)
            throw ProtocolError("sweep_delay: signal escapes the cell before pump turn-off at delta_t = " +
                                num(units::to_us(d)) + " us");
        const ExperimentResult r = run(point);
        const auto it = r.scalars.find("e2_arrival");
        if (it == r.scalars.end())
            throw EmptyPulseError("sweep_delay: no light on e2 at delta_t = " + num(units::to_us(d)) + " us");
        out.delta_t.push_back(d);
        out.arrival.push_back(it->second);
    }
    return out;
}

}  // namespace ratos::protocols
