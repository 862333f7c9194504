#pragma once

// Domain types shared by both propagation engines: medium constants, the
// power-to-Rabi mapping, time grids, control schedules and signal envelopes.
//
// Internal units are SI throughout: seconds, meters, rad/s. Signal envelopes
// are carried in Rabi-frequency units (rad/s) so the propagation equations need
// no extra constants.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ratos/error.hpp"
#include "ratos/units.hpp"

namespace ratos {

using cplx = std::complex<double>;

/// Constants of the double-Lambda medium.
///
/// The collective coupling of signal transition j is derived from the optical
/// depth, never stored: beta_j = od_j * gamma_e_j / (2 L), so with both controls
/// off the resonant CW intensity transmission is exp(-od_j).
///
/// g_ratio = g1/g2 is tied to the couplings by g_ratio^2 = beta_1 / beta_2
/// whenever both optical depths are positive; validate() enforces it.
struct MediumParams {
    double length = 0.05;                      // m
    double od_1 = 100.0;
    double od_2 = 100.0;
    double gamma_e1 = units::from_mhz(3.0);    // rad/s
    double gamma_e2 = units::from_mhz(3.0);    // rad/s
    double gamma_gs = units::from_khz(1.0);    // rad/s
    double g_ratio = 1.0;
    double delta_1 = 0.0;                      // rad/s
    double delta_2 = 0.0;                      // rad/s
    double delta_2ph = 0.0;                    // rad/s

    double coupling_1() const { return od_1 * gamma_e1 / (2.0 * length); }
    double coupling_2() const { return od_2 * gamma_e2 / (2.0 * length); }

    /// Collective coupling g1^2 N in (rad/s)^2, normalized to mode 1.
    double collective_coupling() const { return coupling_1() * units::speed_of_light; }

    /// od_2 consistent with g_ratio for the current od_1 and decay rates.
    double matching_od_2() const { return od_1 * gamma_e1 / (gamma_e2 * g_ratio * g_ratio); }

    void validate() const {
        if (!(length > 0.0)) throw DomainError("medium: length must be > 0");
        if (!(od_1 >= 0.0) || !(od_2 >= 0.0)) throw DomainError("medium: optical depths must be >= 0");
        if (!(gamma_e1 > 0.0) || !(gamma_e2 > 0.0)) throw DomainError("medium: excited decay rates must be > 0");
        if (!(gamma_gs >= 0.0)) throw DomainError("medium: ground-state decoherence must be >= 0");
        if (!(g_ratio > 0.0)) throw DomainError("medium: g_ratio must be > 0");
        if (od_1 > 0.0 && od_2 > 0.0) {
            const double implied = std::sqrt(coupling_1() / coupling_2());
            if (std::abs(implied - g_ratio) > 1e-9 * g_ratio)
                throw DomainError("medium: g_ratio " + num(g_ratio) +
                                  " inconsistent with optical depths (implied " + num(implied) + ")");
        }
    }
};

/// Signal channel selector.
enum class Channel { pump = 1, retrieve = 2 };

/// Laser power (mW) to Rabi frequency: Omega = k * sqrt(P).
struct PowerMap {
    double k_pump = units::from_mhz(2.0);      // rad/s per sqrt(mW)
    double k_retrieve = units::from_mhz(2.0);  // rad/s per sqrt(mW)

    double k(Channel which) const { return which == Channel::pump ? k_pump : k_retrieve; }

    void validate() const {
        if (!(k_pump > 0.0) || !(k_retrieve > 0.0)) throw DomainError("power map: k must be > 0");
    }
};

inline double power_to_rabi(double power_mw, const PowerMap& map, Channel which) {
    if (!(power_mw >= 0.0)) throw DomainError("power_to_rabi: negative power " + num(power_mw));
    return map.k(which) * std::sqrt(power_mw);
}

/// Uniform sampling of [t_start, t_end] with n_t points.
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double t_start, double t_end, std::size_t n_t) : t_start_(t_start), t_end_(t_end), n_t_(n_t) {
        if (!(t_end > t_start)) throw GridError("time grid: t_end must exceed t_start");
        if (n_t < 2) throw GridError("time grid: need at least 2 samples");
    }

    /// Grid covering [t_start, t_end] with spacing no larger than max_dt.
    static TimeGrid with_max_step(double t_start, double t_end, double max_dt) {
        if (!(max_dt > 0.0)) throw GridError("time grid: step must be > 0");
        const auto n = static_cast<std::size_t>(std::ceil((t_end - t_start) / max_dt - 1e-9)) + 1;
        return TimeGrid(t_start, t_end, std::max<std::size_t>(n, 2));
    }

    double t_start() const { return t_start_; }
    double t_end() const { return t_end_; }
    std::size_t size() const { return n_t_; }
    double dt() const { return (t_end_ - t_start_) / static_cast<double>(n_t_ - 1); }
    double time(std::size_t i) const { return t_start_ + dt() * static_cast<double>(i); }

    /// Same interval, step halved.
    TimeGrid refined() const { return TimeGrid(t_start_, t_end_, 2 * (n_t_ - 1) + 1); }

    bool operator==(const TimeGrid&) const = default;

private:
    double t_start_ = 0.0;
    double t_end_ = 1.0;
    std::size_t n_t_ = 2;
};

/// Primitive waveform shapes of a control schedule, in power units.
///
/// The tanh edge is P * (1 + tanh(4 (t - t0) / rise)) / 2, so `rise` is the
/// 12%-88% width (close to the 10%-90% time).
enum class Shape { constant, ramp_on, ramp_off, pulse, gauss };

/// One additive power term (times in seconds, power in mW).
///
/// - constant: power
/// - ramp_on:  rises from 0 to +power around t0 (width `width`)
/// - ramp_off: falls by `power` around t0; it subtracts, so it is paired with
///             an earlier constant or ramp_on
/// - pulse:    gate from t0 to t1 with tanh edges of width `width`
/// - gauss:    Gaussian centered at t0 with FWHM `width`
struct PowerTerm {
    Shape shape = Shape::constant;
    double t0 = 0.0;
    double t1 = 0.0;
    double width = 0.0;
    double power = 0.0;

    double operator()(double t) const {
        switch (shape) {
            case Shape::constant:
                return power;
            case Shape::ramp_on:
                return power * edge(t, t0);
            case Shape::ramp_off:
                return -power * edge(t, t0);
            case Shape::pulse:
                return power * 0.5 * (std::tanh(4.0 * (t - t0) / width) - std::tanh(4.0 * (t - t1) / width));
            case Shape::gauss: {
                const double x = (t - t0) / width;
                return power * std::exp(-4.0 * std::numbers::ln2 * x * x);
            }
        }
        return 0.0;
    }

    bool operator==(const PowerTerm&) const = default;

private:
    double edge(double t, double at) const { return 0.5 * (1.0 + std::tanh(4.0 * (t - at) / width)); }
};

/// One control laser: a sum of power terms mapped to a Rabi frequency.
struct ControlChannel {
    std::vector<PowerTerm> terms;
    double k = 1.0;  // rad/s per sqrt(mW)

    double power(double t) const {
        double p = 0.0;
        for (const auto& term : terms) p += term(t);
        return p;
    }

    /// Rabi frequency; round-off below zero in cancelling edges is clamped.
    double omega(double t) const { return k * std::sqrt(std::max(0.0, power(t))); }

    bool empty() const { return terms.empty(); }

    static ControlChannel off() { return {}; }
    static ControlChannel constant(double power_mw, double k) {
        return {{PowerTerm{Shape::constant, 0, 0, 0, power_mw}}, k};
    }
    static ControlChannel ramp_on(double t0, double rise, double power_mw, double k) {
        return {{PowerTerm{Shape::ramp_on, t0, 0, rise, power_mw}}, k};
    }
    /// Constant power that turns off around t0.
    static ControlChannel turn_off(double t0, double fall, double power_mw, double k) {
        return {{PowerTerm{Shape::constant, 0, 0, 0, power_mw}, PowerTerm{Shape::ramp_off, t0, 0, fall, power_mw}}, k};
    }
    /// A channel whose Rabi frequency is given directly (k = 1, power = Omega^2).
    static ControlChannel constant_rabi(double omega) { return constant(omega * omega, 1.0); }

    ControlChannel& add(const PowerTerm& term) {
        terms.push_back(term);
        return *this;
    }
};

/// Time-dependent Rabi frequencies of pump (Omega_1) and retrieve (Omega_2).
struct ControlSchedule {
    ControlChannel pump;
    ControlChannel retrieve;

    double omega_1(double t) const { return pump.omega(t); }
    double omega_2(double t) const { return retrieve.omega(t); }
};

/// Complex signal envelope on a time grid (Rabi-frequency units).
struct PulseEnvelope {
    TimeGrid grid;
    std::vector<cplx> amp;

    /// Trapezoid energy of |amp|^2.
    double energy() const {
        double e = 0.0;
        for (std::size_t i = 0; i + 1 < amp.size(); ++i) e += 0.5 * (std::norm(amp[i]) + std::norm(amp[i + 1]));
        return e * grid.dt();
    }

    /// Linear interpolation at an arbitrary time (zero outside the grid).
    cplx at(double t) const {
        const double x = (t - grid.t_start()) / grid.dt();
        if (x < 0.0 || x > static_cast<double>(amp.size() - 1)) return {};
        const auto i = std::min(static_cast<std::size_t>(x), amp.size() - 2);
        const double f = x - static_cast<double>(i);
        return amp[i] * (1.0 - f) + amp[i + 1] * f;
    }

    /// Resampled onto another grid by linear interpolation.
    PulseEnvelope resampled(const TimeGrid& target) const {
        if (target == grid) return *this;
        PulseEnvelope out{target, std::vector<cplx>(target.size())};
        for (std::size_t i = 0; i < target.size(); ++i) out.amp[i] = at(target.time(i));
        return out;
    }
};

/// Gaussian whose intensity |amp|^2 has the requested FWHM.
inline PulseEnvelope gaussian_pulse(double center, double fwhm, double peak, const TimeGrid& grid) {
    if (!(fwhm > 0.0)) throw DomainError("gaussian_pulse: fwhm must be > 0");
    // Relative slack absorbs round-off in grids built as (t1 - t0) / (n - 1).
    if (grid.dt() > fwhm / 20.0 * (1.0 + 1e-9))
        throw ResolutionError("gaussian_pulse: grid step " + num(grid.dt()) + " s does not resolve FWHM " + num(fwhm) +
                              " s (need dt <= fwhm/20)");
    PulseEnvelope p{grid, std::vector<cplx>(grid.size())};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = (grid.time(i) - center) / fwhm;
        p.amp[i] = peak * std::exp(-2.0 * std::numbers::ln2 * x * x);
    }
    return p;
}

/// Output envelopes at z = L for the signal (e1) and Ratos (e2) modes.
///
/// Both channels are normalized to photon flux in mode-1 Rabi units
/// (e2 = g1/g2 * Omega-unit field), so |e1|^2 and |e2|^2 compare directly.
struct Waveform {
    TimeGrid grid;
    std::vector<cplx> e1;
    std::vector<cplx> e2;

    static Waveform zeros(const TimeGrid& grid) {
        return {grid, std::vector<cplx>(grid.size()), std::vector<cplx>(grid.size())};
    }
    double p1(std::size_t i) const { return std::norm(e1[i]); }
    double p2(std::size_t i) const { return std::norm(e2[i]); }
};

}  // namespace ratos
