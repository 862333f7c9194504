#pragma once

// Analytic multimode dark-state-polariton engine.
//
// The signal travels as a dark polariton whose optical part is split between
// the two signal modes in proportion to Omega_j / g_j and whose group velocity
// follows the summed control intensity. With spatially uniform controls the
// polariton obeys d/dt Psi + v_g(t) d/dz Psi = 0, solved here by
// characteristics.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ratos/error.hpp"
#include "ratos/model.hpp"

namespace ratos::polariton {

struct PolaritonState {
    double theta = 0.0;  // light/matter mixing angle, rad
    double w1 = 0.0;     // optical composition of the dark mode
    double w2 = 0.0;
    double v_g = 0.0;    // m/s
};

/// Loss channels of the analytic engine. Disabled by default; with
/// enabled = false the transport is exactly energy conserving.
///
/// When enabled, the polariton decays at gamma_gs * sin^2(theta) and, if
/// `eit_window` is set, the signal is low-passed by the finite EIT window: an
/// amplitude filter exp(-delta^2 / (2 Gamma^2)) with
/// Gamma = Omega~^2 / (gamma_e1 sqrt(od_1)), applied at the entry velocity.
struct LossModel {
    bool enabled = false;
    bool eit_window = true;
};

/// Control intensity weighted by 1/g_j^2, in mode-1 units: Omega1^2 + (g1/g2)^2 Omega2^2.
inline double weighted_control(double omega1, double omega2, const MediumParams& medium) {
    const double o2 = medium.g_ratio * omega2;
    return omega1 * omega1 + o2 * o2;
}

inline double group_velocity(double omega1, double omega2, const MediumParams& medium) {
    const double w = weighted_control(omega1, omega2, medium);
    if (w == 0.0) return 0.0;
    return units::speed_of_light * w / (w + medium.collective_coupling());
}

/// sin^2(theta): matter fraction of the polariton (1 when both controls are off).
inline double matter_fraction(double omega1, double omega2, const MediumParams& medium) {
    const double w = weighted_control(omega1, omega2, medium);
    const double nc = medium.collective_coupling();
    return nc / (w + nc);
}

inline PolaritonState composition(double omega1, double omega2, const MediumParams& medium) {
    if (!(omega1 >= 0.0) || !(omega2 >= 0.0)) throw DomainError("composition: Rabi frequencies must be >= 0");
    const double u1 = omega1;
    const double u2 = medium.g_ratio * omega2;
    const double norm = std::hypot(u1, u2);
    if (norm == 0.0) throw DomainError("composition: undefined with both controls off (polariton is purely atomic)");
    PolaritonState s;
    s.w1 = u1 / norm;
    s.w2 = u2 / norm;
    s.theta = std::atan(std::sqrt(medium.collective_coupling()) / norm);
    s.v_g = group_velocity(omega1, omega2, medium);
    return s;
}

/// Energy ratio E2/E1 of the split output: (g1 Omega2 / (g2 Omega1))^2.
inline double predict_splitting(double omega1_final, double omega2_final, const MediumParams& medium) {
    if (!(omega1_final > 0.0)) throw DomainError("predict_splitting: final pump Rabi frequency must be > 0");
    const double r = medium.g_ratio * omega2_final / omega1_final;
    return r * r;
}

/// a * P_pump / (c * P_pump + P_ret), normalized so the slowed pulse has energy 1.
inline double predict_ratos_energy(double p_pump, double p_ret, double c_coef, double a_coef) {
    return a_coef * p_pump / (c_coef * p_pump + p_ret);
}

struct TransportResult {
    Waveform waveform;
    std::vector<std::string> warnings;
};

namespace detail {

/// Cumulative trapezoid integral of samples on a uniform grid.
inline std::vector<double> cumulative(const std::vector<double>& f, double dt) {
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i) out[i] = out[i - 1] + 0.5 * dt * (f[i - 1] + f[i]);
    return out;
}

/// Catmull-Rom interpolation of complex samples at fractional index x.
inline cplx interpolate(const std::vector<cplx>& a, double x) {
    const auto n = static_cast<std::ptrdiff_t>(a.size());
    if (x < 0.0 || x > static_cast<double>(n - 1)) return {};
    auto i = static_cast<std::ptrdiff_t>(x);
    if (i >= n - 1) i = n - 2;
    const double f = x - static_cast<double>(i);
    auto at = [&](std::ptrdiff_t k) { return a[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, n - 1))]; };
    const cplx p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
    const double f2 = f * f, f3 = f2 * f;
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * f + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * f2 +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * f3);
}

/// Gaussian low-pass of an envelope: amplitude response exp(-delta^2 / (2 bw^2)).
inline std::vector<cplx> gaussian_lowpass(const std::vector<cplx>& a, double bandwidth, double dt) {
    const double sigma_t = 1.0 / bandwidth;
    if (sigma_t < 0.25 * dt) return a;
    const auto half = static_cast<std::ptrdiff_t>(std::ceil(6.0 * sigma_t / dt));
    std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
    double sum = 0.0;
    for (std::ptrdiff_t k = -half; k <= half; ++k) {
        const double x = static_cast<double>(k) * dt / sigma_t;
        sum += kernel[static_cast<std::size_t>(k + half)] = std::exp(-0.5 * x * x);
    }
    for (auto& k : kernel) k /= sum;
    const auto n = static_cast<std::ptrdiff_t>(a.size());
    std::vector<cplx> out(a.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        cplx acc{};
        for (std::ptrdiff_t k = -half; k <= half; ++k) {
            const std::ptrdiff_t j = i - k;
            if (j >= 0 && j < n) acc += kernel[static_cast<std::size_t>(k + half)] * a[static_cast<std::size_t>(j)];
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

}  // namespace detail

/// Propagates `pulse` through the cell under `schedule`.
///
/// A sample entering at t_in leaves at the first t_out with
/// integral_{t_in}^{t_out} v_g = L. Entry projects the mode-1 input onto the
/// dark mode (factor w1(t_in)); the amplitude is rescaled by
/// sqrt(v_g(t_out) / v_g(t_in)) so polariton number is conserved, and the
/// output is split by the composition at t_out.
inline TransportResult transport(const PulseEnvelope& pulse, const ControlSchedule& schedule,
                                 const MediumParams& medium, const LossModel& loss = {}) {
    medium.validate();
    const TimeGrid& grid = pulse.grid;
    const std::size_t n = grid.size();
    const double dt = grid.dt();
    const double length = medium.length;

    std::vector<double> velocity(n), matter(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = grid.time(i);
        const double o1 = schedule.omega_1(t), o2 = schedule.omega_2(t);
        velocity[i] = group_velocity(o1, o2, medium);
        matter[i] = matter_fraction(o1, o2, medium);
    }
    const std::vector<double> path = detail::cumulative(velocity, dt);
    const std::vector<double> dark_time = detail::cumulative(matter, dt);

    TransportResult result{Waveform::zeros(grid), {}};

    std::vector<cplx> input = pulse.amp;
    if (loss.enabled && loss.eit_window) {
        const auto peak = static_cast<std::size_t>(
            std::max_element(input.begin(), input.end(), [](cplx x, cplx y) { return std::norm(x) < std::norm(y); }) -
            input.begin());
        const double v_entry = velocity[peak];
        if (v_entry > 0.0) {
            const double od = std::max(medium.od_1, 1e-300);
            const double bandwidth = v_entry * std::sqrt(od) / (2.0 * length);
            input = detail::gaussian_lowpass(input, bandwidth, dt);
        }
    }

    // Energy that entered while the medium was opaque, or never left the grid.
    double absorbed = 0.0, trapped = 0.0, total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double e = std::norm(input[j]) * dt;
        total += e;
        if (velocity[j] == 0.0)
            absorbed += e;
        else if (path[j] + length > path[n - 1])
            trapped += e;
    }
    if (total > 0.0 && absorbed > 1e-6 * total)
        result.warnings.push_back("transport: " + num(100.0 * absorbed / total) +
                                  "% of the input entered with both controls off and was absorbed");
    if (total > 0.0 && trapped > 1e-6 * total)
        result.warnings.push_back("transport: truncated, " + num(100.0 * trapped / total) +
                                  "% of the input had not exited by the end of the grid");

    for (std::size_t k = 0; k < n; ++k) {
        if (velocity[k] == 0.0) continue;
        const double target = path[k] - length;
        if (target < 0.0) continue;
        // First sample at or beyond `target`; the path is nondecreasing.
        const auto it = std::lower_bound(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(k) + 1, target);
        const auto j = static_cast<std::size_t>(it - path.begin());
        double x_in;  // fractional input index
        if (j == 0)
            x_in = 0.0;
        else
            x_in = static_cast<double>(j - 1) + (target - path[j - 1]) / (path[j] - path[j - 1]);
        const double t_in = grid.t_start() + x_in * dt;

        const double o1_in = schedule.omega_1(t_in), o2_in = schedule.omega_2(t_in);
        const double v_in = group_velocity(o1_in, o2_in, medium);
        if (v_in <= 0.0) continue;
        const double entry_weight = o1_in / std::hypot(o1_in, medium.g_ratio * o2_in);

        cplx amp = detail::interpolate(input, x_in) * entry_weight * std::sqrt(velocity[k] / v_in);
        if (loss.enabled && medium.gamma_gs > 0.0) {
            const auto i0 = std::min(static_cast<std::size_t>(x_in), n - 2);
            const double f = x_in - static_cast<double>(i0);
            const double dark_in = dark_time[i0] * (1.0 - f) + dark_time[i0 + 1] * f;
            amp *= std::exp(-medium.gamma_gs * (dark_time[k] - dark_in));
        }
        const double t = grid.time(k);
        const PolaritonState out = composition(schedule.omega_1(t), schedule.omega_2(t), medium);
        result.waveform.e1[k] = out.w1 * amp;
        result.waveform.e2[k] = out.w2 * amp;
    }
    return result;
}

}  // namespace ratos::polariton
