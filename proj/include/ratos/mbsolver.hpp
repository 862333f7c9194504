#pragma once

// Weak-probe Maxwell-Bloch integrator for the double-Lambda medium.
//
// Co-moving frame (z, tau = t - z/c), envelopes E_j in Rabi units:
//
//   dE_j/dz   = i beta_j P_j,                       beta_j = od_j gamma_j / (2L)
//   dP_j/dtau = -(gamma_j + i Delta_j) P_j + i E_j + i Omega_j S
//   dS/dtau   = -(gamma_gs + i delta_2ph) S + i Omega_1 P_1 + i Omega_2 P_2
//
// P_j are the optical coherences, S the ground-state (spin) coherence. The
// atomic part is advanced with exact exponential steps (controls frozen at the
// step midpoint, E linear across the step), which keeps the stiff decay rates
// unconditionally stable. The field equation is marched in z with an explicit
// Runge-Kutta scheme: order 2 (Heun predictor-corrector) or order 4.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "ratos/analysis.hpp"
#include "ratos/error.hpp"
#include "ratos/model.hpp"

namespace ratos::mb {

struct AtomicState {
    cplx p1{}, p2{}, s{};
};

struct SolverGrid {
    TimeGrid grid;
    std::size_t n_z = 0;  // 0 selects max(64, 2 * od)
    int order = 4;        // z-marching order: 2 (Heun) or 4 (classical Runge-Kutta)

    std::size_t slices(const MediumParams& medium) const {
        if (n_z != 0) return n_z;
        const double od = std::max(medium.od_1, medium.od_2);
        return std::max<std::size_t>(64, static_cast<std::size_t>(std::ceil(2.0 * od)));
    }
    SolverGrid refined(const MediumParams& medium) const { return {grid.refined(), 2 * slices(medium), order}; }
};

/// How far the field strayed from the instantaneous dark mode.
///
/// max_bright_fraction is the peak over all slices z > 0 and times of
/// |b_perp|^2 / (|e1|^2 + |e2|^2), counted where the local intensity exceeds 1%
/// of the peak input intensity. max_theta_rate is the largest rate of change of
/// the dark-mode composition angle atan(g1 Omega2 / (g2 Omega1)).
struct AdiabaticityReport {
    double max_bright_fraction = 0.0;
    double max_theta_rate = 0.0;  // rad/s
};

struct MbResult {
    Waveform waveform;
    AdiabaticityReport report;
    std::vector<std::string> warnings;
};

/// Exact one-step atomic propagator for frozen controls and linear E.
///
/// X(t+h) = M X(t) + Ga E(t) + Gb E(t+h), from the augmented-matrix exponential
/// of [[A h, B h, 0], [0, 0, I], [0, 0, 0]].
struct StepMatrices {
    Eigen::Matrix3cd m;
    Eigen::Matrix<cplx, 3, 2> ga;
    Eigen::Matrix<cplx, 3, 2> gb;
};

inline Eigen::Matrix3cd atomic_matrix(double omega1, double omega2, const MediumParams& medium) {
    const cplx i{0.0, 1.0};
    Eigen::Matrix3cd a = Eigen::Matrix3cd::Zero();
    a(0, 0) = -(medium.gamma_e1 + i * medium.delta_1);
    a(1, 1) = -(medium.gamma_e2 + i * medium.delta_2);
    a(2, 2) = -(medium.gamma_gs + i * medium.delta_2ph);
    a(0, 2) = a(2, 0) = i * omega1;
    a(1, 2) = a(2, 1) = i * omega2;
    return a;
}

inline StepMatrices step_matrices(double omega1, double omega2, const MediumParams& medium, double h) {
    const cplx i{0.0, 1.0};
    Eigen::Matrix<cplx, 7, 7> w = Eigen::Matrix<cplx, 7, 7>::Zero();
    w.topLeftCorner<3, 3>() = atomic_matrix(omega1, omega2, medium) * h;
    w(0, 3) = i * h;
    w(1, 4) = i * h;
    w(3, 5) = 1.0;
    w(4, 6) = 1.0;
    const Eigen::Matrix<cplx, 7, 7> e = w.exp();
    StepMatrices s;
    s.m = e.topLeftCorner<3, 3>();
    const Eigen::Matrix<cplx, 3, 2> phi1 = e.block<3, 2>(0, 3);
    const Eigen::Matrix<cplx, 3, 2> phi2 = e.block<3, 2>(0, 5);
    s.ga = phi1 - phi2;
    s.gb = phi2;
    return s;
}

/// Advances one atomic slice by one time step.
inline AtomicState advance(const StepMatrices& s, const AtomicState& x, cplx e1_now, cplx e2_now, cplx e1_next,
                           cplx e2_next) {
    AtomicState y;
    y.p1 = s.m(0, 0) * x.p1 + s.m(0, 1) * x.p2 + s.m(0, 2) * x.s + s.ga(0, 0) * e1_now + s.ga(0, 1) * e2_now +
           s.gb(0, 0) * e1_next + s.gb(0, 1) * e2_next;
    y.p2 = s.m(1, 0) * x.p1 + s.m(1, 1) * x.p2 + s.m(1, 2) * x.s + s.ga(1, 0) * e1_now + s.ga(1, 1) * e2_now +
           s.gb(1, 0) * e1_next + s.gb(1, 1) * e2_next;
    y.s = s.m(2, 0) * x.p1 + s.m(2, 1) * x.p2 + s.m(2, 2) * x.s + s.ga(2, 0) * e1_now + s.ga(2, 1) * e2_now +
          s.gb(2, 0) * e1_next + s.gb(2, 1) * e2_next;
    return y;
}

namespace detail {

/// The spatial derivative operator dE/dz = i beta P[E], identical in every slice
/// because the controls are uniform along the cell.
class SliceOperator {
public:
    SliceOperator(const ControlSchedule& schedule, const MediumParams& medium, const TimeGrid& grid)
        : beta1_(medium.coupling_1()), beta2_(medium.coupling_2()) {
        const std::size_t n = grid.size();
        const double dt = grid.dt();
        steps_.reserve(n - 1);
        double last1 = -1.0, last2 = -1.0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double tm = grid.time(k) + 0.5 * dt;
            const double o1 = schedule.omega_1(tm), o2 = schedule.omega_2(tm);
            if (k > 0 && o1 == last1 && o2 == last2)
                steps_.push_back(steps_.back());
            else
                steps_.push_back(step_matrices(o1, o2, medium, dt));
            last1 = o1;
            last2 = o2;
        }
    }

    void apply(const std::vector<cplx>& e1, const std::vector<cplx>& e2, std::vector<cplx>& d1,
               std::vector<cplx>& d2) const {
        const cplx ib1{0.0, beta1_}, ib2{0.0, beta2_};
        AtomicState x;
        const std::size_t n = e1.size();
        for (std::size_t k = 0; k < n; ++k) {
            d1[k] = ib1 * x.p1;
            d2[k] = ib2 * x.p2;
            if (k + 1 < n) x = advance(steps_[k], x, e1[k], e2[k], e1[k + 1], e2[k + 1]);
        }
    }

private:
    std::vector<StepMatrices> steps_;
    double beta1_, beta2_;
};

inline void axpy(std::vector<cplx>& out, const std::vector<cplx>& x, double a, const std::vector<cplx>& y) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + a * y[i];
}

}  // namespace detail

/// Largest rate on the grid: excited decay/detuning magnitudes and control Rabi frequencies.
inline double max_rate(const ControlSchedule& schedule, const MediumParams& medium, const TimeGrid& grid) {
    double r = std::max({std::abs(cplx(medium.gamma_e1, medium.delta_1)), std::abs(cplx(medium.gamma_e2, medium.delta_2)),
                         std::abs(cplx(medium.gamma_gs, medium.delta_2ph))});
    const double dt = grid.dt();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.time(k);
        r = std::max({r, schedule.omega_1(t), schedule.omega_2(t), schedule.omega_1(t + 0.5 * dt),
                      schedule.omega_2(t + 0.5 * dt)});
    }
    return r;
}

/// Integrates the Maxwell-Bloch equations; boundary E1(0) = pulse, E2(0) = 0.
inline MbResult integrate(const PulseEnvelope& pulse, const ControlSchedule& schedule, const MediumParams& medium,
                          const SolverGrid& solver) {
    medium.validate();
    const TimeGrid& grid = solver.grid;
    if (solver.order != 2 && solver.order != 4)
        throw GridError("integrate: z-marching order must be 2 or 4, got " + std::to_string(solver.order));
    const std::size_t n_z = solver.slices(medium);
    if (n_z < 8) throw GridError("integrate: need at least 8 z slices, got " + std::to_string(n_z));
    const double rate = max_rate(schedule, medium, grid);
    if (grid.dt() * rate > 0.5)
        throw GridError("integrate: stiffness limit violated, dt * max_rate = " + num(grid.dt() * rate) +
                        " > 0.5 (dt = " + num(grid.dt()) + " s)");

    MbResult result;
    const PulseEnvelope input = pulse.resampled(grid);
    const std::size_t n = grid.size();

    double peak_in = 0.0;
    for (const auto& a : input.amp) peak_in = std::max(peak_in, std::abs(a));
    if (peak_in > 0.1 * std::min(medium.gamma_e1, medium.gamma_e2))
        result.warnings.push_back("integrate: peak signal Rabi frequency exceeds 0.1 x excited decay rate; "
                                  "weak-probe approximation is doubtful");

    // Dark-mode direction per time sample, in photon-normalized units.
    std::vector<double> u1(n), u2(n), angle(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = grid.time(k);
        const double a = schedule.omega_1(t), b = medium.g_ratio * schedule.omega_2(t);
        const double norm = std::hypot(a, b);
        u1[k] = norm > 0.0 ? a / norm : 0.0;
        u2[k] = norm > 0.0 ? b / norm : 0.0;
        angle[k] = std::atan2(b, a);
    }
    for (std::size_t k = 0; k + 1 < n; ++k)
        if (std::hypot(u1[k], u2[k]) > 0.0 && std::hypot(u1[k + 1], u2[k + 1]) > 0.0)
            result.report.max_theta_rate =
                std::max(result.report.max_theta_rate, std::abs(angle[k + 1] - angle[k]) / grid.dt());

    const double threshold = 1e-2 * peak_in * peak_in;
    auto track_bright = [&](const std::vector<cplx>& e1, const std::vector<cplx>& e2) {
        for (std::size_t k = 0; k < n; ++k) {
            const cplx a1 = e1[k], a2 = medium.g_ratio * e2[k];
            const double intensity = std::norm(a1) + std::norm(a2);
            if (intensity < threshold || (u1[k] == 0.0 && u2[k] == 0.0)) continue;
            const double bright = std::norm(u2[k] * a1 - u1[k] * a2) / intensity;
            result.report.max_bright_fraction = std::max(result.report.max_bright_fraction, bright);
        }
    };

    const detail::SliceOperator op(schedule, medium, grid);
    const double h = medium.length / static_cast<double>(n_z);

    std::vector<cplx> e1 = input.amp, e2(n);
    std::vector<cplx> k1a(n), k1b(n), k2a(n), k2b(n), k3a(n), k3b(n), k4a(n), k4b(n), ta(n), tb(n);
    for (std::size_t slice = 0; slice < n_z; ++slice) {
        if (solver.order == 2) {
            op.apply(e1, e2, k1a, k1b);
            detail::axpy(ta, e1, h, k1a);
            detail::axpy(tb, e2, h, k1b);
            op.apply(ta, tb, k2a, k2b);
            for (std::size_t k = 0; k < n; ++k) {
                e1[k] += 0.5 * h * (k1a[k] + k2a[k]);
                e2[k] += 0.5 * h * (k1b[k] + k2b[k]);
            }
        } else {
            op.apply(e1, e2, k1a, k1b);
            detail::axpy(ta, e1, 0.5 * h, k1a);
            detail::axpy(tb, e2, 0.5 * h, k1b);
            op.apply(ta, tb, k2a, k2b);
            detail::axpy(ta, e1, 0.5 * h, k2a);
            detail::axpy(tb, e2, 0.5 * h, k2b);
            op.apply(ta, tb, k3a, k3b);
            detail::axpy(ta, e1, h, k3a);
            detail::axpy(tb, e2, h, k3b);
            op.apply(ta, tb, k4a, k4b);
            for (std::size_t k = 0; k < n; ++k) {
                e1[k] += h / 6.0 * (k1a[k] + 2.0 * k2a[k] + 2.0 * k3a[k] + k4a[k]);
                e2[k] += h / 6.0 * (k1b[k] + 2.0 * k2b[k] + 2.0 * k3b[k] + k4b[k]);
            }
        }
        track_bright(e1, e2);
    }

    result.waveform.grid = grid;
    result.waveform.e1 = std::move(e1);
    result.waveform.e2.resize(n);
    for (std::size_t k = 0; k < n; ++k) result.waveform.e2[k] = medium.g_ratio * e2[k];
    return result;
}

/// Relative change of the total output energy when dt and dz are both halved.
/// Throws AccuracyError above `tolerance`.
inline double check_convergence(const PulseEnvelope& pulse, const ControlSchedule& schedule,
                                const MediumParams& medium, const SolverGrid& solver, double tolerance = 5e-3) {
    auto total = [](const Waveform& w) { return analysis::energy(w.e1, w.grid) + analysis::energy(w.e2, w.grid); };
    const double coarse = total(integrate(pulse, schedule, medium, solver).waveform);
    const double fine = total(integrate(pulse, schedule, medium, solver.refined(medium)).waveform);
    const double change = std::abs(fine - coarse) / std::max(std::abs(fine), 1e-300);
    if (change > tolerance)
        throw AccuracyError("grid refinement changed output energy by " + num(100.0 * change) + "%");
    return change;
}

/// Pump timing for a storage run: constant Rabi `omega_pump`, switched off around `t_off`.
struct StorageTiming {
    double omega_pump = 0.0;
    double t_off = 0.0;
    double rise = 200e-9;
};

/// Store with the pump, wait `dark_time`, retrieve on channel 1 or 2 with Rabi `omega_ret`.
inline ControlSchedule storage_schedule(const StorageTiming& timing, double dark_time, int retrieve_channel,
                                        double omega_ret) {
    if (retrieve_channel != 1 && retrieve_channel != 2)
        throw DomainError("storage: retrieve channel must be 1 or 2");
    if (!(dark_time >= 0.0)) throw DomainError("storage: dark time must be >= 0");
    const double p_pump = timing.omega_pump * timing.omega_pump;
    const double p_ret = omega_ret * omega_ret;
    const double t_on = timing.t_off + dark_time;
    ControlSchedule s;
    s.pump = ControlChannel::turn_off(timing.t_off, timing.rise, p_pump, 1.0);
    if (retrieve_channel == 1)
        s.pump.add(PowerTerm{Shape::ramp_on, t_on, 0, timing.rise, p_ret});
    else
        s.retrieve = ControlChannel::ramp_on(t_on, timing.rise, p_ret, 1.0);
    return s;
}

inline MbResult storage_roundtrip(const PulseEnvelope& pulse, const MediumParams& medium, const SolverGrid& solver,
                                  double dark_time, int retrieve_channel, double omega_ret,
                                  const StorageTiming& timing) {
    const ControlSchedule schedule = storage_schedule(timing, dark_time, retrieve_channel, omega_ret);
    MbResult r = integrate(pulse, schedule, medium, solver);

    // Delay-bandwidth check: the slowed pulse must be compressed inside the cell.
    const double v = timing.omega_pump * timing.omega_pump / medium.coupling_1();
    const auto m = analysis::metrics(pulse.amp, pulse.grid);
    if (v * m.fwhm > medium.length ||
        m.arrival_time + m.fwhm > timing.t_off - timing.rise)
        r.warnings.push_back("storage: pulse is not fully compressed inside the cell at pump turn-off");
    return r;
}

struct CwResponse {
    cplx e1_out;
    cplx e2_out;
};

/// Steady-state output for constant controls and a constant input amplitude.
///
/// The run length starts at 10 / (slowest atomic relaxation rate) and is doubled
/// until the final output changes by less than 1e-6 relative. The time step is
/// 0.4 / (fastest rate) unless `max_step` is given.
inline CwResponse cw_response(double omega1, double omega2, const MediumParams& medium, cplx input_amplitude,
                              std::size_t n_z = 0, double max_step = 0.0) {
    medium.validate();
    const Eigen::ComplexEigenSolver<Eigen::Matrix3cd> eig(atomic_matrix(omega1, omega2, medium), false);
    double slowest = INFINITY;
    const double floor = 1e-9 * std::min(medium.gamma_e1, medium.gamma_e2);
    for (int i = 0; i < 3; ++i) {
        const double re = -eig.eigenvalues()(i).real();
        if (re > floor) slowest = std::min(slowest, re);
    }
    ControlSchedule schedule{ControlChannel::constant_rabi(omega1), ControlChannel::constant_rabi(omega2)};
    double span = 10.0 / slowest;
    const double rate = std::max({medium.gamma_e1, medium.gamma_e2, omega1, omega2});
    const double dt = max_step > 0.0 ? std::min(max_step, 0.4 / rate) : 0.4 / rate;

    auto run = [&](double t_end) {
        const TimeGrid grid = TimeGrid::with_max_step(0.0, t_end, dt);
        PulseEnvelope in{grid, std::vector<cplx>(grid.size(), input_amplitude)};
        const MbResult r = integrate(in, schedule, medium, {grid, n_z, 4});
        return CwResponse{r.waveform.e1.back(), r.waveform.e2.back()};
    };
    CwResponse prev = run(span);
    for (int attempt = 0; attempt < 12; ++attempt) {
        span *= 2.0;
        const CwResponse next = run(span);
        const double scale = std::max(std::abs(next.e1_out) + std::abs(next.e2_out), 1e-300 * std::abs(input_amplitude));
        const double change = std::abs(next.e1_out - prev.e1_out) + std::abs(next.e2_out - prev.e2_out);
        prev = next;
        if (change <= 1e-6 * scale || scale == 0.0) return prev;
    }
    throw AccuracyError("cw_response: steady state not reached");
}

}  // namespace ratos::mb
