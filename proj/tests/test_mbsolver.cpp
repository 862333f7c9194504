#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "ratos/analysis.hpp"
#include "ratos/mbsolver.hpp"

using namespace ratos;

namespace {

MediumParams lossless(double od = 100.0) {
    MediumParams m;
    m.od_1 = m.od_2 = od;
    m.gamma_gs = 0.0;
    return m;
}

double omega_for_delay(const MediumParams& m, double tau) { return std::sqrt(m.coupling_1() * m.length / tau); }

// Steady-state output written out from the Bloch equations: with d/dt = 0 the
// coherences follow the fields, P = -A^-1 (i E), and dE/dz = K E is linear.
Eigen::Vector2cd steady_state_oracle(double o1, double o2, const MediumParams& m, cplx in) {
    const cplx i{0.0, 1.0};
    Eigen::Matrix3cd a;
    a << -(m.gamma_e1 + i * m.delta_1), 0.0, i * o1,
         0.0, -(m.gamma_e2 + i * m.delta_2), i * o2,
         i * o1, i * o2, -(m.gamma_gs + i * m.delta_2ph);
    const Eigen::Matrix3cd inv = a.inverse();
    const double b1 = m.od_1 * m.gamma_e1 / (2.0 * m.length);
    const double b2 = m.od_2 * m.gamma_e2 / (2.0 * m.length);
    Eigen::Matrix2cd k;
    k << b1 * inv(0, 0), b1 * inv(0, 1), b2 * inv(1, 0), b2 * inv(1, 1);
    const Eigen::Matrix2cd prop = (k * m.length).exp();
    Eigen::Vector2cd out = prop * Eigen::Vector2cd(in, 0.0);
    out(1) *= m.g_ratio;
    return out;
}

}  // namespace

TEST(Calibration, BareAbsorptionIsBeerLambert) {
    for (double od : {1.0, 5.0, 20.0}) {
        MediumParams m = lossless(od);
        const auto r = mb::cw_response(0.0, 0.0, m, 1.0);
        EXPECT_NEAR(std::norm(r.e1_out) / std::exp(-od), 1.0, 1e-3) << od;
        EXPECT_EQ(r.e2_out, cplx(0.0));
    }
}

TEST(Calibration, SteadyStateMatchesMatrixExponential) {
    MediumParams m = lossless(4.0);
    m.gamma_gs = units::from_khz(200.0);
    m.delta_1 = units::from_mhz(1.0);
    m.delta_2ph = units::from_khz(50.0);
    struct Case { double o1, o2; };
    for (const Case c : {Case{units::from_mhz(0.5), units::from_mhz(0.3)}, Case{units::from_mhz(2.0), 0.0},
                         Case{units::from_mhz(1.0), units::from_mhz(1.0)}}) {
        const auto oracle = steady_state_oracle(c.o1, c.o2, m, 1.0);
        const auto r = mb::cw_response(c.o1, c.o2, m, 1.0);
        EXPECT_NEAR(std::abs(r.e1_out - oracle(0)), 0.0, 1e-4 * std::abs(oracle(0))) << c.o1;
        EXPECT_NEAR(std::abs(r.e2_out - oracle(1)), 0.0, 1e-4 * std::max(std::abs(oracle(1)), 1e-3)) << c.o1;
    }
}

TEST(Calibration, FourWaveMixingScalesWithBothControls) {
    // Perturbative regime: E2 out is proportional to Omega1 Omega2.
    MediumParams m = lossless(1.0);
    m.gamma_gs = units::from_mhz(1.0);
    const double base = units::from_mhz(0.05);
    const auto ref = mb::cw_response(base, base, m, 1.0);
    for (double s : {2.0, 4.0}) {
        const auto a = mb::cw_response(s * base, base, m, 1.0);
        const auto b = mb::cw_response(base, s * base, m, 1.0);
        EXPECT_NEAR(std::abs(a.e2_out) / std::abs(ref.e2_out), s, 0.02 * s);
        EXPECT_NEAR(std::abs(b.e2_out) / std::abs(ref.e2_out), s, 0.02 * s);
    }
}

TEST(Integrate, SlowLightTransmitsAtHighOpticalDepth) {
    MediumParams m = lossless(400.0);
    const TimeGrid g(0.0, 6e-6, 1201);
    const auto pulse = gaussian_pulse(1e-6, 400e-9, 1.0, g);
    const double o = omega_for_delay(m, 0.6e-6);
    const ControlSchedule s{ControlChannel::constant_rabi(o), ControlChannel::off()};
    const auto r = mb::integrate(pulse, s, m, {g, 0, 4});
    const double e = analysis::energy(r.waveform.e1, g) / pulse.energy();
    EXPECT_GE(e, 0.95);
    EXPECT_LE(e, 1.0 + 1e-6);
    EXPECT_NEAR(analysis::metrics(r.waveform.e1, g).arrival_time, 1.6e-6, 25e-9);
}

TEST(Integrate, OrderTwoAndFourAgree) {
    MediumParams m = lossless(50.0);
    const TimeGrid g(0.0, 6e-6, 1201);
    const auto pulse = gaussian_pulse(1e-6, 400e-9, 1.0, g);
    const ControlSchedule s{ControlChannel::constant_rabi(omega_for_delay(m, 1e-6)), ControlChannel::off()};
    const auto r4 = mb::integrate(pulse, s, m, {g, 0, 4}).waveform;
    const auto r2 = mb::integrate(pulse, s, m, {g, 400, 2}).waveform;
    EXPECT_NEAR(analysis::energy(r2.e1, g) / analysis::energy(r4.e1, g), 1.0, 2e-3);
}

TEST(Integrate, RejectsBadGrids) {
    MediumParams m = lossless();
    const TimeGrid coarse(0.0, 6e-6, 151);  // 40 ns: gamma_e dt exceeds the stiffness bound
    const auto pulse = gaussian_pulse(1e-6, 1e-6, 1.0, coarse);
    const ControlSchedule s{ControlChannel::constant_rabi(1e7), ControlChannel::off()};
    EXPECT_THROW(mb::integrate(pulse, s, m, {coarse, 0, 4}), GridError);
    const TimeGrid g(0.0, 6e-6, 1201);
    const auto fine = gaussian_pulse(1e-6, 400e-9, 1.0, g);
    EXPECT_THROW(mb::integrate(fine, s, m, {g, 0, 3}), GridError);
    EXPECT_THROW(mb::integrate(fine, s, m, {g, 4, 4}), GridError);
}

TEST(Integrate, ConvergenceCheck) {
    MediumParams m = lossless(100.0);
    const TimeGrid g(0.0, 8e-6, 1601);
    const auto pulse = gaussian_pulse(1e-6, 400e-9, 1.0, g);
    const ControlSchedule s{ControlChannel::constant_rabi(omega_for_delay(m, 1.5e-6)), ControlChannel::off()};
    const double change = mb::check_convergence(pulse, s, m, {g, 0, 4});
    EXPECT_LT(change, 5e-3);
    EXPECT_THROW(mb::check_convergence(pulse, s, m, {g, 8, 4}), AccuracyError);
}

TEST(Adiabaticity, BrightFractionFallsWithSlowerRamps) {
    // Beam splitter turned on at ever slower rates while the pulse is inside the
    // cell: the dark-mode rotation rate and the bright-mode admixture both fall.
    MediumParams m = lossless(100.0);
    const TimeGrid g(0.0, 12e-6, 2401);
    const auto pulse = gaussian_pulse(1e-6, 400e-9, 1.0, g);
    const double o = omega_for_delay(m, 2.5e-6);
    double prev_bright = INFINITY, prev_rate = INFINITY;
    for (double rise : {50e-9, 100e-9, 200e-9, 400e-9}) {
        const ControlSchedule s{ControlChannel::constant_rabi(o), ControlChannel::ramp_on(2.6e-6, rise, o * o, 1.0)};
        const auto r = mb::integrate(pulse, s, m, {g, 0, 4});
        EXPECT_LT(r.report.max_bright_fraction, prev_bright) << rise;
        EXPECT_LT(r.report.max_theta_rate, prev_rate) << rise;
        prev_bright = r.report.max_bright_fraction;
        prev_rate = r.report.max_theta_rate;
    }
}

TEST(Storage, RoundTripLosesOnlyDecoherence) {
    MediumParams m = lossless(200.0);
    m.gamma_gs = units::from_khz(1.0);
    const TimeGrid g(0.0, 14e-6, 2801);
    const auto pulse = gaussian_pulse(1e-6, 400e-9, 1.0, g);
    const double o = omega_for_delay(m, 1.5e-6);
    const mb::StorageTiming timing{o, 2e-6, 200e-9};
    auto retrieved = [&](double dark) {
        const auto w = mb::storage_roundtrip(pulse, m, {g, 0, 4}, dark, 1, o, timing).waveform;
        // Leakage before turn-off is excluded; only the read-out counts.
        const double from = timing.t_off + 0.5 * dark;
        double e = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g.time(i) >= from) e += std::norm(w.e1[i]) * g.dt();
        return e;
    };
    EXPECT_NEAR(retrieved(5e-6) / retrieved(1e-6), std::exp(-2.0 * m.gamma_gs * 4e-6), 0.002);
    EXPECT_THROW(mb::storage_schedule(timing, 1e-6, 3, o), DomainError);
}
