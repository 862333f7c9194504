#include <gtest/gtest.h>

#include <cmath>

#include "ratos/model.hpp"

using namespace ratos;

TEST(Medium, CouplingFromOpticalDepth) {
    MediumParams m;
    m.od_1 = 40.0;
    m.length = 0.02;
    m.gamma_e1 = 1e7;
    EXPECT_DOUBLE_EQ(m.coupling_1(), 40.0 * 1e7 / 0.04);
    EXPECT_DOUBLE_EQ(m.collective_coupling(), m.coupling_1() * units::speed_of_light);
}

TEST(Medium, ValidateRejectsNonsense) {
    MediumParams m;
    EXPECT_NO_THROW(m.validate());
    m.length = 0.0;
    EXPECT_THROW(m.validate(), DomainError);
    m = {};
    m.gamma_gs = -1.0;
    EXPECT_THROW(m.validate(), DomainError);
    m = {};
    m.od_1 = -2.0;
    EXPECT_THROW(m.validate(), DomainError);
    m = {};
    m.g_ratio = 2.0;  // od_1 = od_2 implies g_ratio = 1
    EXPECT_THROW(m.validate(), DomainError);
    m.od_2 = m.matching_od_2();
    EXPECT_NO_THROW(m.validate());
    EXPECT_NEAR(m.od_2, 25.0, 1e-12);
}

TEST(PowerMap, SquareRootLaw) {
    PowerMap map;
    EXPECT_DOUBLE_EQ(power_to_rabi(4.0, map, Channel::pump), 2.0 * map.k_pump);
    EXPECT_DOUBLE_EQ(power_to_rabi(0.0, map, Channel::retrieve), 0.0);
    EXPECT_THROW(power_to_rabi(-1.0, map, Channel::pump), DomainError);
    map.k_retrieve = 0.0;
    EXPECT_THROW(map.validate(), DomainError);
}

TEST(TimeGrid, SpacingAndRefinement) {
    const TimeGrid g(0.0, 1e-6, 101);
    EXPECT_DOUBLE_EQ(g.dt(), 1e-8);
    EXPECT_DOUBLE_EQ(g.time(100), 1e-6);
    const TimeGrid r = g.refined();
    EXPECT_EQ(r.size(), 201u);
    EXPECT_DOUBLE_EQ(r.dt(), 0.5e-8);
    EXPECT_THROW(TimeGrid(1.0, 1.0, 10), GridError);
    EXPECT_THROW(TimeGrid(0.0, 1.0, 1), GridError);
    const TimeGrid w = TimeGrid::with_max_step(0.0, 1e-6, 3e-9);
    EXPECT_LE(w.dt(), 3e-9);
    EXPECT_GT(w.dt(), 2.9e-9);
}

TEST(PowerTerm, Shapes) {
    const PowerTerm on{Shape::ramp_on, 1.0, 0.0, 0.2, 5.0};
    EXPECT_DOUBLE_EQ(on(1.0), 2.5);
    EXPECT_NEAR(on(-10.0), 0.0, 1e-12);
    EXPECT_NEAR(on(10.0), 5.0, 1e-12);
    const PowerTerm off{Shape::ramp_off, 1.0, 0.0, 0.2, 5.0};
    EXPECT_DOUBLE_EQ(on(3.0) + off(3.0), 0.0);
    const PowerTerm pulse{Shape::pulse, 1.0, 3.0, 0.2, 4.0};
    EXPECT_NEAR(pulse(2.0), 4.0, 1e-9);
    EXPECT_NEAR(pulse(1.0), 2.0, 1e-9);
    EXPECT_NEAR(pulse(5.0), 0.0, 1e-9);
    const PowerTerm g{Shape::gauss, 2.0, 0.0, 0.5, 3.0};
    EXPECT_DOUBLE_EQ(g(2.0), 3.0);
    EXPECT_NEAR(g(2.25), 1.5, 1e-12);
}

TEST(ControlChannel, ClampsRoundOffAndMapsPower) {
    auto ch = ControlChannel::turn_off(1e-6, 0.2e-6, 9.0, 2.0);
    EXPECT_NEAR(ch.omega(0.0), 6.0, 1e-9);
    EXPECT_GE(ch.omega(5e-6), 0.0);
    EXPECT_NEAR(ch.omega(5e-6), 0.0, 1e-6);
    EXPECT_DOUBLE_EQ(ControlChannel::constant_rabi(3.5).omega(7.0), 3.5);
    EXPECT_DOUBLE_EQ(ControlChannel::off().omega(0.0), 0.0);
}

TEST(Pulse, GaussianEnvelope) {
    const TimeGrid g(0.0, 4e-6, 4001);
    const auto p = gaussian_pulse(2e-6, 400e-9, 3.0, g);
    EXPECT_DOUBLE_EQ(std::abs(p.amp[2000]), 3.0);
    // Intensity halves 200 ns either side of the peak.
    EXPECT_NEAR(std::norm(p.amp[2200]), 4.5, 1e-9);
    // Energy of a Gaussian intensity: peak * fwhm * sqrt(pi / (4 ln 2)).
    const double expected = 9.0 * 400e-9 * std::sqrt(std::numbers::pi / (4.0 * std::numbers::ln2));
    EXPECT_NEAR(p.energy() / expected, 1.0, 1e-9);
    EXPECT_THROW(gaussian_pulse(2e-6, 400e-9, 1.0, TimeGrid(0.0, 4e-6, 100)), ResolutionError);
    EXPECT_THROW(gaussian_pulse(2e-6, 0.0, 1.0, g), DomainError);
}

TEST(Pulse, ResampleIsLinearInterpolation) {
    const TimeGrid g(0.0, 1.0, 3);
    const PulseEnvelope p{g, {cplx(0.0), cplx(2.0, 1.0), cplx(4.0)}};
    EXPECT_EQ(p.at(0.25), cplx(1.0, 0.5));
    EXPECT_EQ(p.at(2.0), cplx(0.0));
    const auto r = p.resampled(TimeGrid(0.0, 1.0, 5));
    EXPECT_EQ(r.amp[3], cplx(3.0, 0.5));
}
