#include <gtest/gtest.h>

#include <string>

#include "ratos/config.hpp"

using namespace ratos;
using protocols::Engine;
using protocols::Kind;

namespace {

const char* minimal = R"(
[medium]
od_1 = 100

[control.pump]
power = 4

[experiment]
kind = eit_slowlight
)";

ConfigError config_error(const std::string& text) {
    try {
        config::parse_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    ADD_FAILURE() << "expected a config error";
    return ConfigError("");
}

}  // namespace

TEST(Config, MinimalSlowLightFillsDefaults) {
    const auto s = config::parse_config(minimal);
    EXPECT_EQ(s.kind, Kind::eit_slowlight);
    EXPECT_EQ(s.engine, Engine::polariton);
    EXPECT_DOUBLE_EQ(s.medium.od_1, 100.0);
    EXPECT_DOUBLE_EQ(s.medium.od_2, 100.0);
    EXPECT_DOUBLE_EQ(s.medium.g_ratio, 1.0);
    EXPECT_DOUBLE_EQ(s.medium.length, 0.05);
    EXPECT_DOUBLE_EQ(s.medium.gamma_e1, units::from_mhz(3.0));
    EXPECT_DOUBLE_EQ(s.medium.gamma_gs, units::from_khz(1.0));
    EXPECT_DOUBLE_EQ(s.pump_power, 4.0);
    EXPECT_DOUBLE_EQ(s.signal.fwhm, 400e-9);
    EXPECT_DOUBLE_EQ(s.rise, 200e-9);
    EXPECT_DOUBLE_EQ(s.grid.t_start(), 0.0);
    EXPECT_DOUBLE_EQ(s.grid.t_end(), 12e-6);
    EXPECT_LE(s.grid.dt(), 5e-9 * (1 + 1e-12));
    EXPECT_EQ(s.n_z, 0u);
    EXPECT_FALSE(s.loss.enabled);
}

TEST(Config, RatosOverlapBranch) {
    const auto s = config::parse_config(R"(
[medium]
od_1 = 100
[control.pump]
power = 4
[control.retrieve]
power = 4
[experiment]
kind = ratos
pump_off = 2.5
delta_t = -0.5
)");
    EXPECT_EQ(s.kind, Kind::ratos);
    EXPECT_DOUBLE_EQ(s.delta_t, -0.5e-6);
    EXPECT_LT(s.delta_t, 0.0);
    EXPECT_DOUBLE_EQ(s.pump_off, 2.5e-6);
}

TEST(Config, HumanUnitsConvertedOnce) {
    const auto s = config::parse_config(R"(
[medium]
length = 2.5 cm
od_1 = 50
gamma_e1 = 6 MHz
gamma_e2 = 6
gamma_gs = 0.5 kHz
delta_2ph = 0.01
[signal]
center = 2 us
fwhm = 0.5
peak = 20 kHz
[control.pump]
k = 1.5 MHz/sqrt(mW)
power = 3 mW
[grid]
t_start = -1
t_end = 9
n_t = 2001
n_z = 150
order = 2
[experiment]
kind = eit_slowlight
engine = mb
rise = 0.1
)");
    EXPECT_DOUBLE_EQ(s.medium.length, 0.025);
    EXPECT_DOUBLE_EQ(s.medium.gamma_e1, units::from_mhz(6.0));
    EXPECT_DOUBLE_EQ(s.medium.gamma_gs, units::from_khz(0.5));
    EXPECT_DOUBLE_EQ(s.medium.delta_2ph, units::from_mhz(0.01));
    EXPECT_DOUBLE_EQ(s.signal.center, 2e-6);
    EXPECT_DOUBLE_EQ(s.signal.peak, units::from_khz(20.0));
    EXPECT_DOUBLE_EQ(s.power_map.k_pump, units::from_mhz(1.5));
    EXPECT_EQ(s.grid.size(), 2001u);
    EXPECT_DOUBLE_EQ(s.grid.t_start(), -1e-6);
    EXPECT_EQ(s.n_z, 150u);
    EXPECT_EQ(s.order, 2);
    EXPECT_EQ(s.engine, Engine::mb);
    EXPECT_DOUBLE_EQ(s.rise, 0.1e-6);
}

TEST(Config, MissingOd1NamesTheKey) {
    const auto e = config_error("[medium]\nlength = 5\n[control.pump]\npower = 4\n[experiment]\nkind = eit_slowlight\n");
    EXPECT_NE(std::string(e.what()).find("missing key"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("[medium].od_1"), std::string::npos);
}

TEST(Config, MissingKindSpecificKeys) {
    const auto e = config_error("[medium]\nod_1 = 100\n[control.pump]\npower = 4\n[control.retrieve]\npower = 4\n"
                                "[experiment]\nkind = ratos\npump_off = 2\n");
    EXPECT_NE(std::string(e.what()).find("[experiment].delta_t"), std::string::npos);
    const auto f = config_error("[medium]\nod_1 = 100\n[control.pump]\npower = 4\n[experiment]\nkind = beamsplitter\n"
                                "retrieve_on = 2\n");
    EXPECT_NE(std::string(f.what()).find("[control.retrieve].power"), std::string::npos);
}

TEST(Config, UnknownKeyAndSectionRejectedWithLine) {
    const auto e = config_error("[medium]\nod_1 = 100\nod3 = 4\n");
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("unknown key 'od3'"), std::string::npos);
    const auto s = config_error("[medium]\nod_1 = 100\n[lasers]\n");
    EXPECT_EQ(s.line(), 3);
    EXPECT_NE(std::string(s.what()).find("unknown section"), std::string::npos);
    const auto before = config_error("od_1 = 100\n");
    EXPECT_EQ(before.line(), 1);
}

TEST(Config, UnitViolationNamed) {
    const auto e = config_error("[medium]\nod_1 = 100\nlength = 5 mm\n[control.pump]\npower = 4\n[experiment]\nkind = eit_slowlight\n");
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("unit violation"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("expected cm"), std::string::npos);
    const auto d = config_error("[medium]\nod_1 = 100 cm\n[control.pump]\npower = 4\n[experiment]\nkind = eit_slowlight\n");
    EXPECT_NE(std::string(d.what()).find("dimensionless"), std::string::npos);
}

TEST(Config, BadValuesLocated) {
    const auto e = config_error("[medium]\nod_1 = lots\n[control.pump]\npower = 4\n[experiment]\nkind = eit_slowlight\n");
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 8);
    const auto n = config_error("[medium]\nod_1 = -1\n[control.pump]\npower = 4\n[experiment]\nkind = eit_slowlight\n");
    EXPECT_NE(std::string(n.what()).find("must be >= 0"), std::string::npos);
    const auto dup = config_error("[medium]\nod_1 = 1\nod_1 = 2\n");
    EXPECT_NE(std::string(dup.what()).find("duplicate"), std::string::npos);
    EXPECT_EQ(dup.line(), 3);
    const auto kind = config_error("[medium]\nod_1 = 1\n[control.pump]\npower = 1\n[experiment]\nkind = teleport\n");
    EXPECT_NE(std::string(kind.what()).find("unknown kind"), std::string::npos);
    const auto grid = config_error(std::string(minimal) + "[grid]\nn_t = 100\ndt = 5\n");
    EXPECT_NE(std::string(grid.what()).find("n_t or dt"), std::string::npos);
}

TEST(Config, ScheduleErrorsPointIntoTheFile) {
    const std::string text = "[medium]\nod_1 = 100\n[control.pump]\nschedule = pulse(2, 1, 0.2, 3)\n"
                             "[experiment]\nkind = eit_slowlight\n";
    try {
        config::parse_config(text);
        FAIL();
    } catch (const dsl::ScheduleError& e) {
        EXPECT_EQ(e.kind(), dsl::Diagnostic::pulse_order);
        EXPECT_EQ(e.line(), 4);
        EXPECT_EQ(e.column(), 18);
    }
}

TEST(Config, ScheduleOverridesProtocol) {
    const auto s = config::parse_config(R"(
[medium]
od_1 = 100
[control.pump]
k = 2
schedule = ramp_on(5, 0.2, 10) + ramp_off(9, 0.2, 10)
[experiment]
kind = eit_slowlight
)");
    ASSERT_TRUE(s.pump_schedule.has_value());
    EXPECT_DOUBLE_EQ(s.pump_schedule->k, units::from_mhz(2.0));
    EXPECT_NEAR(s.pump_schedule->power(7e-6), 10.0, 1e-9);
}

TEST(Config, GRatioAndOpticalDepthsConsistent) {
    const auto derived_od = config::parse_config("[medium]\nod_1 = 100\ng_ratio = 2\n[control.pump]\npower = 1\n"
                                                 "[experiment]\nkind = eit_slowlight\n");
    EXPECT_NEAR(derived_od.medium.od_2, 25.0, 1e-12);
    const auto derived_g = config::parse_config("[medium]\nod_1 = 100\nod_2 = 400\n[control.pump]\npower = 1\n"
                                                "[experiment]\nkind = eit_slowlight\n");
    EXPECT_NEAR(derived_g.medium.g_ratio, 0.5, 1e-12);
    const auto e = config_error("[medium]\nod_1 = 100\nod_2 = 100\ng_ratio = 2\n[control.pump]\npower = 1\n"
                                "[experiment]\nkind = eit_slowlight\n");
    EXPECT_NE(std::string(e.what()).find("contradicts"), std::string::npos);
}

TEST(Config, OverridesActLikeFileEntries) {
    const auto s = config::parse_config(minimal, {{"medium.od_1", "200"}, {"experiment.engine", "mb"}});
    EXPECT_DOUBLE_EQ(s.medium.od_1, 200.0);
    EXPECT_EQ(s.engine, Engine::mb);
    EXPECT_THROW(config::parse_config(minimal, {{"medium.od_9", "1"}}), ConfigError);
    EXPECT_THROW(config::parse_config(minimal, {{"od_1", "1"}}), ConfigError);
    try {
        config::parse_config(minimal, {{"control.pump.power", "-2"}});
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("override control.pump.power"), std::string::npos);
    }
}

TEST(Config, RetrievePowerList) {
    const auto s = config::parse_config(R"(
[medium]
od_1 = 100
[control.pump]
power = 4
[experiment]
kind = beamsplitter
retrieve_on = 2
retrieve_powers = 1, 2, 4 mW, 8
)");
    EXPECT_EQ(s.retrieve_powers, (std::vector<double>{1, 2, 4, 8}));
}
