#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <string>

#include "ratos/schedule.hpp"
#include "support/random_schedule.hpp"

using namespace ratos;
using dsl::Diagnostic;
using dsl::ScheduleError;

namespace {

ScheduleError parse_error(const std::string& text) {
    try {
        dsl::parse_schedule(text);
    } catch (const ScheduleError& e) {
        return e;
    }
    ADD_FAILURE() << "expected a parse error for: " << text;
    return ScheduleError(Diagnostic::unexpected_token, "", "", 0, 0);
}

}  // namespace

TEST(Schedule, ConstantPump) {
    const auto e = dsl::parse_schedule("const(4)");
    ASSERT_EQ(e.terms.size(), 1u);
    EXPECT_EQ(e.terms[0].shape, Shape::constant);
    EXPECT_EQ(e.terms[0].args, std::vector<double>{4.0});
    const auto ch = dsl::to_channel(e, 2.0);
    EXPECT_DOUBLE_EQ(ch.power(3e-6), 4.0);
    EXPECT_DOUBLE_EQ(ch.omega(3e-6), 4.0);
}

TEST(Schedule, GateFromTwoRamps) {
    const auto e = dsl::parse_schedule("ramp_on(5, 0.2, 10) + ramp_off(9, 0.2, 10)");
    ASSERT_EQ(e.terms.size(), 2u);
    const auto ch = dsl::to_channel(e, 1.0);
    EXPECT_NEAR(ch.power(0.0), 0.0, 1e-12);
    EXPECT_NEAR(ch.power(5e-6), 5.0, 1e-12);
    EXPECT_NEAR(ch.power(7e-6), 10.0, 1e-9);
    EXPECT_NEAR(ch.power(9e-6), 5.0, 1e-9);
    EXPECT_NEAR(ch.power(12e-6), 0.0, 1e-9);
    // tanh edge: 12% and 88% points sit rise/2 either side of t0.
    const double lo = ch.power(4.9e-6) / 10.0, hi = ch.power(5.1e-6) / 10.0;
    EXPECT_NEAR(lo, 0.5 * (1.0 + std::tanh(-2.0)), 1e-12);
    EXPECT_NEAR(hi, 0.5 * (1.0 + std::tanh(2.0)), 1e-12);
}

TEST(Schedule, PulseOrderReportedAtTOnColumn) {
    const auto e = parse_error("pulse(2, 1, 0.2, 3)");
    EXPECT_EQ(e.kind(), Diagnostic::pulse_order);
    EXPECT_EQ(e.column(), 7);
    EXPECT_EQ(e.line(), 1);
    EXPECT_NE(std::string(e.what()).find("t_off <= t_on"), std::string::npos);
}

TEST(Schedule, DistinctDiagnostics) {
    EXPECT_EQ(parse_error("pulsed(1, 2, 0.2, 3)").kind(), Diagnostic::unknown_primitive);
    EXPECT_EQ(parse_error("const(1, 2)").kind(), Diagnostic::arity_mismatch);
    EXPECT_EQ(parse_error("ramp_on(1, 0.2)").kind(), Diagnostic::arity_mismatch);
    EXPECT_EQ(parse_error("const(-1)").kind(), Diagnostic::negative_power);
    EXPECT_EQ(parse_error("gauss(1, 0, 3)").kind(), Diagnostic::nonpositive_width);
    EXPECT_EQ(parse_error("ramp_on(1, -0.2, 3)").kind(), Diagnostic::nonpositive_width);
    EXPECT_EQ(parse_error("const(1.2.3)").kind(), Diagnostic::bad_number);
    EXPECT_EQ(parse_error("const(1e999)").kind(), Diagnostic::bad_number);
    EXPECT_EQ(parse_error("const(2us)").kind(), Diagnostic::bad_number);
    EXPECT_EQ(parse_error("const(4) $").kind(), Diagnostic::unexpected_character);
    EXPECT_EQ(parse_error("const(4) const(2)").kind(), Diagnostic::unexpected_token);
    EXPECT_EQ(parse_error("const 4").kind(), Diagnostic::unexpected_token);
    EXPECT_EQ(parse_error("").kind(), Diagnostic::unexpected_token);
    EXPECT_EQ(parse_error("const(4) +").kind(), Diagnostic::unexpected_token);
    EXPECT_EQ(parse_error("const(1) + ramp_off(2, 0.2, 3)").kind(), Diagnostic::negative_schedule);

    std::set<std::string> names;
    for (auto d : {Diagnostic::unexpected_character, Diagnostic::unexpected_token, Diagnostic::bad_number,
                   Diagnostic::unknown_primitive, Diagnostic::arity_mismatch, Diagnostic::negative_power,
                   Diagnostic::nonpositive_width, Diagnostic::pulse_order, Diagnostic::negative_schedule})
        names.insert(dsl::diagnostic_name(d));
    EXPECT_EQ(names.size(), 9u);
}

TEST(Schedule, ErrorsCarryLocationAndToken) {
    const auto e = parse_error("const(4) +\n  ramp_on(1, 0.2, -3)");
    EXPECT_EQ(e.kind(), Diagnostic::negative_power);
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 19);
    EXPECT_EQ(e.token(), "-3");

    const auto u = parse_error("const(4) + foo(1)");
    EXPECT_EQ(u.column(), 12);
    EXPECT_EQ(u.token(), "foo");

    // Offsets of an enclosing document shift the reported position.
    try {
        dsl::parse_schedule("const(-1)", 7, 12);
        FAIL();
    } catch (const ScheduleError& err) {
        EXPECT_EQ(err.line(), 7);
        EXPECT_EQ(err.column(), 18);
    }
}

TEST(Schedule, RampOffBalancedByConstantIsFine) {
    const auto e = dsl::parse_schedule("const(3) + ramp_off(2, 0.2, 3)");
    const auto ch = dsl::to_channel(e, 1.0);
    EXPECT_NEAR(ch.power(0.0), 3.0, 1e-12);
    EXPECT_NEAR(ch.power(10e-6), 0.0, 1e-12);
    // Off before on at the same instant is a gate of zero net level.
    EXPECT_NO_THROW(dsl::parse_schedule("ramp_on(1, 0.2, 2) + ramp_off(1, 0.2, 2)"));
}

TEST(Schedule, SignedNumbersAndExponents) {
    const auto e = dsl::parse_schedule("ramp_on(-1.5e0, 2E-1, +4)+gauss(.5, 0.1, 1e1)");
    ASSERT_EQ(e.terms.size(), 2u);
    EXPECT_EQ(e.terms[0].args, (std::vector<double>{-1.5, 0.2, 4.0}));
    EXPECT_EQ(e.terms[1].args, (std::vector<double>{0.5, 0.1, 10.0}));
}

TEST(Schedule, ChannelRoundTrip) {
    const auto e = dsl::parse_schedule("const(2) + pulse(1, 3, 0.25, 4) + gauss(2, 0.5, 1)");
    const auto ch = dsl::to_channel(e, 3.0);
    EXPECT_DOUBLE_EQ(ch.terms[1].t0, 1e-6);
    EXPECT_DOUBLE_EQ(ch.terms[1].t1, 3e-6);
    EXPECT_DOUBLE_EQ(ch.terms[1].width, 0.25e-6);
    const auto back = dsl::from_channel(ch);
    for (std::size_t i = 0; i < e.terms.size(); ++i)
        for (std::size_t a = 0; a < e.terms[i].args.size(); ++a)
            EXPECT_NEAR(back.terms[i].args[a], e.terms[i].args[a], 1e-12);
}

TEST(ScheduleProperty, PrettyPrintRoundTrip1000) {
    std::mt19937_64 rng(20240611);
    for (int i = 0; i < 1000; ++i) {
        const auto ast = test_support::random_expr(rng);
        const std::string text = dsl::to_string(ast);
        dsl::ScheduleExpr parsed;
        ASSERT_NO_THROW(parsed = dsl::parse_schedule(text)) << text;
        ASSERT_EQ(parsed, ast) << text;
        ASSERT_EQ(dsl::to_string(parsed), text);
    }
}

TEST(ScheduleProperty, FuzzNeverCrashes) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> byte(0, 255), len(0, 48), op(0, 2);
    const std::string alphabet = "constramp_fulsegiad(),+-.e0123456789 \n\t";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    int parsed = 0, rejected = 0;
    auto check = [&](const std::string& s) {
        try {
            dsl::parse_schedule(s);
            ++parsed;
        } catch (const ScheduleError& e) {
            ++rejected;
            ASSERT_GE(e.line(), 1) << s;
            ASSERT_GE(e.column(), 1) << s;
            ASSERT_FALSE(std::string(e.what()).empty());
        }
    };
    for (int i = 0; i < 4000; ++i) {
        std::string s(static_cast<std::size_t>(len(rng)), '\0');
        for (auto& c : s) c = static_cast<char>(byte(rng));
        check(s);
    }
    for (int i = 0; i < 4000; ++i) {
        std::string s(static_cast<std::size_t>(len(rng)), ' ');
        for (auto& c : s) c = alphabet[pick(rng)];
        check(s);
    }
    // Mutations of valid schedules.
    for (int i = 0; i < 4000; ++i) {
        std::string s = dsl::to_string(test_support::random_expr(rng));
        for (int m = 0; m < 3 && !s.empty(); ++m) {
            std::uniform_int_distribution<std::size_t> where(0, s.size() - 1);
            const std::size_t at = where(rng);
            switch (op(rng)) {
                case 0: s.erase(at, 1); break;
                case 1: s.insert(at, 1, static_cast<char>(byte(rng))); break;
                default: s[at] = alphabet[pick(rng)]; break;
            }
        }
        check(s);
    }
    EXPECT_GT(parsed, 0);
    EXPECT_GT(rejected, 0);
}
