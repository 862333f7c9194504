#pragma once

// Schedule expressions: sums of control-power primitives written as text.
//
//   expr   := term { '+' term }
//   term   := ident '(' args ')'
//   args   := number { ',' number }
//   number := [ '-' | '+' ] digits [ '.' digits ] [ ( 'e' | 'E' ) [ '-' | '+' ] digits ]
//
// Times are in microseconds, powers in mW. Whitespace (including newlines) is
// insignificant. Primitives:
//
//   const(P)
//   ramp_on(t0, rise, P)       P * (1 + tanh(4 (t - t0) / rise)) / 2
//   ramp_off(t0, fall, P)      the same edge, subtracted
//   pulse(t_on, t_off, rise, P)
//   gauss(center, fwhm, P)

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "ratos/error.hpp"
#include "ratos/model.hpp"
#include "ratos/units.hpp"

namespace ratos::dsl {

enum class Diagnostic {
    unexpected_character,
    unexpected_token,
    bad_number,
    unknown_primitive,
    arity_mismatch,
    negative_power,
    nonpositive_width,
    pulse_order,
    negative_schedule,
};

inline const char* diagnostic_name(Diagnostic d) {
    switch (d) {
        case Diagnostic::unexpected_character: return "unexpected character";
        case Diagnostic::unexpected_token: return "unexpected token";
        case Diagnostic::bad_number: return "bad number";
        case Diagnostic::unknown_primitive: return "unknown primitive";
        case Diagnostic::arity_mismatch: return "arity mismatch";
        case Diagnostic::negative_power: return "negative power";
        case Diagnostic::nonpositive_width: return "nonpositive width";
        case Diagnostic::pulse_order: return "t_off <= t_on";
        case Diagnostic::negative_schedule: return "negative schedule";
    }
    return "error";
}

class ScheduleError : public ConfigError {
public:
    ScheduleError(Diagnostic kind, const std::string& detail, std::string token, int line, int column)
        : ConfigError(std::string(diagnostic_name(kind)) + ": " + detail +
                          (token.empty() ? std::string() : " (at '" + token + "')"),
                      line, column),
          kind_(kind),
          token_(std::move(token)) {}
    Diagnostic kind() const noexcept { return kind_; }
    const std::string& token() const noexcept { return token_; }

private:
    Diagnostic kind_;
    std::string token_;
};

struct Term {
    Shape shape = Shape::constant;
    std::vector<double> args;  // in source order and units

    bool operator==(const Term&) const = default;
};

struct ScheduleExpr {
    std::vector<Term> terms;

    bool operator==(const ScheduleExpr&) const = default;
};

struct Primitive {
    std::string_view name;
    Shape shape;
    std::size_t arity;
    int width_arg;  // index of the rise/fall/fwhm argument, -1 if none
};

inline constexpr std::array<Primitive, 5> primitives{{
    {"const", Shape::constant, 1, -1},
    {"ramp_on", Shape::ramp_on, 3, 1},
    {"ramp_off", Shape::ramp_off, 3, 1},
    {"pulse", Shape::pulse, 4, 2},
    {"gauss", Shape::gauss, 3, 1},
}};

inline const Primitive& primitive(Shape shape) {
    for (const auto& p : primitives)
        if (p.shape == shape) return p;
    return primitives[0];
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double x) {
    std::array<char, 64> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), r.ptr);
}

inline std::string to_string(const ScheduleExpr& expr) {
    std::string out;
    for (std::size_t i = 0; i < expr.terms.size(); ++i) {
        const Term& t = expr.terms[i];
        if (i > 0) out += " + ";
        out += primitive(t.shape).name;
        out += '(';
        for (std::size_t a = 0; a < t.args.size(); ++a) {
            if (a > 0) out += ", ";
            out += format_number(t.args[a]);
        }
        out += ')';
    }
    return out;
}

namespace detail {

enum class Tok { ident, number, lparen, rparen, comma, plus, end };

struct Token {
    Tok kind = Tok::end;
    std::string_view text;
    double value = 0.0;
    int line = 1;
    int column = 1;
};

inline const char* tok_name(Tok k) {
    switch (k) {
        case Tok::ident: return "identifier";
        case Tok::number: return "number";
        case Tok::lparen: return "'('";
        case Tok::rparen: return "')'";
        case Tok::comma: return "','";
        case Tok::plus: return "'+'";
        case Tok::end: return "end of input";
    }
    return "token";
}

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
inline bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

class Lexer {
public:
    Lexer(std::string_view text, int line, int column) : text_(text), line_(line), column_(column) {}

    Token next() {
        skip_space();
        Token t;
        t.line = line_;
        t.column = column_;
        if (pos_ >= text_.size()) return t;
        const char c = text_[pos_];
        const std::size_t start = pos_;
        auto single = [&](Tok k) {
            advance(1);
            t.kind = k;
            t.text = text_.substr(start, 1);
            return t;
        };
        if (c == '(') return single(Tok::lparen);
        if (c == ')') return single(Tok::rparen);
        if (c == ',') return single(Tok::comma);
        if (is_ident_start(c)) {
            std::size_t n = 1;
            while (start + n < text_.size() && is_ident_char(text_[start + n])) ++n;
            advance(n);
            t.kind = Tok::ident;
            t.text = text_.substr(start, n);
            return t;
        }
        // A sign starts a number only when a digit or '.' follows; a lone '+' is the operator.
        const bool signed_number = (c == '-' || c == '+') && start + 1 < text_.size() &&
                                   (is_digit(text_[start + 1]) || text_[start + 1] == '.');
        if (c == '+' && !signed_number) return single(Tok::plus);
        if (signed_number || is_digit(c) || c == '.') return number(t);
        advance(1);
        throw ScheduleError(Diagnostic::unexpected_character, "character is not part of the schedule syntax",
                            printable(text_.substr(start, 1)), t.line, t.column);
    }

    /// Lookahead for the binary '+' versus a signed number: after a term, '+' is always the operator.
    Token next_operator() {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == '+') {
            Token t;
            t.line = line_;
            t.column = column_;
            t.kind = Tok::plus;
            t.text = text_.substr(pos_, 1);
            advance(1);
            return t;
        }
        return next();
    }

private:
    static std::string printable(std::string_view s) {
        std::string out;
        for (unsigned char ch : s) {
            if (ch >= 0x20 && ch < 0x7f) {
                out += static_cast<char>(ch);
            } else {
                static const char* hex = "0123456789abcdef";
                out += "\\x";
                out += hex[ch >> 4];
                out += hex[ch & 15];
            }
        }
        return out;
    }

    Token number(Token t) {
        const std::size_t start = pos_;
        std::size_t i = pos_;
        if (text_[i] == '-' || text_[i] == '+') ++i;
        std::size_t digits = 0;
        while (i < text_.size() && is_digit(text_[i])) ++i, ++digits;
        if (i < text_.size() && text_[i] == '.') {
            ++i;
            std::size_t frac = 0;
            while (i < text_.size() && is_digit(text_[i])) ++i, ++frac;
            digits += frac;
        }
        bool ok = digits > 0;
        if (ok && i < text_.size() && (text_[i] == 'e' || text_[i] == 'E')) {
            std::size_t j = i + 1;
            if (j < text_.size() && (text_[j] == '-' || text_[j] == '+')) ++j;
            std::size_t exp_digits = 0;
            while (j < text_.size() && is_digit(text_[j])) ++j, ++exp_digits;
            ok = exp_digits > 0;
            i = j;
        }
        // A number running straight into letters ("1.5us", "2x") is malformed.
        while (i < text_.size() && (is_ident_char(text_[i]) || text_[i] == '.')) {
            ok = false;
            ++i;
        }
        const std::string_view lexeme = text_.substr(start, i - start);
        advance(i - start);
        if (!ok) throw ScheduleError(Diagnostic::bad_number, "malformed number", printable(lexeme), t.line, t.column);

        std::string_view body = lexeme;
        if (!body.empty() && body.front() == '+') body.remove_prefix(1);
        double v = 0.0;
        const auto r = std::from_chars(body.data(), body.data() + body.size(), v);
        if (r.ec != std::errc() || r.ptr != body.data() + body.size() || !std::isfinite(v))
            throw ScheduleError(Diagnostic::bad_number, "number out of range", printable(lexeme), t.line, t.column);
        t.kind = Tok::number;
        t.text = lexeme;
        t.value = v;
        return t;
    }

    void skip_space() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == ' ' || c == '\t' || c == '\r')
                advance(1);
            else if (c == '\n') {
                ++pos_;
                ++line_;
                column_ = 1;
            } else
                break;
        }
    }

    void advance(std::size_t n) {
        pos_ += n;
        column_ += static_cast<int>(n);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_;
    int column_;
};

inline void check_levels(const ScheduleExpr& expr, const std::vector<Token>& term_tokens) {
    // Asymptotic power level after every edge, in time order; a dip below zero
    // means some ramp_off removes power that was never switched on.
    struct Event {
        double t;
        double delta;
        std::size_t term;
    };
    double level = 0.0;
    double scale = 0.0;
    std::vector<Event> events;
    for (std::size_t i = 0; i < expr.terms.size(); ++i) {
        const Term& term = expr.terms[i];
        const double p = term.args.back();
        scale = std::max(scale, p);
        switch (term.shape) {
            case Shape::constant: level += p; break;
            case Shape::ramp_on: events.push_back({term.args[0], p, i}); break;
            case Shape::ramp_off: events.push_back({term.args[0], -p, i}); break;
            default: break;
        }
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    for (std::size_t k = 0; k < events.size();) {
        std::size_t j = k;
        std::size_t last_off = events[k].term;
        while (j < events.size() && events[j].t == events[k].t) {
            level += events[j].delta;
            if (events[j].delta < 0.0) last_off = events[j].term;
            ++j;
        }
        if (level < -1e-12 * scale) {
            const Token& at = term_tokens[last_off];
            throw ScheduleError(Diagnostic::negative_schedule,
                                "ramp_off takes the power below zero (level " + format_number(level) + " mW after t = " +
                                    format_number(events[k].t) + " us)",
                                std::string(at.text), at.line, at.column);
        }
        k = j;
    }
}

}  // namespace detail

/// Parses a schedule. `line` and `column` locate the first character of
/// `text` in its enclosing document, so diagnostics point into the config file.
inline ScheduleExpr parse_schedule(std::string_view text, int line = 1, int column = 1) {
    using detail::Tok;
    detail::Lexer lex(text, line, column);
    ScheduleExpr expr;
    std::vector<detail::Token> term_tokens;

    auto unexpected = [](const detail::Token& got, const std::string& wanted) {
        return ScheduleError(Diagnostic::unexpected_token,
                             "expected " + wanted + ", found " + detail::tok_name(got.kind), std::string(got.text),
                             got.line, got.column);
    };

    detail::Token tok = lex.next();
    if (tok.kind == Tok::end) throw unexpected(tok, "a schedule term");
    while (true) {
        if (tok.kind != Tok::ident) throw unexpected(tok, "a primitive name");
        const Primitive* prim = nullptr;
        for (const auto& p : primitives)
            if (p.name == tok.text) prim = &p;
        if (!prim) {
            std::string known;
            for (const auto& p : primitives) known += (known.empty() ? "" : ", ") + std::string(p.name);
            throw ScheduleError(Diagnostic::unknown_primitive, "known primitives are " + known,
                                std::string(tok.text), tok.line, tok.column);
        }
        const detail::Token name = tok;

        tok = lex.next();
        if (tok.kind != Tok::lparen) throw unexpected(tok, "'('");
        std::vector<detail::Token> args;
        while (true) {
            tok = lex.next();
            if (tok.kind != Tok::number) throw unexpected(tok, "a number");
            args.push_back(tok);
            tok = lex.next();
            if (tok.kind == Tok::rparen) break;
            if (tok.kind != Tok::comma) throw unexpected(tok, "',' or ')'");
        }
        if (args.size() != prim->arity)
            throw ScheduleError(Diagnostic::arity_mismatch,
                                std::string(prim->name) + " takes " + std::to_string(prim->arity) + " argument" +
                                    (prim->arity == 1 ? "" : "s") + ", got " + std::to_string(args.size()),
                                std::string(name.text), name.line, name.column);

        Term term{prim->shape, {}};
        for (const auto& a : args) term.args.push_back(a.value);
        const detail::Token& power = args.back();
        if (power.value < 0.0)
            throw ScheduleError(Diagnostic::negative_power, "power must be >= 0 mW", std::string(power.text),
                                power.line, power.column);
        if (prim->width_arg >= 0) {
            const detail::Token& w = args[static_cast<std::size_t>(prim->width_arg)];
            if (!(w.value > 0.0))
                throw ScheduleError(Diagnostic::nonpositive_width, "edge width must be > 0 us", std::string(w.text),
                                    w.line, w.column);
        }
        if (prim->shape == Shape::pulse && !(args[1].value > args[0].value))
            throw ScheduleError(Diagnostic::pulse_order, "pulse needs t_off > t_on", std::string(args[0].text),
                                args[0].line, args[0].column);
        expr.terms.push_back(std::move(term));
        term_tokens.push_back(name);

        tok = lex.next_operator();
        if (tok.kind == Tok::end) break;
        if (tok.kind != Tok::plus) throw unexpected(tok, "'+' or end of schedule");
        tok = lex.next();
    }
    detail::check_levels(expr, term_tokens);
    return expr;
}

/// Converts to a control channel in SI time units; `k` maps sqrt(mW) to rad/s.
inline ControlChannel to_channel(const ScheduleExpr& expr, double k) {
    using units::from_us;
    ControlChannel ch;
    ch.k = k;
    for (const Term& t : expr.terms) {
        PowerTerm p;
        p.shape = t.shape;
        p.power = t.args.back();
        switch (t.shape) {
            case Shape::constant:
                break;
            case Shape::ramp_on:
            case Shape::ramp_off:
            case Shape::gauss:
                p.t0 = from_us(t.args[0]);
                p.width = from_us(t.args[1]);
                break;
            case Shape::pulse:
                p.t0 = from_us(t.args[0]);
                p.t1 = from_us(t.args[1]);
                p.width = from_us(t.args[2]);
                break;
        }
        ch.terms.push_back(p);
    }
    return ch;
}

/// Inverse of to_channel for schedules built in code (times back to us).
inline ScheduleExpr from_channel(const ControlChannel& ch) {
    using units::to_us;
    ScheduleExpr expr;
    for (const PowerTerm& p : ch.terms) {
        Term t{p.shape, {}};
        switch (p.shape) {
            case Shape::constant: t.args = {p.power}; break;
            case Shape::ramp_on:
            case Shape::ramp_off:
            case Shape::gauss: t.args = {to_us(p.t0), to_us(p.width), p.power}; break;
            case Shape::pulse: t.args = {to_us(p.t0), to_us(p.t1), to_us(p.width), p.power}; break;
        }
        expr.terms.push_back(std::move(t));
    }
    return expr;
}

}  // namespace ratos::dsl
