#pragma once

// Waveform metrics and least-squares fits.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

#include "ratos/error.hpp"
#include "ratos/model.hpp"

namespace ratos::analysis {

struct PulseMetrics {
    double peak_power = 0.0;    // Rabi^2 units
    double fwhm = 0.0;          // s
    double energy = 0.0;        // Rabi^2 * s
    double arrival_time = 0.0;  // s, time of peak
};

/// Metrics of |samples|^2 on `grid`.
///
/// The FWHM is taken between the outermost half-maximum crossings, each located
/// by linear interpolation; a pulse with shoulders or two humps therefore
/// reports its full envelope width.
inline PulseMetrics metrics(std::span<const cplx> samples, const TimeGrid& grid) {
    if (samples.size() != grid.size()) throw DomainError("metrics: sample count does not match grid");
    std::vector<double> p(samples.size());
    std::transform(samples.begin(), samples.end(), p.begin(), [](cplx c) { return std::norm(c); });

    const auto peak_it = std::max_element(p.begin(), p.end());
    if (!(*peak_it > 0.0)) throw EmptyPulseError("metrics: channel carries no light");
    const double peak = *peak_it;
    const double half = 0.5 * peak;
    const double dt = grid.dt();

    std::size_t left = 0;
    while (p[left] < half) ++left;
    std::size_t right = p.size() - 1;
    while (p[right] < half) --right;

    double t_left = grid.time(left);
    if (left > 0) t_left -= dt * (p[left] - half) / (p[left] - p[left - 1]);
    double t_right = grid.time(right);
    if (right + 1 < p.size()) t_right += dt * (p[right] - half) / (p[right] - p[right + 1]);

    double energy = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) energy += 0.5 * (p[i] + p[i + 1]);

    PulseMetrics m;
    m.peak_power = peak;
    m.fwhm = std::max(t_right - t_left, 0.0);
    m.energy = energy * dt;
    m.arrival_time = grid.time(static_cast<std::size_t>(peak_it - p.begin()));
    return m;
}

inline double energy(std::span<const cplx> samples, const TimeGrid& grid) {
    double e = 0.0;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) e += 0.5 * (std::norm(samples[i]) + std::norm(samples[i + 1]));
    return e * grid.dt();
}

struct FitResult {
    std::vector<double> params;
    std::vector<double> std_errors;
    double r2 = 0.0;
    std::vector<double> residuals;
    int iterations = 0;
};

namespace detail {

inline double r_squared(std::span<const double> ys, std::span<const double> residuals) {
    const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        ss_tot += (ys[i] - mean) * (ys[i] - mean);
        ss_res += residuals[i] * residuals[i];
    }
    if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
    return 1.0 - ss_res / ss_tot;
}

}  // namespace detail

/// Ordinary least squares. params = {slope, intercept}, or {slope} through the origin.
inline FitResult linear_fit(std::span<const double> xs, std::span<const double> ys, bool through_origin) {
    if (xs.size() != ys.size()) throw FitError("linear_fit: xs and ys differ in length");
    const std::size_t n = xs.size();
    const std::size_t n_params = through_origin ? 1 : 2;
    if (n < n_params) throw FitError("linear_fit: need at least " + std::to_string(n_params) + " points");

    FitResult fit;
    fit.residuals.resize(n);
    if (through_origin) {
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sxx += xs[i] * xs[i];
            sxy += xs[i] * ys[i];
        }
        if (!(sxx > 0.0)) throw FitError("linear_fit: singular fit (all x are zero)");
        const double slope = sxy / sxx;
        double ssr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            fit.residuals[i] = ys[i] - slope * xs[i];
            ssr += fit.residuals[i] * fit.residuals[i];
        }
        const double s2 = n > 1 ? ssr / static_cast<double>(n - 1) : 0.0;
        fit.params = {slope};
        fit.std_errors = {std::sqrt(s2 / sxx)};
    } else {
        const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
        const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sxx += (xs[i] - mx) * (xs[i] - mx);
            sxy += (xs[i] - mx) * (ys[i] - my);
        }
        double scale = 0.0;
        for (double x : xs) scale = std::max(scale, x * x);
        if (!(sxx > 1e-24 * scale * static_cast<double>(n)))
            throw FitError("linear_fit: singular fit (x values are degenerate)");
        const double slope = sxy / sxx;
        const double intercept = my - slope * mx;
        double ssr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            fit.residuals[i] = ys[i] - (slope * xs[i] + intercept);
            ssr += fit.residuals[i] * fit.residuals[i];
        }
        const double s2 = n > 2 ? ssr / static_cast<double>(n - 2) : 0.0;
        fit.params = {slope, intercept};
        fit.std_errors = {std::sqrt(s2 / sxx), std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx))};
    }
    fit.r2 = detail::r_squared(ys, fit.residuals);
    return fit;
}

/// a * p_pump / (c * p_pump + p_ret)
inline double ratos_energy_model(double p_pump, double p_ret, double a, double c) {
    return a * p_pump / (c * p_pump + p_ret);
}

/// Fits energies(p_ret) = a * p_pump / (c * p_pump + p_ret); params = {a, c}.
///
/// Gauss-Newton with Levenberg damping from (a, c) = (1, 1). Converges when the
/// relative step drops below 1e-10; gives up after 200 iterations.
inline FitResult ratos_energy_fit(double p_pump, std::span<const double> p_rets, std::span<const double> energies) {
    if (p_rets.size() != energies.size()) throw FitError("ratos_energy_fit: p_rets and energies differ in length");
    if (p_rets.size() < 3) throw FitError("ratos_energy_fit: need at least 3 points");
    if (!(p_pump > 0.0)) throw FitError("ratos_energy_fit: p_pump must be > 0");
    const std::size_t n = p_rets.size();

    auto residuals_at = [&](double a, double c, std::vector<double>& r) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = energies[i] - ratos_energy_model(p_pump, p_rets[i], a, c);
            ssr += r[i] * r[i];
        }
        return ssr;
    };

    double a = 1.0, c = 1.0, lambda = 1e-3;
    std::vector<double> r(n), r_trial(n);
    double ssr = residuals_at(a, c, r);
    std::ostringstream trace;
    bool converged = false;
    int iter = 0;
    for (; iter < 200 && !converged; ++iter) {
        // J^T J and J^T r for the two parameters.
        double jaa = 0, jac = 0, jcc = 0, ga = 0, gc = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double denom = c * p_pump + p_rets[i];
            const double da = p_pump / denom;
            const double dc = -a * p_pump * p_pump / (denom * denom);
            jaa += da * da;
            jac += da * dc;
            jcc += dc * dc;
            ga += da * r[i];
            gc += dc * r[i];
        }
        trace << "  iter " << iter << ": a=" << a << " c=" << c << " ssr=" << ssr << " lambda=" << lambda << '\n';
        if (ssr == 0.0) {
            converged = true;
            break;
        }
        bool accepted = false;
        while (!accepted) {
            const double m00 = jaa * (1.0 + lambda), m11 = jcc * (1.0 + lambda), m01 = jac;
            const double det = m00 * m11 - m01 * m01;
            if (!(std::abs(det) > 0.0) || lambda > 1e16) break;
            const double step_a = (m11 * ga - m01 * gc) / det;
            const double step_c = (m00 * gc - m01 * ga) / det;
            const double a_new = a + step_a, c_new = c + step_c;
            if (c_new > 0.0) {
                const double ssr_new = residuals_at(a_new, c_new, r_trial);
                if (ssr_new <= ssr) {
                    const double rel = std::hypot(step_a, step_c) / std::max(std::hypot(a, c), 1e-300);
                    a = a_new;
                    c = c_new;
                    ssr = ssr_new;
                    r.swap(r_trial);
                    lambda = std::max(lambda / 10.0, 1e-12);
                    accepted = true;
                    if (rel < 1e-10) converged = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // No downhill step left at any damping: the current point is a minimum
            // to working precision.
            converged = true;
        }
    }
    if (!converged) throw FitError("ratos_energy_fit: no convergence after 200 iterations\n" + trace.str());

    FitResult fit;
    fit.params = {a, c};
    fit.residuals = r;
    fit.iterations = iter;
    fit.r2 = detail::r_squared(energies, r);
    double jaa = 0, jac = 0, jcc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double denom = c * p_pump + p_rets[i];
        const double da = p_pump / denom;
        const double dc = -a * p_pump * p_pump / (denom * denom);
        jaa += da * da;
        jac += da * dc;
        jcc += dc * dc;
    }
    const double s2 = n > 2 ? ssr / static_cast<double>(n - 2) : 0.0;
    const double det = jaa * jcc - jac * jac;
    if (det > 0.0)
        fit.std_errors = {std::sqrt(s2 * jcc / det), std::sqrt(s2 * jaa / det)};
    else
        fit.std_errors = {INFINITY, INFINITY};
    return fit;
}

}  // namespace ratos::analysis
