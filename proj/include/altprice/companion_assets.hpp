#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "market.hpp"
#include "schedule.hpp"

namespace altprice
{

/// Perpetual derivative g(t, S) = f(t) S^gamma + h(t) with f(0) = 1.
struct PerpetualSpec
{
    double gamma = 1.0;
    Schedule r_f;
    Schedule sigma;
    Schedule mu;
    double h0 = 0.0;
};

/// delta = 2 r_f / sigma^2.
inline double delta_exponent(double r_f, double sigma) { return 2.0 * r_f / (sigma * sigma); }

inline double xi(double gamma, double delta) { return (1.0 - gamma) * (delta + gamma); }

/// Price of the perpetual derivative at time t:
///   S_t^gamma exp(int_0^t (1 - gamma)(r_f + sigma^2 gamma / 2) du) + h0 exp(int_0^t r_f du).
inline double perpetual_price(const PerpetualSpec &spec, double t, double S_t)
{
    if (!(S_t > 0.0))
        throw std::invalid_argument("perpetual price needs S_t > 0");
    const double g = spec.gamma;
    auto rate = [&](double u) {
        const double s = spec.sigma.value_at(u);
        return (1.0 - g) * (spec.r_f.value_at(u) + 0.5 * s * s * g);
    };
    double exponent = 0.0;
    double lo = std::min(0.0, t), hi = std::max(0.0, t);
    for (double cut : merged_breakpoints(lo, hi, {&spec.r_f, &spec.sigma})) {
        exponent += rate(lo) * (cut - lo);
        lo = cut;
    }
    exponent += rate(lo) * (hi - lo);
    if (t < 0.0)
        exponent = -exponent;
    double price = std::pow(S_t, g) * std::exp(exponent);
    if (spec.h0 != 0.0)
        price += spec.h0 * std::exp(spec.r_f.integrate(0.0, t));
    return price;
}

struct XiPoint
{
    double gamma;
    double xi;
    std::optional<char> label;
};

struct NamedXiPoints
{
    double gamma_plus, gamma_minus; // fixed points xi(gamma) = gamma (A: minus, F: plus)
    double root_B, root_G;          // xi = 0 at -delta and 1
    double C, E;                    // xi = delta at 0 and 1 - delta
    double D;                       // argmax (1 - delta)/2
    double xi_max;                  // (1 + delta)^2 / 4
};

inline NamedXiPoints named_xi_points(double delta)
{
    if (!(delta > 0.0))
        throw std::invalid_argument("delta must be positive");
    const double root = std::sqrt(delta * delta + 4.0 * delta);
    NamedXiPoints n{};
    n.gamma_plus = 0.5 * (-delta + root);
    n.gamma_minus = 0.5 * (-delta - root);
    n.root_B = -delta;
    n.root_G = 1.0;
    n.C = 0.0;
    n.E = 1.0 - delta;
    n.D = 0.5 * (1.0 - delta);
    n.xi_max = 0.25 * (1.0 + delta) * (1.0 + delta);
    return n;
}

/// xi on the grid followed by the seven named solutions, sorted by gamma.
inline std::vector<XiPoint> xi_curve(double delta, std::span<const double> gamma_grid)
{
    const auto n = named_xi_points(delta);
    std::vector<XiPoint> out;
    out.reserve(gamma_grid.size() + 7);
    for (double g : gamma_grid)
        out.push_back({g, xi(g, delta), std::nullopt});
    const std::pair<char, double> named[] = {{'A', n.gamma_minus}, {'B', n.root_B}, {'C', n.C},
                                             {'D', n.D},           {'E', n.E},      {'F', n.gamma_plus},
                                             {'G', n.root_G}};
    for (auto [label, g] : named)
        out.push_back({g, xi(g, delta), label});
    std::stable_sort(out.begin(), out.end(),
                     [](const XiPoint &a, const XiPoint &b) { return a.gamma < b.gamma; });
    return out;
}

struct Dynamics
{
    double drift;
    double vol;
};

/// Drift and volatility of the perpetual derivative at time t.
inline Dynamics perpetual_dynamics(const PerpetualSpec &spec, double t = 0.0)
{
    if (spec.h0 != 0.0)
        throw RequiresZeroH0("perpetual dynamics are lognormal only for h0 = 0");
    const double g = spec.gamma;
    return {(1.0 - g) * spec.r_f.value_at(t) + g * spec.mu.value_at(t),
            g * spec.sigma.value_at(t)};
}

/// The (S, S^gamma) market as a two-asset parameter set.
inline DualAssetParams perpetual_pair(const PerpetualSpec &spec)
{
    const auto d = perpetual_dynamics(spec);
    if (!(spec.r_f.is_constant() && spec.sigma.is_constant() && spec.mu.is_constant()))
        throw std::invalid_argument("perpetual pair needs constant coefficients");
    return DualAssetParams{spec.mu, spec.sigma, d.drift, d.vol};
}

/// Dynamics of S^-delta: drift (1 + delta) r_f - delta mu, signed vol -delta sigma.
inline Dynamics s_minus_delta_dynamics(const SingleAssetParams &params, double t = 0.0)
{
    params.validate();
    const double r = params.r_f.value_at(t);
    const double s = params.sigma.value_at(t);
    const double d = delta_exponent(r, s);
    return {(1.0 + d) * r - d * params.mu.value_at(t), -d * s};
}

/// r_f g - g_t - r_f S g_S - sigma^2 S^2 g_SS / 2 at the constant-coefficient
/// solution, from analytic partials.
inline double perpetual_pde_residual(const PerpetualSpec &spec, double t, double S)
{
    if (!(spec.r_f.is_constant() && spec.sigma.is_constant()))
        throw std::invalid_argument("residual check needs constant coefficients");
    if (!(S > 0.0))
        throw std::invalid_argument("residual check needs S > 0");
    const double r = spec.r_f.value_at(0.0);
    const double s = spec.sigma.value_at(0.0);
    const double g = spec.gamma;
    const double x = xi(g, delta_exponent(r, s));
    const double price = std::pow(S, g) * std::exp(0.5 * x * s * s * t);
    const double g_t = 0.5 * x * s * s * price;
    const double S_gS = g * price;
    const double S2_gSS = g * (g - 1.0) * price;
    return r * price - g_t - r * S_gS - 0.5 * s * s * S2_gSS;
}

/// Upper limit on pi + 1/pi accepted as "bounded" over a schedule.
inline constexpr double kDeflatorBound = 1e8;

/// pi_t = r_f / mu at t, after checking sup(pi + 1/pi) over every schedule
/// segment.
inline double deflator_pi(const SingleAssetParams &params, double t)
{
    auto pi_at = [&](double u) {
        const double mu = params.mu.value_at(u);
        if (mu == 0.0)
            throw ZeroDrift("zero drift at t = " + std::to_string(u) + ": deflator undefined");
        return params.r_f.value_at(u) / mu;
    };
    std::vector<double> starts;
    for (const Schedule *s : {&params.mu, &params.r_f})
        for (const auto &seg : s->segments())
            starts.push_back(seg.t_start);
    for (double u : starts) {
        const double pi = pi_at(u);
        const double size = std::abs(pi) + (pi != 0.0 ? 1.0 / std::abs(pi) : INFINITY);
        if (!(pi > 0.0) || !(size < kDeflatorBound))
            throw UnboundedDeflator("deflator r_f/mu = " + std::to_string(pi) + " at t = " +
                                    std::to_string(u) + " violates sup(pi + 1/pi) < inf");
    }
    return pi_at(t);
}

} // namespace altprice
