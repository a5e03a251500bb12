#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "errors.hpp"
#include "market.hpp"
#include "normal.hpp"
#include "quadrature.hpp"
#include "root_finding.hpp"

namespace altprice
{

/// Valuation point for a call on eta*S + (1 - eta)*Z under constant
/// coefficients.
struct LrClosedFormInputs
{
    double S = 100.0;
    double Z = 100.0;
    DualAssetParams params;
    OptionSpec spec;
    double t = 0.0;
};

/// Per-instance constants: m = r_bar*tau, w = sigma*sqrt(tau),
/// w_tilde = sigma_tilde*sqrt(tau), dw = w - w_tilde (signed).
struct LrTerms
{
    double tau;
    double rbar;
    double sigma;
    double sigma_tilde;
    double m;
    double w;
    double w_tilde;
    double dw;
    double eta;
};

struct RootResult
{
    double y_star = 0.0;
    double d = 0.0; // -y_star
    int iterations = 0;
    double residual = 0.0; // (lhs - K) / K at y_star
};

struct RootConfig
{
    double y_tolerance = 1e-13;
    double residual_tolerance = 1e-12;
    double bracket_lo = -50.0;
    double bracket_hi = 50.0;
};

inline double effective_eta(const OptionSpec &spec)
{
    switch (spec.payoff) {
    case PayoffKind::CallOnPortfolio:
        return spec.eta;
    case PayoffKind::CallOnSingle:
        return 1.0;
    case PayoffKind::Custom:
        break;
    }
    throw std::invalid_argument("closed form prices calls only; use the lattice or Monte Carlo");
}

inline LrTerms lr_terms(const LrClosedFormInputs &in)
{
    if (!in.params.is_constant())
        throw std::invalid_argument("closed form requires constant coefficients");
    in.params.validate();
    in.spec.validate();
    if (!(in.S > 0.0) || !(in.Z > 0.0))
        throw std::invalid_argument("spot prices must be positive");
    LrTerms k{};
    k.tau = in.spec.maturity - in.t;
    if (k.tau < 0.0)
        throw std::invalid_argument("valuation time after maturity");
    k.rbar = shadow_rate(in.params, in.t);
    k.sigma = in.params.sigma.value_at(in.t);
    k.sigma_tilde = in.params.sigma_tilde.value_at(in.t);
    const double root_tau = std::sqrt(k.tau);
    k.m = k.rbar * k.tau;
    k.w = k.sigma * root_tau;
    k.w_tilde = k.sigma_tilde * root_tau;
    k.dw = k.w - k.w_tilde;
    k.eta = effective_eta(in.spec);
    if (k.eta < 1.0 && !(k.sigma_tilde > 0.0))
        throw std::invalid_argument(
            "closed form needs a positive loading on Z unless eta = 1: with opposite loadings "
            "the exercise region is not a half-line; use the lattice or Monte Carlo");
    return k;
}

/// Root y* of
///   eta*S*exp(m + w^2/2 + w*y) + (1-eta)*Z*exp(m + w*w~ - w~^2/2 + w~*y) = K.
/// Solved in log form, where the left side is increasing and close to linear.
inline RootResult solve_y_star(const LrClosedFormInputs &in, const RootConfig &cfg = {})
{
    const LrTerms k = lr_terms(in);
    const double ninf = -std::numeric_limits<double>::infinity();
    const bool has_s = k.eta > 0.0;
    const bool has_z = k.eta < 1.0;
    const double log_a = has_s ? std::log(k.eta * in.S) + k.m + 0.5 * k.w * k.w : ninf;
    const double log_b = has_z ? std::log((1.0 - k.eta) * in.Z) + k.m + k.w * k.w_tilde -
                                     0.5 * k.w_tilde * k.w_tilde
                               : ninf;
    const bool slope_s = has_s && k.w > 0.0;
    const bool slope_z = has_z && k.w_tilde > 0.0;
    if (!slope_s && !slope_z)
        throw NoRoot("strike equation is flat in y (zero time to maturity)");

    const double log_k = std::log(in.spec.strike);
    auto fdf = [&](double y) {
        const double ea = log_a + k.w * y;
        const double eb = log_b + k.w_tilde * y;
        const double top = std::max(ea, eb);
        const double pa = std::exp(ea - top);
        const double pb = std::exp(eb - top);
        const double sum = pa + pb;
        return std::pair<double, double>{top + std::log(sum) - log_k,
                                         (k.w * pa + k.w_tilde * pb) / sum};
    };

    const ScalarRoot root = solve_increasing(fdf, cfg.bracket_lo, cfg.bracket_hi, cfg.y_tolerance);
    RootResult out;
    out.y_star = root.x;
    out.d = -root.x;
    out.iterations = root.iterations;
    out.residual = std::expm1(root.residual);
    if (!(std::abs(out.residual) <= cfg.residual_tolerance)) {
        throw ToleranceNotMet("y* residual " + std::to_string(out.residual) +
                              " above tolerance");
    }
    return out;
}

/// Closed-form call on the two-asset portfolio:
///   eta*S*N(d) + (1-eta)*Z*N(d - dw) - K*exp(-m)*N(d - w),  d = -y*.
inline double lr_call_price(const LrClosedFormInputs &in, const RootResult &root)
{
    const LrTerms k = lr_terms(in);
    const double d = root.d;
    return k.eta * in.S * normal_cdf(d) + (1.0 - k.eta) * in.Z * normal_cdf(d - k.dw) -
           in.spec.strike * std::exp(-k.m) * normal_cdf(d - k.w);
}

inline double lr_call_price(const LrClosedFormInputs &in)
{
    return lr_call_price(in, solve_y_star(in));
}

struct QuadratureConfig
{
    double abs_tolerance = 1e-11;
    // Gaussian tails beyond this many standard deviations are dropped.
    double tail_cutoff = 13.0;
    int max_intervals = 4000;
};

/// Call price as the integral over y > y* of the discounted, numeraire-adjusted
/// payoff against the standard normal density. The density is folded into
/// each exponential so every term is a shifted Gaussian:
///   eta*S*phi(y) + (1-eta)*Z*phi(y + dw) - K*exp(-m)*phi(y + w).
/// Independent of normal_cdf; serves as the oracle for the closed form.
inline double lr_call_price_quadrature(const LrClosedFormInputs &in, const RootResult &root,
                                       const QuadratureConfig &cfg = {})
{
    const LrTerms k = lr_terms(in);
    const double s_coef = k.eta * in.S;
    const double z_coef = (1.0 - k.eta) * in.Z;
    const double k_coef = in.spec.strike * std::exp(-k.m);
    auto integrand = [&](double y) {
        return s_coef * normal_pdf(y) + z_coef * normal_pdf(y + k.dw) -
               k_coef * normal_pdf(y + k.w);
    };
    // Peaks sit at 0, -dw and -w.
    const double peak_lo = std::min({0.0, -k.dw, -k.w});
    const double peak_hi = std::max({0.0, -k.dw, -k.w});
    const double lower = std::max(root.y_star, peak_lo - cfg.tail_cutoff);
    const double upper = std::max(lower, peak_hi) + cfg.tail_cutoff;
    return integrate_adaptive(integrand, lower, upper, cfg.abs_tolerance,
                              {0.0, -k.dw, -k.w}, cfg.max_intervals)
        .value;
}

inline double lr_call_price_quadrature(const LrClosedFormInputs &in,
                                       const QuadratureConfig &cfg = {})
{
    return lr_call_price_quadrature(in, solve_y_star(in), cfg);
}

struct LognormalTerminal
{
    double mean_log_s;
    double sd_log_s;
    double mean_log_z;
    double sd_log_z;
};

/// Terminal log-price moments of S and Z under the S-numeraire measure.
inline LognormalTerminal lognormal_terminal_params(const LrClosedFormInputs &in)
{
    const DualAssetParams &p = in.params;
    if (!p.is_constant())
        throw std::invalid_argument("lognormal terminal parameters need constant coefficients");
    const double tau = in.spec.maturity - in.t;
    // Not routed through lr_terms: sigma == sigma_tilde is allowed here when
    // the drift is given directly through equal mu and mu_tilde.
    const double rbar = std::abs(p.vol_spread(in.t)) >= p.spread_epsilon
                            ? shadow_rate(p, in.t)
                            : p.mu.value_at(in.t);
    const double m = rbar * tau;
    const double w = p.sigma.value_at(in.t) * std::sqrt(tau);
    const double wt = p.sigma_tilde.value_at(in.t) * std::sqrt(tau);
    return {std::log(in.S) + m + 0.5 * w * w, w, std::log(in.Z) + m + w * wt - 0.5 * wt * wt, wt};
}

/// Black-Scholes-Merton European call.
inline double black_scholes_call(double spot, double strike, double rate, double sigma,
                                 double tau)
{
    if (tau <= 0.0 || sigma <= 0.0) {
        return std::max(0.0, spot - strike * std::exp(-rate * std::max(tau, 0.0)));
    }
    const double vol = sigma * std::sqrt(tau);
    const double d1 = (std::log(spot / strike) + (rate + 0.5 * sigma * sigma) * tau) / vol;
    return spot * normal_cdf(d1) - strike * std::exp(-rate * tau) * normal_cdf(d1 - vol);
}

} // namespace altprice
