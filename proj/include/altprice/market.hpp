#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "errors.hpp"
#include "schedule.hpp"

namespace altprice
{

/// Default lower bound on |sigma_tilde - sigma| before the two assets are
/// considered unable to span a riskless rate.
inline constexpr double kDefaultSpreadEpsilon = 1e-10;

/// Two risky assets S and Z driven by one Wiener process:
///   dS = S (mu dt + sigma dW),  dZ = Z (mu_tilde dt + sigma_tilde dW).
/// Rates and volatilities are per unit of the same time unit as maturities.
struct DualAssetParams
{
    Schedule mu;
    Schedule sigma;
    Schedule mu_tilde;
    Schedule sigma_tilde;
    double spread_epsilon = kDefaultSpreadEpsilon;

    /// Convenience for the common "given shadow rate" setup: equal drifts
    /// force the shadow rate to that drift for any sigma != sigma_tilde.
    static DualAssetParams from_shadow_rate(double rate, double sigma, double sigma_tilde)
    {
        return DualAssetParams{rate, sigma, rate, sigma_tilde};
    }

    bool is_constant() const
    {
        return mu.is_constant() && sigma.is_constant() && mu_tilde.is_constant() &&
               sigma_tilde.is_constant();
    }

    double drift_spread(double t) const { return mu_tilde.value_at(t) - mu.value_at(t); }
    double vol_spread(double t) const { return sigma_tilde.value_at(t) - sigma.value_at(t); }

    // sigma_tilde is a signed loading on the shared noise; a negative value
    // describes an asset moving against S, e.g. S^gamma with gamma < 0.
    void validate() const
    {
        if (!sigma.all_of([](double v) { return v > 0.0; }))
            throw std::invalid_argument("volatility of S must be positive");
        if (!sigma_tilde.all_of([](double v) { return v != 0.0 && std::isfinite(v); }))
            throw std::invalid_argument("loading of Z must be nonzero");
    }
};

/// A stock with GBM dynamics next to a riskless bank account.
struct SingleAssetParams
{
    Schedule mu;
    Schedule sigma;
    Schedule r_f;

    bool is_constant() const
    {
        return mu.is_constant() && sigma.is_constant() && r_f.is_constant();
    }

    void validate() const
    {
        if (!sigma.all_of([](double v) { return v > 0.0; }))
            throw std::invalid_argument("volatility must be positive");
    }
};

enum class PayoffKind
{
    CallOnPortfolio,
    CallOnSingle,
    Custom,
};

/// European claim on eta*S + (1 - eta)*Z (or on S alone).
struct OptionSpec
{
    double strike = 100.0;
    double maturity = 1.0;
    double eta = 1.0;
    PayoffKind payoff = PayoffKind::CallOnPortfolio;
    std::function<double(double)> custom; // used when payoff == Custom

    void validate() const
    {
        if (!(strike > 0.0))
            throw std::invalid_argument("strike must be positive");
        if (!(maturity > 0.0))
            throw std::invalid_argument("maturity must be positive");
        if (!(eta >= 0.0 && eta <= 1.0))
            throw std::invalid_argument("eta must lie in [0, 1]");
        if (payoff == PayoffKind::Custom && !custom)
            throw std::invalid_argument("custom payoff requires a function");
    }

    double underlying(double s, double z) const
    {
        return payoff == PayoffKind::CallOnSingle ? s : eta * s + (1.0 - eta) * z;
    }

    double terminal(double underlying_value) const
    {
        if (payoff == PayoffKind::Custom)
            return custom(underlying_value);
        return std::max(0.0, underlying_value - strike);
    }

    double terminal(double s, double z) const { return terminal(underlying(s, z)); }
};

namespace detail
{
inline double checked_vol_spread(const DualAssetParams &params, double t)
{
    const double spread = params.vol_spread(t);
    if (!(std::abs(spread) >= params.spread_epsilon)) {
        throw DegenerateVolatilitySpread(
            "volatility spread |sigma_tilde - sigma| = " + std::to_string(std::abs(spread)) +
            " below epsilon: shadow riskless rate undefined");
    }
    return spread;
}
} // namespace detail

/// Riskless rate implied by two perfectly correlated risky assets:
/// (mu*sigma_tilde - mu_tilde*sigma) / (sigma_tilde - sigma).
inline double shadow_rate(const DualAssetParams &params, double t)
{
    const double spread = detail::checked_vol_spread(params, t);
    return (params.mu.value_at(t) * params.sigma_tilde.value_at(t) -
            params.mu_tilde.value_at(t) * params.sigma.value_at(t)) /
           spread;
}

/// Girsanov kernel for the measure that makes Z/S a martingale.
inline double market_price_of_risk(const DualAssetParams &params, double t)
{
    const double spread = detail::checked_vol_spread(params, t);
    return params.drift_spread(t) / spread - params.sigma.value_at(t);
}

struct QDrifts
{
    double drift_s;     // r_bar + sigma^2
    double drift_z;     // r_bar + sigma*sigma_tilde
    double drift_ratio; // Z/S is driftless
};

/// Drifts of S, Z and Z/S under the measure with S as numeraire.
inline QDrifts q_dynamics(const DualAssetParams &params, double t)
{
    const double r = shadow_rate(params, t);
    const double s = params.sigma.value_at(t);
    const double st = params.sigma_tilde.value_at(t);
    return {r + s * s, r + s * st, 0.0};
}

struct SharpeReport
{
    double rate_from_s;  // riskless rate making S's Sharpe ratio equal Z's, solved from S's side
    double rate_from_z;
    double sharpe_s;
    double sharpe_z;
    double difference;   // |sharpe_s - sharpe_z|
};

/// Evaluates both Sharpe ratios at the shadow rate. They agree by
/// construction; the report exposes the rounding residue.
inline SharpeReport sharpe_consistency_check(const DualAssetParams &params, double t)
{
    const double r = shadow_rate(params, t);
    const double mu = params.mu.value_at(t);
    const double mt = params.mu_tilde.value_at(t);
    const double s = params.sigma.value_at(t);
    const double st = params.sigma_tilde.value_at(t);
    SharpeReport rep{};
    rep.sharpe_s = (mu - r) / s;
    rep.sharpe_z = (mt - r) / st;
    // r^P from each side: mu - sharpe*sigma, using the other asset's ratio.
    rep.rate_from_s = mu - rep.sharpe_z * s;
    rep.rate_from_z = mt - rep.sharpe_s * st;
    rep.difference = std::abs(rep.sharpe_s - rep.sharpe_z);
    return rep;
}

} // namespace altprice
