#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "market.hpp"

namespace altprice
{

inline constexpr int kMaxPathIndexedSteps = 25;
inline constexpr int kMaxStoredSteps = 5000;

/// Uniform time grid t_k = k*T/n with a Bernoulli up-probability per step.
/// p_schedule[k] drives the move from t_k to t_{k+1}.
struct LatticeConfig
{
    int n = 100;
    double maturity = 1.0;
    std::vector<double> p_schedule;
    bool keep_nodes = true; // store per-node prices and values

    static LatticeConfig uniform(int n, double maturity, double p, bool keep_nodes = true)
    {
        return LatticeConfig{n, maturity, std::vector<double>(static_cast<std::size_t>(n), p),
                             keep_nodes};
    }

    double delta() const { return maturity / n; }
    double time(int step) const { return step * delta(); }
    double p(int step) const { return p_schedule[static_cast<std::size_t>(step)]; }

    void validate() const
    {
        if (n < 1)
            throw std::invalid_argument("lattice needs at least one step");
        if (!(maturity > 0.0))
            throw std::invalid_argument("lattice maturity must be positive");
        if (p_schedule.size() != static_cast<std::size_t>(n))
            throw std::invalid_argument("p_schedule must have one entry per step");
        for (double p : p_schedule) {
            if (!(p > 0.0 && p < 1.0))
                throw std::invalid_argument("up-probability must lie in (0, 1)");
        }
    }
};

/// Arithmetic up/down returns per step, matched to the first two moments
/// mu*delta and sigma^2*delta of the continuous return.
struct CalibratedMoves
{
    double delta = 0.0;
    std::vector<double> p;
    std::vector<double> U, D;
    std::vector<double> U_tilde, D_tilde; // empty for a single asset
    std::vector<std::string> warnings;

    int steps() const { return static_cast<int>(U.size()); }
    bool has_second_asset() const { return !U_tilde.empty(); }

    bool is_time_constant() const
    {
        auto flat = [](const std::vector<double> &v) {
            return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
        };
        return flat(U) && flat(D) && flat(U_tilde) && flat(D_tilde);
    }
};

inline double up_move(double mu, double sigma, double p, double delta)
{
    return mu * delta + sigma * std::sqrt((1.0 - p) / p) * std::sqrt(delta);
}

inline double down_move(double mu, double sigma, double p, double delta)
{
    return mu * delta - sigma * std::sqrt(p / (1.0 - p)) * std::sqrt(delta);
}

namespace detail
{
inline void note_move_warnings(CalibratedMoves &m, int k, double up, double down, const char *who)
{
    auto once = [&](const std::string &tag) {
        const std::string prefix = std::string(who) + ": " + tag;
        for (const auto &w : m.warnings)
            if (w.rfind(prefix, 0) == 0)
                return;
        m.warnings.push_back(prefix + " (first at step " + std::to_string(k) + ")");
    };
    if (!(up > down))
        once("up move not above down move");
    // Moment-matched moves routinely give D < 0 when mu*delta is small
    // against sigma*sqrt(delta); the U > D > 0 ordering is only advisory.
    else if (!(down > 0.0))
        once("D <= 0 (negative down return)");
    if (!(down > -1.0))
        once("1 + D <= 0 (non-positive prices)");
}
} // namespace detail

inline CalibratedMoves calibrate_moves(const SingleAssetParams &params, const LatticeConfig &cfg)
{
    cfg.validate();
    params.validate();
    CalibratedMoves m;
    m.delta = cfg.delta();
    for (int k = 0; k < cfg.n; ++k) {
        const double t = cfg.time(k);
        const double p = cfg.p(k);
        const double up = up_move(params.mu.value_at(t), params.sigma.value_at(t), p, m.delta);
        const double down = down_move(params.mu.value_at(t), params.sigma.value_at(t), p, m.delta);
        m.p.push_back(p);
        m.U.push_back(up);
        m.D.push_back(down);
        detail::note_move_warnings(m, k, up, down, "S");
    }
    return m;
}

inline CalibratedMoves calibrate_moves(const DualAssetParams &params, const LatticeConfig &cfg)
{
    params.validate();
    CalibratedMoves m = calibrate_moves(SingleAssetParams{params.mu, params.sigma, 0.0}, cfg);
    for (int k = 0; k < cfg.n; ++k) {
        const double t = cfg.time(k);
        const double p = cfg.p(k);
        const double up = up_move(params.mu_tilde.value_at(t), params.sigma_tilde.value_at(t), p,
                                  m.delta);
        const double down = down_move(params.mu_tilde.value_at(t),
                                      params.sigma_tilde.value_at(t), p, m.delta);
        m.U_tilde.push_back(up);
        m.D_tilde.push_back(down);
        detail::note_move_warnings(m, k, up, down, "Z");
    }
    return m;
}

namespace detail
{
inline double move_spread(const CalibratedMoves &m, int step)
{
    if (!m.has_second_asset())
        throw std::invalid_argument("two-asset operation on single-asset moves");
    const auto k = static_cast<std::size_t>(step);
    const double dD = m.D_tilde[k] - m.D[k];
    const double dU = m.U_tilde[k] - m.U[k];
    if (dD == dU)
        throw DegenerateVolatilitySpread("step " + std::to_string(step) +
                                         ": identical move spreads, assets do not span");
    return dD - dU;
}
} // namespace detail

/// q = dD / (dD - dU) with dD = D~ - D, dU = U~ - U.
inline double risk_neutral_q(const CalibratedMoves &m, int step)
{
    const double denom = detail::move_spread(m, step);
    const auto k = static_cast<std::size_t>(step);
    const double q = (m.D_tilde[k] - m.D[k]) / denom;
    if (!(q > 0.0 && q < 1.0)) {
        throw NoArbitrageViolation("step " + std::to_string(step) + ": risk-neutral q = " +
                                   std::to_string(q) +
                                   " outside (0, 1); step too large for the drift spread");
    }
    return q;
}

/// Reduced form of risk_neutral_q for moment-matched moves:
/// p - (dmu/dsigma) * sqrt(p (1 - p) delta).
inline double risk_neutral_q_reduced(const DualAssetParams &params, const LatticeConfig &cfg,
                                     int step)
{
    const double t = cfg.time(step);
    const double p = cfg.p(step);
    const double ratio = params.drift_spread(t) / detail::checked_vol_spread(params, t);
    return p - ratio * std::sqrt(p * (1.0 - p) * cfg.delta());
}

/// One-step gross return of the replicating portfolio,
/// [(1+U)(1+D~) - (1+U~)(1+D)] / (dD - dU).
inline double cumulative_return_R(const CalibratedMoves &m, int step)
{
    const double denom = detail::move_spread(m, step);
    const auto k = static_cast<std::size_t>(step);
    return ((1.0 + m.U[k]) * (1.0 + m.D_tilde[k]) - (1.0 + m.U_tilde[k]) * (1.0 + m.D[k])) /
           denom;
}

/// Holdings replicating an option over one step. For the two-asset tree:
/// units of S and Z; for the deflated-return tree: units of S^pi and of the
/// bank account.
struct NodeHedge
{
    double first = 0.0;
    double second = 0.0;
};

struct LatticeResult
{
    double option_value_root = 0.0;
    bool recombining = true;
    // [k][j], j = number of up moves in k steps; empty when keep_nodes is off
    // or the tree is path-indexed.
    std::vector<std::vector<double>> node_values;
    std::vector<std::vector<double>> node_s;
    std::vector<std::vector<double>> node_z;
    std::vector<std::vector<NodeHedge>> replication_weights; // k < n
    std::vector<double> q_schedule;
    std::vector<double> R_schedule;
    std::vector<std::string> warnings;
    bool no_arbitrage_flagged = false;
};

/// a = (C^u - C^d) / (S^u - S^d): units of the traded asset in the one-step hedge.
inline double replication_weight(double c_up, double c_down, double s_up, double s_down)
{
    if (s_up == s_down)
        throw DegenerateNode("replication weight: up and down prices coincide");
    return (c_up - c_down) / (s_up - s_down);
}

/// The same weight written through the deflated-return tree's parameters:
/// mu sqrt(p(1-p)) sqrt(delta) (C^u - C^d) / (S sigma r_step).
inline double replication_weight_pi(double c_up, double c_down, double s, double mu,
                                    double sigma, double p, double delta, double rate_step)
{
    return mu * std::sqrt(p * (1.0 - p)) * std::sqrt(delta) * (c_up - c_down) /
           (s * sigma * rate_step);
}

namespace detail
{
inline void check_finite(double v, int step)
{
    if (!std::isfinite(v))
        throw LatticeOverflow("non-finite lattice value at step " + std::to_string(step));
}

inline void check_size(const LatticeConfig &cfg, bool recombining)
{
    if (!recombining && cfg.n > kMaxPathIndexedSteps)
        throw LatticeOverflow("time-varying moves need a path-indexed tree; n = " +
                              std::to_string(cfg.n) + " exceeds " +
                              std::to_string(kMaxPathIndexedSteps));
    if (recombining && cfg.keep_nodes && cfg.n > kMaxStoredSteps)
        throw LatticeOverflow("n = " + std::to_string(cfg.n) +
                              " too large to keep node arrays; disable keep_nodes");
}

} // namespace detail

/// Prices a European claim on the two-asset tree by backward induction
/// C_k = [q C^u + (1 - q) C^d] / R with step-wise q and R.
inline LatticeResult price_lr_tree(double S0, double Z0, const DualAssetParams &params,
                                   const OptionSpec &spec, const LatticeConfig &cfg)
{
    spec.validate();
    if (!(S0 > 0.0) || !(Z0 > 0.0))
        throw std::invalid_argument("spot prices must be positive");
    const CalibratedMoves m = calibrate_moves(params, cfg);
    LatticeResult res;
    res.warnings = m.warnings;
    for (int k = 0; k < cfg.n; ++k) {
        res.q_schedule.push_back(risk_neutral_q(m, k));
        res.R_schedule.push_back(cumulative_return_R(m, k));
    }
    res.recombining = m.is_time_constant();
    detail::check_size(cfg, res.recombining);
    const int n = cfg.n;

    if (!res.recombining) {
        auto recurse = [&](int k, double s, double z, const auto &self) -> double {
            if (k == n)
                return spec.terminal(s, z);
            const auto i = static_cast<std::size_t>(k);
            const double cu = self(k + 1, s * (1.0 + m.U[i]), z * (1.0 + m.U_tilde[i]), self);
            const double cd = self(k + 1, s * (1.0 + m.D[i]), z * (1.0 + m.D_tilde[i]), self);
            const double q = res.q_schedule[i];
            return (q * cu + (1.0 - q) * cd) / res.R_schedule[i];
        };
        res.option_value_root = recurse(0, S0, Z0, recurse);
        detail::check_finite(res.option_value_root, 0);
        return res;
    }

    const double gu = 1.0 + m.U[0], gd = 1.0 + m.D[0];
    const double hu = 1.0 + m.U_tilde[0], hd = 1.0 + m.D_tilde[0];
    auto s_at = [&](int k, int j) { return S0 * std::pow(gu, j) * std::pow(gd, k - j); };
    auto z_at = [&](int k, int j) { return Z0 * std::pow(hu, j) * std::pow(hd, k - j); };

    std::vector<double> values(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j)
        values[static_cast<std::size_t>(j)] = spec.terminal(s_at(n, j), z_at(n, j));

    if (cfg.keep_nodes) {
        res.node_values.resize(static_cast<std::size_t>(n) + 1);
        res.node_s.resize(static_cast<std::size_t>(n) + 1);
        res.node_z.resize(static_cast<std::size_t>(n) + 1);
        res.replication_weights.resize(static_cast<std::size_t>(n));
        for (int k = 0; k <= n; ++k) {
            auto &ss = res.node_s[static_cast<std::size_t>(k)];
            auto &zz = res.node_z[static_cast<std::size_t>(k)];
            for (int j = 0; j <= k; ++j) {
                ss.push_back(s_at(k, j));
                zz.push_back(z_at(k, j));
            }
        }
        res.node_values[static_cast<std::size_t>(n)] = values;
    }

    const double q = res.q_schedule[0];
    const double R = res.R_schedule[0];
    for (int k = n - 1; k >= 0; --k) {
        std::vector<NodeHedge> hedges;
        if (cfg.keep_nodes)
            hedges.resize(static_cast<std::size_t>(k) + 1);
        for (int j = 0; j <= k; ++j) {
            const auto jj = static_cast<std::size_t>(j);
            const double cu = values[jj + 1];
            const double cd = values[jj];
            if (cfg.keep_nodes) {
                const auto kk = static_cast<std::size_t>(k + 1);
                const double su = res.node_s[kk][jj + 1], sd = res.node_s[kk][jj];
                const double zu = res.node_z[kk][jj + 1], zd = res.node_z[kk][jj];
                const double det = su * zd - sd * zu;
                hedges[jj] = {(cu * zd - cd * zu) / det, (su * cd - sd * cu) / det};
            }
            values[jj] = (q * cu + (1.0 - q) * cd) / R;
        }
        values.resize(static_cast<std::size_t>(k) + 1);
        if (cfg.keep_nodes) {
            res.node_values[static_cast<std::size_t>(k)] = values;
            res.replication_weights[static_cast<std::size_t>(k)] = std::move(hedges);
        }
    }
    res.option_value_root = values[0];
    detail::check_finite(res.option_value_root, 0);
    return res;
}

/// Deviation of Z/S from the martingale property over one step.
struct RatioMartingaleReport
{
    std::vector<double> per_step_relative; // E^q[(Z/S)_{k+1}] / (Z/S)_k - 1, shared draw
    std::vector<double> per_step_four_outcome; // same, with independent up/down draws
    double root_deviation = 0.0;           // |E^q[Z_1/S_1] - Z_0/S_0|
    double root_four_outcome = 0.0;
    double max_abs_relative = 0.0;
};

inline RatioMartingaleReport ratio_martingale_diagnostic(const LatticeResult &result, double S0,
                                                         double Z0, const CalibratedMoves &m)
{
    RatioMartingaleReport rep;
    for (int k = 0; k < m.steps(); ++k) {
        const auto i = static_cast<std::size_t>(k);
        const double q = result.q_schedule.at(i);
        const double up = (1.0 + m.U_tilde[i]) / (1.0 + m.U[i]);
        const double down = (1.0 + m.D_tilde[i]) / (1.0 + m.D[i]);
        const double shared = q * up + (1.0 - q) * down - 1.0;
        // Z and S moving on separate draws: all four up/down combinations.
        const double zu = 1.0 + m.U_tilde[i], zd = 1.0 + m.D_tilde[i];
        const double su = 1.0 + m.U[i], sd = 1.0 + m.D[i];
        const double four = q * q * zu / su + q * (1.0 - q) * zu / sd +
                            (1.0 - q) * q * zd / su + (1.0 - q) * (1.0 - q) * zd / sd - 1.0;
        rep.per_step_relative.push_back(shared);
        rep.per_step_four_outcome.push_back(four);
        rep.max_abs_relative = std::max(rep.max_abs_relative, std::abs(shared));
    }
    if (!rep.per_step_relative.empty()) {
        rep.root_deviation = std::abs(rep.per_step_relative.front()) * Z0 / S0;
        rep.root_four_outcome = std::abs(rep.per_step_four_outcome.front()) * Z0 / S0;
    }
    return rep;
}

/// One-step |E^q[Z/S]/(Z/S) - 1| for a single step of length delta, for each
/// delta in the list. Used to exhibit the O(delta) decay.
inline std::vector<double> ratio_martingale_scaling(const DualAssetParams &params, double p,
                                                    std::span<const double> deltas)
{
    std::vector<double> out;
    for (double delta : deltas) {
        const LatticeConfig cfg = LatticeConfig::uniform(1, delta, p, false);
        const CalibratedMoves m = calibrate_moves(params, cfg);
        LatticeResult r;
        r.q_schedule.push_back(risk_neutral_q(m, 0));
        out.push_back(std::abs(ratio_martingale_diagnostic(r, 1.0, 1.0, m).per_step_relative[0]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Deflated cumulative-return tree.

/// Tree for S^pi: the stock's up/down returns scaled by pi = r_inst / mu so
/// that the expected one-step return under the natural p is the riskless one.
struct PiTree
{
    double S0 = 0.0;
    LatticeConfig cfg;
    std::vector<double> p;
    std::vector<double> pi;
    std::vector<double> mu, sigma;
    std::vector<double> rate_step;  // r^{f,delta} = r_inst * delta
    std::vector<double> up, down;   // deflated returns pi*U, pi*D
    std::vector<double> plain_up, plain_down;
    std::vector<std::string> warnings;
    bool band_violated = false;

    bool is_time_constant() const
    {
        auto flat = [](const std::vector<double> &v) {
            return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
        };
        return flat(up) && flat(down) && flat(rate_step);
    }
};

inline PiTree build_pi_tree(double S0, const SingleAssetParams &params, const LatticeConfig &cfg)
{
    if (!(S0 > 0.0))
        throw std::invalid_argument("spot price must be positive");
    const CalibratedMoves plain = calibrate_moves(params, cfg);
    PiTree tree;
    tree.S0 = S0;
    tree.cfg = cfg;
    tree.warnings = plain.warnings;
    const double delta = cfg.delta();
    for (int k = 0; k < cfg.n; ++k) {
        const double t = cfg.time(k);
        const double mu = params.mu.value_at(t);
        const double r_inst = params.r_f.value_at(t);
        if (mu == 0.0)
            throw ZeroDrift("zero drift at t = " + std::to_string(t) + ": deflator r_f/mu undefined");
        const double pi = r_inst / mu;
        if (!(pi > 0.0))
            throw UnboundedDeflator("deflator r_f/mu = " + std::to_string(pi) +
                                    " is not positive at t = " + std::to_string(t));
        const auto i = static_cast<std::size_t>(k);
        const double rate_step = r_inst * delta;
        tree.p.push_back(cfg.p(k));
        tree.pi.push_back(pi);
        tree.mu.push_back(mu);
        tree.sigma.push_back(params.sigma.value_at(t));
        tree.rate_step.push_back(rate_step);
        tree.plain_up.push_back(plain.U[i]);
        tree.plain_down.push_back(plain.D[i]);
        tree.up.push_back(pi * plain.U[i]);
        tree.down.push_back(pi * plain.D[i]);
        if (!(plain.D[i] < rate_step && rate_step < plain.U[i])) {
            tree.band_violated = true;
            tree.warnings.push_back("step " + std::to_string(k) +
                                    ": riskless step return outside (D, U)");
        }
        if (!(tree.down.back() > -1.0))
            tree.warnings.push_back("step " + std::to_string(k) +
                                    ": deflated down move gives non-positive price");
    }
    return tree;
}

/// Backward induction under the natural probability p, discounting each
/// step at 1 + r^{f,delta}; records the S^pi / bank hedge at every node.
inline LatticeResult price_pi_tree(const PiTree &tree, const OptionSpec &spec)
{
    spec.validate();
    const LatticeConfig &cfg = tree.cfg;
    const int n = cfg.n;
    LatticeResult res;
    res.warnings = tree.warnings;
    res.no_arbitrage_flagged = tree.band_violated;
    res.q_schedule = tree.p;
    for (double r : tree.rate_step)
        res.R_schedule.push_back(1.0 + r);
    res.recombining = tree.is_time_constant();
    detail::check_size(cfg, res.recombining);

    if (!res.recombining) {
        auto recurse = [&](int k, double s, const auto &self) -> double {
            if (k == n)
                return spec.terminal(s);
            const auto i = static_cast<std::size_t>(k);
            const double cu = self(k + 1, s * (1.0 + tree.up[i]), self);
            const double cd = self(k + 1, s * (1.0 + tree.down[i]), self);
            return (tree.p[i] * cu + (1.0 - tree.p[i]) * cd) / res.R_schedule[i];
        };
        res.option_value_root = recurse(0, tree.S0, recurse);
        detail::check_finite(res.option_value_root, 0);
        return res;
    }

    const double gu = 1.0 + tree.up[0], gd = 1.0 + tree.down[0];
    const double p = tree.p[0];
    const double R = res.R_schedule[0];
    auto s_at = [&](int k, int j) { return tree.S0 * std::pow(gu, j) * std::pow(gd, k - j); };

    std::vector<double> values(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j)
        values[static_cast<std::size_t>(j)] = spec.terminal(s_at(n, j));
    if (cfg.keep_nodes) {
        res.node_values.resize(static_cast<std::size_t>(n) + 1);
        res.node_s.resize(static_cast<std::size_t>(n) + 1);
        res.replication_weights.resize(static_cast<std::size_t>(n));
        for (int k = 0; k <= n; ++k)
            for (int j = 0; j <= k; ++j)
                res.node_s[static_cast<std::size_t>(k)].push_back(s_at(k, j));
        res.node_values[static_cast<std::size_t>(n)] = values;
    }

    for (int k = n - 1; k >= 0; --k) {
        std::vector<NodeHedge> hedges;
        const double beta = std::pow(R, k);
        for (int j = 0; j <= k; ++j) {
            const auto jj = static_cast<std::size_t>(j);
            const double cu = values[jj + 1];
            const double cd = values[jj];
            const double c = (p * cu + (1.0 - p) * cd) / R;
            if (cfg.keep_nodes) {
                const double s = s_at(k, j);
                const double a = replication_weight(cu, cd, s * gu, s * gd);
                hedges.push_back({a, (c - a * s) / beta});
            }
            values[jj] = c;
        }
        values.resize(static_cast<std::size_t>(k) + 1);
        if (cfg.keep_nodes) {
            res.node_values[static_cast<std::size_t>(k)] = values;
            res.replication_weights[static_cast<std::size_t>(k)] = std::move(hedges);
        }
    }
    res.option_value_root = values[0];
    detail::check_finite(res.option_value_root, 0);
    return res;
}

/// beta_k = prod_{j<k} (1 + r_j), beta_0 = 1, for per-step simple rates.
inline std::vector<double> bank_account_path(std::span<const double> rates_per_step)
{
    std::vector<double> beta{1.0};
    for (double r : rates_per_step)
        beta.push_back(beta.back() * (1.0 + r));
    return beta;
}

inline std::vector<double> bank_account_path(const Schedule &r_f, const LatticeConfig &cfg)
{
    std::vector<double> rates;
    for (int k = 0; k < cfg.n; ++k)
        rates.push_back(r_f.value_at(cfg.time(k)) * cfg.delta());
    return bank_account_path(rates);
}

} // namespace altprice
