#include <gtest/gtest.h>

#include <random>

#include "altprice/closed_form.hpp"
#include "altprice/lattice.hpp"
#include "oracles.hpp"

using namespace altprice;

namespace
{

DualAssetParams reference() { return {0.08, 0.2, 0.14, 0.4}; }

OptionSpec portfolio_call(double eta = 0.5, double K = 100.0)
{
    OptionSpec s;
    s.eta = eta;
    s.strike = K;
    return s;
}

} // namespace

TEST(CalibrateMoves, HandExampleAndWarning)
{
    const auto m = calibrate_moves(SingleAssetParams{0.0, 0.2, 0.0},
                                   LatticeConfig::uniform(1, 0.01, 0.5));
    EXPECT_NEAR(m.U[0], 0.02, 1e-16);
    EXPECT_NEAR(m.D[0], -0.02, 1e-16);
    ASSERT_FALSE(m.warnings.empty());
    EXPECT_NE(m.warnings.front().find("D <= 0"), std::string::npos);
}

TEST(CalibrateMoves, MomentsExact)
{
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double p = 0.02 + 0.96 * u(gen), mu = 0.4 * u(gen) - 0.2,
                     sigma = 0.01 + 0.8 * u(gen), delta = 0.001 + u(gen);
        const double U = up_move(mu, sigma, p, delta), D = down_move(mu, sigma, p, delta);
        const double mean = p * U + (1 - p) * D;
        const double var = p * (U - mu * delta) * (U - mu * delta) +
                           (1 - p) * (D - mu * delta) * (D - mu * delta);
        EXPECT_NEAR(mean, mu * delta, 1e-15);
        EXPECT_NEAR(var / (sigma * sigma * delta), 1.0, 1e-13);
    }
}

TEST(RiskNeutralQ, Examples)
{
    // zero drift spread
    auto m = calibrate_moves(DualAssetParams{0.05, 0.2, 0.05, 0.3}, LatticeConfig::uniform(1, 0.01, 0.3));
    EXPECT_NEAR(risk_neutral_q(m, 0), 0.3, 1e-14);
    // dmu/dsigma = 0.5
    const DualAssetParams half{0.0, 0.2, 0.1, 0.4};
    m = calibrate_moves(half, LatticeConfig::uniform(1, 0.01, 0.5));
    EXPECT_NEAR(risk_neutral_q(m, 0), 0.475, 1e-14);
}

TEST(RiskNeutralQ, ReducedFormAndRateIdentity)
{
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    while (checked < 300) {
        const double s = 0.05 + 0.75 * u(gen), st = 0.05 + 0.75 * u(gen);
        if (std::abs(s - st) < 0.05)
            continue;
        const DualAssetParams p{0.2 * u(gen) - 0.05, s, 0.2 * u(gen) - 0.05, st};
        const auto cfg = LatticeConfig::uniform(1, 0.001 + 0.05 * u(gen), 0.1 + 0.8 * u(gen));
        const auto m = calibrate_moves(p, cfg);
        double q;
        try {
            q = risk_neutral_q(m, 0);
        } catch (const NoArbitrageViolation &) {
            continue;
        }
        EXPECT_NEAR(q, risk_neutral_q_reduced(p, cfg, 0), 1e-13);
        EXPECT_NEAR(cumulative_return_R(m, 0), 1.0 + shadow_rate(p, 0) * cfg.delta(), 1e-13);
        ++checked;
    }
}

TEST(RiskNeutralQ, ViolationThrows)
{
    const DualAssetParams steep{0.0, 0.1, 2.0, 0.11};
    const auto m = calibrate_moves(steep, LatticeConfig::uniform(1, 1.0, 0.5));
    EXPECT_THROW(risk_neutral_q(m, 0), NoArbitrageViolation);
}

TEST(CumulativeReturn, Examples)
{
    auto m = calibrate_moves(DualAssetParams{0.0, 0.1, 0.0, 0.2}, LatticeConfig::uniform(1, 0.3, 0.4));
    EXPECT_NEAR(cumulative_return_R(m, 0), 1.0, 1e-15);
    m = calibrate_moves(reference(), LatticeConfig::uniform(1, 0.01, 0.37));
    EXPECT_NEAR(cumulative_return_R(m, 0), 1.0002, 1e-14);
}

TEST(PriceLrTree, OneStepMartingaleAtEveryNode)
{
    const auto cfg = LatticeConfig::uniform(12, 1.0, 0.5);
    const auto r = price_lr_tree(100, 90, reference(), portfolio_call(), cfg);
    const double q = r.q_schedule[0], R = r.R_schedule[0];
    for (std::size_t k = 0; k < 12; ++k)
        for (std::size_t j = 0; j <= k; ++j) {
            EXPECT_NEAR((q * r.node_s[k + 1][j + 1] + (1 - q) * r.node_s[k + 1][j]) / R,
                        r.node_s[k][j], 1e-12 * r.node_s[k][j]);
            EXPECT_NEAR((q * r.node_z[k + 1][j + 1] + (1 - q) * r.node_z[k + 1][j]) / R,
                        r.node_z[k][j], 1e-12 * r.node_z[k][j]);
            EXPECT_GE(r.node_values[k][j], 0.0);
        }
}

TEST(PriceLrTree, MatchesEnumeration)
{
    for (int n : {1, 4, 10}) {
        for (double K : {0.0001, 95.0}) {
            const auto cfg = LatticeConfig::uniform(n, 1.0, 0.45);
            const auto m = calibrate_moves(reference(), cfg);
            const double q = risk_neutral_q(m, 0), R = cumulative_return_R(m, 0);
            const auto spec = portfolio_call(0.3, K);
            const double tree = price_lr_tree(100, 110, reference(), spec, cfg).option_value_root;
            const double brute = oracle::enumerate_tree(
                n, q, R, 1 + m.U[0], 1 + m.D[0], 1 + m.U_tilde[0], 1 + m.D_tilde[0], 100, 110,
                [&](double s, double z) { return std::max(0.0, 0.3 * s + 0.7 * z - K); });
            EXPECT_NEAR(tree, brute, 1e-11) << n << " " << K;
        }
    }
}

TEST(PriceLrTree, ZeroStrikeIsPortfolioValue)
{
    const auto cfg = LatticeConfig::uniform(10, 1.0, 0.5);
    auto spec = portfolio_call(0.3, 1e-12);
    const double v = price_lr_tree(100, 110, reference(), spec, cfg).option_value_root;
    EXPECT_NEAR(v, 0.3 * 100 + 0.7 * 110, 1e-9);
}

TEST(PriceLrTree, TimeVaryingUsesPathIndexedLayout)
{
    DualAssetParams p = reference();
    p.mu = Schedule{{0.0, 0.06}, {0.5, 0.10}};
    const int n = 8;
    const auto cfg = LatticeConfig::uniform(n, 1.0, 0.5);
    const auto r = price_lr_tree(100, 100, p, portfolio_call(), cfg);
    EXPECT_FALSE(r.recombining);
    const auto m = calibrate_moves(p, cfg);
    double total = 0.0;
    for (unsigned path = 0; path < (1u << n); ++path) {
        double s = 100, z = 100, w = 1;
        for (int k = 0; k < n; ++k) {
            const bool up = path >> k & 1u;
            s *= 1 + (up ? m.U[k] : m.D[k]);
            z *= 1 + (up ? m.U_tilde[k] : m.D_tilde[k]);
            w *= (up ? r.q_schedule[k] : 1 - r.q_schedule[k]) / r.R_schedule[k];
        }
        total += w * std::max(0.0, 0.5 * s + 0.5 * z - 100);
    }
    EXPECT_NEAR(r.option_value_root, total, 1e-11);
    auto big = LatticeConfig::uniform(kMaxPathIndexedSteps + 1, 1.0, 0.5);
    EXPECT_THROW(price_lr_tree(100, 100, p, portfolio_call(), big), LatticeOverflow);
}

TEST(PriceLrTree, ConvergesToClosedForm)
{
    LrClosedFormInputs in{100, 100, reference(), portfolio_call(), 0.0};
    const double exact = lr_call_price(in);
    const double err200 =
        std::abs(price_lr_tree(100, 100, reference(), portfolio_call(),
                               LatticeConfig::uniform(200, 1.0, 0.5, false))
                     .option_value_root -
                 exact);
    const double err800 =
        std::abs(price_lr_tree(100, 100, reference(), portfolio_call(),
                               LatticeConfig::uniform(800, 1.0, 0.5, false))
                     .option_value_root -
                 exact);
    EXPECT_LT(err800, err200);
    EXPECT_LT(err800 / exact, 5e-3);
}

TEST(RatioMartingale, HandExampleAndScaling)
{
    const DualAssetParams p{0.0, 0.1, 0.0, 0.2};
    const std::vector<double> deltas = {1.0, 0.5, 0.25, 0.125};
    const auto dev = ratio_martingale_scaling(p, 0.5, deltas);
    EXPECT_NEAR(dev[0], 0.01 / 0.99, 1e-14);
    for (std::size_t i = 1; i < dev.size(); ++i) {
        const double x2 = 0.01 * deltas[i];
        EXPECT_NEAR(dev[i], x2 / (1 - x2), 1e-14);
    }
    const auto cfg = LatticeConfig::uniform(1, 1.0, 0.5);
    const auto m = calibrate_moves(p, cfg);
    const auto r = price_lr_tree(1, 1, p, portfolio_call(1.0, 1.0), cfg);
    const auto rep = ratio_martingale_diagnostic(r, 1.0, 1.0, m);
    EXPECT_NEAR(1.0 + rep.per_step_relative[0], 0.98989898989899, 1e-13);
    EXPECT_NEAR(rep.per_step_four_outcome[0], 0.01 / 0.99, 1e-14);
}

TEST(PiTree, DeflatorAndMoments)
{
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const double mu = 0.02 + 0.2 * u(gen), sigma = 0.05 + 0.5 * u(gen), rf = 0.1 * u(gen) + 1e-3;
        const auto cfg = LatticeConfig::uniform(3, 0.1 + u(gen), 0.1 + 0.8 * u(gen));
        const auto t = build_pi_tree(100, SingleAssetParams{mu, sigma, rf}, cfg);
        const double p = cfg.p(0), d = cfg.delta();
        const double mean = p * t.up[0] + (1 - p) * t.down[0];
        const double var = p * (t.up[0] - mean) * (t.up[0] - mean) +
                           (1 - p) * (t.down[0] - mean) * (t.down[0] - mean);
        EXPECT_NEAR(mean, rf * d, 1e-15);
        EXPECT_NEAR(var / (rf * sigma / mu * rf * sigma / mu * d), 1.0, 1e-12);
    }
    const auto t = build_pi_tree(100, SingleAssetParams{0.10, 0.2, 0.05}, LatticeConfig::uniform(2, 1, 0.5));
    EXPECT_EQ(t.pi[0], 0.5);
    const auto same = build_pi_tree(100, SingleAssetParams{0.05, 0.2, 0.05}, LatticeConfig::uniform(2, 1, 0.5));
    EXPECT_EQ(same.up[0], same.plain_up[0]);
    EXPECT_EQ(same.down[0], same.plain_down[0]);
    EXPECT_THROW(build_pi_tree(100, SingleAssetParams{0.0, 0.2, 0.05}, LatticeConfig::uniform(2, 1, 0.5)),
                 ZeroDrift);
}

TEST(PiTree, OneStepHandExample)
{
    // S0 = 100 with up/down landing on C^u = 10, C^d = 0 for strike 100.
    PiTree t;
    t.S0 = 100;
    t.cfg = LatticeConfig::uniform(1, 1.0, 0.5);
    t.p = {0.5};
    t.pi = {1};
    t.mu = {0.01};
    t.sigma = {0.1};
    t.rate_step = {0.01};
    t.up = {0.1};
    t.down = {-0.08};
    OptionSpec call;
    call.payoff = PayoffKind::CallOnSingle;
    const auto r = price_pi_tree(t, call);
    EXPECT_NEAR(r.option_value_root, 5.0 / 1.01, 1e-13);
}

TEST(PiTree, NaturalProbabilityAndHedges)
{
    const SingleAssetParams params{0.10, 0.2, 0.05};
    const auto cfg = LatticeConfig::uniform(6, 1.0, 0.4);
    const auto tree = build_pi_tree(100, params, cfg);
    OptionSpec call;
    call.payoff = PayoffKind::CallOnSingle;
    const auto r = price_pi_tree(tree, call);
    for (double q : r.q_schedule)
        EXPECT_EQ(q, 0.4);
    const double R = r.R_schedule[0];
    for (std::size_t k = 0; k < 6; ++k) {
        const double beta = std::pow(R, double(k)), beta_next = beta * R;
        for (std::size_t j = 0; j <= k; ++j) {
            const auto h = r.replication_weights[k][j];
            const double s = r.node_s[k][j];
            EXPECT_NEAR(h.first * s + h.second * beta, r.node_values[k][j], 1e-12);
            // self-financing: the same holdings replicate both successors
            EXPECT_NEAR(h.first * r.node_s[k + 1][j + 1] + h.second * beta_next,
                        r.node_values[k + 1][j + 1], 1e-11);
            EXPECT_NEAR(h.first * r.node_s[k + 1][j] + h.second * beta_next,
                        r.node_values[k + 1][j], 1e-11);
            const double closed = replication_weight_pi(
                r.node_values[k + 1][j + 1], r.node_values[k + 1][j], s, 0.10, 0.2, 0.4,
                cfg.delta(), 0.05 * cfg.delta());
            EXPECT_NEAR(h.first, closed, 1e-12);
        }
    }
}

TEST(ReplicationWeight, Cases)
{
    EXPECT_EQ(replication_weight(3.0, 3.0, 110, 90), 0.0);
    EXPECT_THROW(replication_weight(1, 0, 100, 100), DegenerateNode);
    // two-step call, middle node straddles the strike
    const double a = replication_weight(8.0, 0.0, 108.0, 96.0);
    EXPECT_GT(a, 0.0);
    EXPECT_LE(a, 1.0);
}

TEST(BankAccount, Paths)
{
    const std::vector<double> r(3, 0.001);
    EXPECT_NEAR(bank_account_path(r).back(), 1.003003001, 1e-15);
    const auto flat = bank_account_path(std::vector<double>(4, 0.0));
    for (double b : flat)
        EXPECT_EQ(b, 1.0);
    const auto sched = bank_account_path(Schedule{{0.0, 0.02}, {0.5, 0.0}}, LatticeConfig::uniform(4, 1.0, 0.5));
    for (std::size_t i = 1; i < sched.size(); ++i)
        EXPECT_GE(sched[i], sched[i - 1]);
}

TEST(PerpetualMarket, RiskNeutralQIndependentOfGamma)
{
    const double mu = 0.09, sigma = 0.25, rf = 0.03, p = 0.5;
    const auto cfg = LatticeConfig::uniform(1, 0.01, p);
    const double expected = p - (mu - rf) / sigma * std::sqrt(p * (1 - p) * cfg.delta());
    for (double g : {-2.0, -0.5, 0.5, 2.0}) {
        const DualAssetParams pair{mu, sigma, (1 - g) * rf + g * mu, g * sigma};
        EXPECT_NEAR(risk_neutral_q(calibrate_moves(pair, cfg), 0), expected, 1e-13) << g;
    }
}
