// Acceptance suite. Prints one PASS/FAIL line per criterion; exit status is
// nonzero if any selected criterion fails.
//
//   acceptance               run all
//   acceptance --criterion N run one

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "altprice/altprice.hpp"
#include "oracles.hpp"

using namespace altprice;

namespace
{

struct Outcome
{
    bool pass;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Outcome bsm_reduction()
{
    LrClosedFormInputs in;
    in.params = DualAssetParams::from_shadow_rate(0.05, 0.2, 0.4);
    in.spec.eta = 1.0;
    const auto start = Clock::now();
    const double c = lr_call_price(in);
    const double elapsed = seconds_since(start);
    const double bs = oracle::bs_call(100, 100, 0.05, 0.2, 1.0);
    const double err = std::abs(c - bs);
    return {err <= 1e-6 && std::abs(bs - 10.450584) <= 1e-6 && elapsed < 1e-3,
            fmt::format("price {:.9f} oracle {:.9f} |diff| {:.2e} time {:.2e}s", c, bs, err,
                        elapsed)};
}

Outcome closed_form_vs_quadrature()
{
    const auto grid = random_verification_grid(100, 2024);
    const auto start = Clock::now();
    double worst = 0.0;
    for (const auto &in : grid)
        worst = std::max(worst, std::abs(lr_call_price(in) - lr_call_price_quadrature(in)));
    const double elapsed = seconds_since(start);
    return {worst <= 1e-8 && elapsed < 5.0,
            fmt::format("100 instances, worst |diff| {:.2e} time {:.2f}s", worst, elapsed)};
}

Outcome pde_verification()
{
    const auto grid = random_verification_grid(100, 2024);
    const auto start = Clock::now();
    const auto sum = run_verification(grid);
    const double elapsed = seconds_since(start);
    return {sum.passed() && elapsed < 30.0,
            fmt::format("residual/bound {:.2e} split {:.2e} weight {:.2e} G-sum {:.2e} "
                        "fd1 {:.2e} fd2 {:.2e} time {:.2f}s{}",
                        sum.worst_residual_ratio, sum.worst_split, sum.worst_weight, sum.worst_g_sum,
                        sum.worst_fd_first, sum.worst_fd_second, elapsed,
                        sum.failures.empty() ? "" : " first failure: " + sum.failures.front())};
}

Outcome lattice_exactness()
{
    const auto start = Clock::now();
    Xoshiro256 rng(77);
    auto draw = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
    double worst_q = 0, worst_R = 0, worst_mean = 0, worst_var = 0;
    int used = 0;
    while (used < 1000) {
        const double s = draw(0.05, 0.8), st = draw(0.05, 0.8);
        if (std::abs(s - st) < 0.05)
            continue;
        const DualAssetParams params{draw(-0.1, 0.2), s, draw(-0.1, 0.2), st};
        const double p = draw(0.2, 0.8);
        const auto cfg = LatticeConfig::uniform(1, draw(0.001, 0.05), p, false);
        const auto m = calibrate_moves(params, cfg);
        double q = 0.0;
        try {
            q = risk_neutral_q(m, 0);
        } catch (const NoArbitrageViolation &) {
            continue;
        }
        ++used;
        const double dt = cfg.delta();
        worst_q = std::max(worst_q, std::abs(q - risk_neutral_q_reduced(params, cfg, 0)));
        worst_R = std::max(worst_R,
                           std::abs(cumulative_return_R(m, 0) - (1 + shadow_rate(params, 0) * dt)));
        auto moments = [&](double U, double D, double mu, double sigma) {
            const double mean = p * U + (1 - p) * D;
            const double var = p * (U - mean) * (U - mean) + (1 - p) * (D - mean) * (D - mean);
            worst_mean = std::max(worst_mean, std::abs(mean - mu * dt));
            worst_var = std::max(worst_var, std::abs(var - sigma * sigma * dt));
        };
        moments(m.U[0], m.D[0], params.mu.value_at(0), s);
        moments(m.U_tilde[0], m.D_tilde[0], params.mu_tilde.value_at(0), st);
    }
    const double elapsed = seconds_since(start);
    const bool ok = worst_q <= 1e-13 && worst_R <= 1e-13 && worst_mean <= 1e-13 &&
                    worst_var <= 1e-13 && elapsed < 1.0;
    return {ok, fmt::format("1000 draws: q {:.1e} R {:.1e} mean {:.1e} var {:.1e} time {:.3f}s",
                            worst_q, worst_R, worst_mean, worst_var, elapsed)};
}

Outcome lattice_convergence()
{
    const auto start = Clock::now();
    auto errors = [](const DualAssetParams &params, double eta) {
        LrClosedFormInputs in;
        in.params = params;
        in.spec.eta = eta;
        const double exact = lr_call_price(in);
        std::vector<double> out;
        for (int n : {50, 200, 800, 3200}) {
            const auto cfg = LatticeConfig::uniform(n, 1.0, 0.5, false);
            out.push_back(
                std::abs(price_lr_tree(in.S, in.Z, params, in.spec, cfg).option_value_root / exact -
                         1.0));
        }
        return out;
    };
    auto show = [](const std::vector<double> &e) {
        std::string s;
        for (double x : e)
            s += fmt::format(" {:.2e}", x);
        return s;
    };
    bool ok = true;
    std::string detail;
    const auto bs_market = DualAssetParams::from_shadow_rate(0.05, 0.2, 0.4);
    for (double eta : {1.0, 0.5}) {
        const auto e = errors(bs_market, eta);
        for (std::size_t i = 1; i < e.size(); ++i)
            ok = ok && e[i] < e[i - 1];
        ok = ok && e.back() <= 0.005;
        detail += fmt::format("eta {}:{}; ", eta, show(e));
    }
    // Reported only: the binomial odd/even oscillation makes this sequence non-monotone.
    detail += fmt::format("(0.08,0.2,0.14,0.4) eta 0.5 [info]:{}; ",
                          show(errors(DualAssetParams{0.08, 0.2, 0.14, 0.4}, 0.5)));
    const double elapsed = seconds_since(start);
    return {ok && elapsed < 10.0, detail + fmt::format("time {:.2f}s", elapsed)};
}

Outcome ratio_martingale()
{
    const DualAssetParams params{0.0, 0.1, 0.0, 0.2};
    const std::vector<double> deltas{1.0, 0.5, 0.25, 0.125, 0.0625};
    const auto dev = ratio_martingale_scaling(params, 0.5, deltas);
    bool ok = std::abs(dev[0] - 1.0 / 99.0) <= 1e-12;
    std::string detail = fmt::format("dev(1) {:.12f} ratios", dev[0]);
    for (std::size_t i = 1; i < dev.size(); ++i) {
        const double r = dev[i - 1] / dev[i];
        ok = ok && r >= 1.7 && r <= 2.3;
        detail += fmt::format(" {:.4f}", r);
    }
    return {ok, detail};
}

Outcome pi_model()
{
    const SingleAssetParams params{0.10, 0.2, 0.05};
    OptionSpec call;
    call.payoff = PayoffKind::CallOnSingle;
    const double sigma_R = 0.2 * 0.05 / 0.10;
    const double bs = oracle::bs_call(100, 100, 0.05, sigma_R, 1.0);
    const auto mc = mc_price_pi(100, params, call, 1'000'000);
    const bool mc_ok = std::abs(mc.value - bs) <= 3 * mc.std_error;
    const auto tree = build_pi_tree(100, params, LatticeConfig::uniform(2000, 1.0, 0.5, false));
    const auto res = price_pi_tree(tree, call);
    const double tree_err = std::abs(res.option_value_root / bs - 1.0);
    bool q_is_p = true;
    for (std::size_t k = 0; k < tree.p.size(); ++k)
        q_is_p = q_is_p && res.q_schedule[k] == tree.p[k];
    return {mc_ok && tree_err <= 0.005 && q_is_p,
            fmt::format("BS {:.6f} mc {:.6f}+-{:.6f} tree(2000) rel err {:.2e} q==p {}", bs,
                        mc.value, mc.std_error, tree_err, q_is_p)};
}

Outcome daily_triple()
{
    const double d = delta_exponent(1.635e-4, 1.935e-2);
    PerpetualSpec spec;
    spec.gamma = -d;
    spec.r_f = Schedule(1.635e-4);
    spec.sigma = Schedule(1.935e-2);
    spec.mu = Schedule(4.38e-4);
    const double mu_tilde = perpetual_dynamics(spec).drift;
    const bool ok = std::abs(d - 0.87332) <= 5e-6 && std::abs(mu_tilde + 7.62e-5) <= 5e-8;
    return {ok, fmt::format("delta {:.10f} (target 0.87332 +- 5e-6, |diff| {:.2e}) mu~ {:.6e}", d,
                            std::abs(d - 0.87332), mu_tilde)};
}

Outcome perpetual_identities()
{
    double worst_rate = 0, worst_res = 0, worst_named = 0;
    for (double g : {-2.0, -0.5, 0.5, 2.0}) {
        PerpetualSpec spec;
        spec.gamma = g;
        spec.r_f = Schedule(0.04);
        spec.sigma = Schedule(0.25);
        spec.mu = Schedule(0.09);
        worst_rate = std::max(worst_rate, std::abs(shadow_rate(perpetual_pair(spec), 0.0) - 0.04));
    }
    for (double g = -3.0; g <= 3.0; g += 0.25)
        for (double r : {0.001, 0.02, 0.1})
            for (double s : {0.05, 0.3, 0.9}) {
                PerpetualSpec spec;
                spec.gamma = g;
                spec.r_f = Schedule(r);
                spec.sigma = Schedule(s);
                spec.mu = Schedule(0.07);
                for (double S : {0.5, 1.0, 3.0}) {
                    const double price = perpetual_price(spec, 1.5, S);
                    worst_res =
                        std::max(worst_res, std::abs(perpetual_pde_residual(spec, 1.5, S)) / price);
                }
            }
    for (double d : {0.1, 0.87332, 2.5, 10.0}) {
        const auto n = named_xi_points(d);
        const double root = std::sqrt(d * d + 4 * d);
        for (double e : {n.gamma_plus - (-d + root) / 2, n.gamma_minus - (-d - root) / 2,
                         xi(n.gamma_plus, d) - n.gamma_plus, xi(n.gamma_minus, d) - n.gamma_minus,
                         xi(n.root_B, d), xi(n.root_G, d), xi(n.C, d) - d, xi(n.E, d) - d,
                         n.D - (1 - d) / 2, xi(n.D, d) - (1 + d) * (1 + d) / 4,
                         n.xi_max - (1 + d) * (1 + d) / 4})
            worst_named = std::max(worst_named, std::abs(e) / std::max(1.0, d));
    }
    const bool ok = worst_rate <= 1e-12 && worst_res <= 1e-10 && worst_named <= 1e-13;
    return {ok, fmt::format("shadow rate {:.1e} residual {:.1e} named points {:.1e}", worst_rate,
                            worst_res, worst_named)};
}

Outcome martingale_suite()
{
    constexpr std::size_t kPaths = 1'000'000;
    auto check = [](std::vector<double> v, double target, std::string &detail, const char *name) {
        const auto e = sample_mean(v);
        detail += fmt::format("{} {:.6f}+-{:.6f} (target {}) ", name, e.value, e.std_error, target);
        return std::abs(e.value - target) <= 3 * e.std_error;
    };
    std::string detail;
    const auto [s, z] = simulate_q_pair(100, 80, DualAssetParams{0.08, 0.2, 0.14, 0.4}, 1.0, 4,
                                        kPaths, 42);
    bool ok = check(ratio_batch(s, z).terminal(), 0.8, detail, "Z/S|Q");

    const SingleAssetParams single{0.10, 0.2, 0.05};
    auto deflated = simulate_p_single(100, single, 1.0, 4, kPaths, 43, true).terminal();
    for (auto &x : deflated)
        x *= std::exp(-0.05);
    ok = check(deflated, 100.0, detail, "S_pi/beta|P") && ok;

    const auto [sq, sp] = simulate_deflated_numeraire_pair(100, single, 1.0, 4, kPaths, 44);
    std::vector<double> ratio(sq.n_paths);
    for (std::size_t i = 0; i < sq.n_paths; ++i)
        ratio[i] = sq.at(i, sq.n_steps) / sp.at(i, sp.n_steps);
    ok = check(ratio, 1.0, detail, "S/S_pi|Q") && ok;
    return {ok, detail};
}

Outcome continuity_in_p()
{
    constexpr int kSteps = 10;
    constexpr double kConst = 100.0;
    const SingleAssetParams params{0.10, 0.2, 0.05};
    OptionSpec call;
    call.payoff = PayoffKind::CallOnSingle;

    struct Point
    {
        double price, spread;
    };
    auto at = [&](double p) {
        const auto tree = build_pi_tree(100, params, LatticeConfig::uniform(kSteps, 1.0, p, true));
        const auto res = price_pi_tree(tree, call);
        const auto &next = res.node_values[1];
        return Point{res.option_value_root, std::abs(next[1] - next[0]) / res.R_schedule[0]};
    };
    auto sweep = [&](double dp, double &worst_ratio) {
        const int m = static_cast<int>(std::lround(0.998 / dp));
        double worst_jump = 0.0;
        Point prev = at(0.001);
        for (int i = 1; i <= m; ++i) {
            const Point cur = at(0.001 + i * dp);
            const double jump = std::abs(cur.price - prev.price);
            worst_jump = std::max(worst_jump, jump);
            worst_ratio = std::max(worst_ratio, jump / (dp * std::max(cur.spread, prev.spread)));
            prev = cur;
        }
        return worst_jump;
    };
    double ratio_coarse = 0, ratio_fine = 0;
    const double jump_coarse = sweep(1e-3, ratio_coarse);
    const double jump_fine = sweep(5e-4, ratio_fine);
    const double shrink = jump_fine / jump_coarse;

    const double growth = std::pow(1.0 + 0.05 / kSteps, kSteps);
    const double limit = 100.0 * (growth - 1.0) / growth;
    const double lo = at(1e-10).price, hi = at(1.0 - 1e-10).price;
    const double lim_err = std::max(std::abs(lo / limit - 1), std::abs(hi / limit - 1));

    const bool ok = std::max(ratio_coarse, ratio_fine) <= kConst && shrink <= 0.6 &&
                    lim_err <= 1e-3;
    return {ok, fmt::format("max jump/(dp*spread) {:.1f} (const {}) jump halving ratio {:.3f} "
                            "limits {:.6f} {:.6f} vs {:.6f}",
                            std::max(ratio_coarse, ratio_fine), kConst, shrink, lo, hi, limit)};
}

} // namespace

int main(int argc, char **argv)
{
    const std::vector<std::function<Outcome()>> criteria = {
        bsm_reduction,     closed_form_vs_quadrature, pde_verification, lattice_exactness,
        lattice_convergence, ratio_martingale,      pi_model,              daily_triple,
        perpetual_identities, martingale_suite,     continuity_in_p};

    std::vector<int> selected;
    if (argc == 3 && std::strcmp(argv[1], "--criterion") == 0) {
        const int n = std::atoi(argv[2]);
        if (n < 1 || n > static_cast<int>(criteria.size())) {
            std::fprintf(stderr, "criterion must be 1..%zu\n", criteria.size());
            return 2;
        }
        selected.push_back(n);
    } else if (argc == 1) {
        for (int i = 1; i <= static_cast<int>(criteria.size()); ++i)
            selected.push_back(i);
    } else {
        std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
        return 2;
    }

    int failed = 0;
    for (int n : selected) {
        Outcome o;
        try {
            o = criteria[static_cast<std::size_t>(n - 1)]();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        fmt::print("criterion {}: {} {}\n", n, o.pass ? "PASS" : "FAIL", o.detail);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
