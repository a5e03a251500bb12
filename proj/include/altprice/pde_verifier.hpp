#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "closed_form.hpp"
#include "errors.hpp"
#include "normal.hpp"
#include "rng.hpp"

namespace altprice
{

/// Terms of the strike equation rewritten as F1 + F2 = F3, normalised by
/// D = w*F1 + w~*F2, plus the density-weighted terms G1..G3 of the price.
struct StrikeFrame
{
    double F1, F2, F3;
    double D;
    double F1_hat, F2_hat;
    double G1, G2, G3;

    double G() const { return G1 + G2 + G3; }
};

/// Partials of d = -y* and of the call price, each scaled by the matching
/// powers of S and Z (S*d_S, S^2*d_SS, S*Z*C_SZ, ...).
struct PartialSet
{
    double d_t = 0, S_dS = 0, Z_dZ = 0, S2_dSS = 0, SZ_dSZ = 0, Z2_dZZ = 0;
    double C_t = 0, S_CS = 0, Z_CZ = 0, S2_CSS = 0, SZ_CSZ = 0, Z2_CZZ = 0;
};

inline constexpr double kMaturityEpsilon = 1e-12;

inline StrikeFrame strike_frame(const LrClosedFormInputs &in, const RootResult &root)
{
    const LrTerms k = lr_terms(in);
    const double d = root.d;
    const double disc_k = in.spec.strike * std::exp(-k.m);
    StrikeFrame f{};
    f.F1 = k.eta * in.S;
    f.F2 = (1.0 - k.eta) * in.Z * std::exp(-0.5 * k.dw * k.dw + k.dw * d);
    f.F3 = disc_k * std::exp(-0.5 * k.w * k.w + k.w * d);
    f.D = k.w * f.F1 + k.w_tilde * f.F2;
    f.F1_hat = f.F1 / f.D;
    f.F2_hat = f.F2 / f.D;
    f.G1 = k.eta * in.S * normal_pdf(d);
    // Z factor included: G2 is the coefficient of d-derivatives in C.
    f.G2 = (1.0 - k.eta) * in.Z * normal_pdf(d - k.dw);
    f.G3 = -disc_k * normal_pdf(d - k.w);
    return f;
}

inline PartialSet analytic_partials(const LrClosedFormInputs &in, const RootResult &root,
                                    const StrikeFrame &f)
{
    const LrTerms k = lr_terms(in);
    if (!(k.tau > kMaturityEpsilon))
        throw MaturityDegenerate("time to maturity too small for analytic partials");
    const double d = root.d;
    const double tau2 = 2.0 * k.tau;
    const double f1 = f.F1_hat;
    const double f2 = f.F2_hat;
    const double f12 = f1 + f2;
    const double w = k.w, wt = k.w_tilde, dw = k.dw;

    PartialSet p;
    p.d_t = -k.rbar * f12 + (d - w) / tau2 - dw * wt * f2 / tau2;
    p.S_dS = f1;
    p.Z_dZ = f2;
    p.S2_dSS = f1 * f1 * (dw * dw * f2 - w * w * f12);
    p.SZ_dSZ = -w * wt * f1 * f2 * f12;
    p.Z2_dZZ = f2 * f2 * (dw * dw * f1 - wt * wt * f12);

    const double G = f.G();
    const double disc_k = in.spec.strike * std::exp(-k.m);
    const double curv = dw * f.G2 + w * f.G3 - d * G;
    p.C_t = -disc_k * normal_cdf(d - w) * k.rbar + G * p.d_t + (dw * f.G2 + w * f.G3) / tau2;
    p.S_CS = k.eta * in.S * normal_cdf(d) + G * p.S_dS;
    p.Z_CZ = (1.0 - k.eta) * in.Z * normal_cdf(d - dw) + G * p.Z_dZ;
    p.S2_CSS = G * p.S2_dSS + curv * p.S_dS * p.S_dS + 2.0 * f.G1 * p.S_dS;
    p.SZ_CSZ = G * p.SZ_dSZ + curv * p.S_dS * p.Z_dZ + f.G1 * p.Z_dZ + f.G2 * p.S_dS;
    p.Z2_CZZ = G * p.Z2_dZZ + curv * p.Z_dZ * p.Z_dZ + 2.0 * f.G2 * p.Z_dZ;
    return p;
}

/// r*C - C_t - r*(S C_S + Z C_Z) - (sigma^2 S^2 C_SS + 2 sigma sigma~ S Z C_SZ
/// + sigma~^2 Z^2 C_ZZ)/2 for supplied partials.
inline double lr_pde_residual(const LrTerms &k, double price, const PartialSet &p)
{
    const double s = k.sigma, st = k.sigma_tilde;
    return k.rbar * price - p.C_t - k.rbar * (p.S_CS + p.Z_CZ) -
           0.5 * (s * s * p.S2_CSS + 2.0 * s * st * p.SZ_CSZ + st * st * p.Z2_CZZ);
}

/// Residual of the two-asset pricing PDE at the closed-form price, using
/// analytic partials.
inline double lr_pde_residual(const LrClosedFormInputs &in)
{
    const RootResult root = solve_y_star(in);
    const StrikeFrame f = strike_frame(in, root);
    return lr_pde_residual(lr_terms(in), lr_call_price(in, root), analytic_partials(in, root, f));
}

struct FiniteDifferenceSteps
{
    double first_order = 1e-5;  // relative to S, Z and tau
    double second_order = 1e-4; // larger step keeps round-off out of 2nd differences
};

/// Central-difference counterparts of analytic_partials, from re-solving
/// the strike equation and re-pricing at bumped (t, S, Z).
inline PartialSet finite_difference_partials(const LrClosedFormInputs &in,
                                             const FiniteDifferenceSteps &steps = {})
{
    const double tau = in.spec.maturity - in.t;
    const double ht = steps.first_order * tau;
    if (!(tau > 2.0 * ht) || !(ht > 0.0))
        throw MaturityDegenerate("time to maturity too small for finite differences");

    struct Eval
    {
        double d, c;
    };
    auto eval = [&](double t, double s, double z) {
        LrClosedFormInputs x = in;
        x.t = t;
        x.S = s;
        x.Z = z;
        const RootResult r = solve_y_star(x);
        return Eval{r.d, lr_call_price(x, r)};
    };

    const double S = in.S, Z = in.Z, t = in.t;
    const Eval c0 = eval(t, S, Z);
    PartialSet p;

    {
        const Eval up = eval(t + ht, S, Z), dn = eval(t - ht, S, Z);
        p.d_t = (up.d - dn.d) / (2.0 * ht);
        p.C_t = (up.c - dn.c) / (2.0 * ht);
    }
    {
        const double h = steps.first_order * S;
        const Eval up = eval(t, S + h, Z), dn = eval(t, S - h, Z);
        p.S_dS = S * (up.d - dn.d) / (2.0 * h);
        p.S_CS = S * (up.c - dn.c) / (2.0 * h);
    }
    {
        const double h = steps.first_order * Z;
        const Eval up = eval(t, S, Z + h), dn = eval(t, S, Z - h);
        p.Z_dZ = Z * (up.d - dn.d) / (2.0 * h);
        p.Z_CZ = Z * (up.c - dn.c) / (2.0 * h);
    }
    const double hs = steps.second_order * S;
    const double hz = steps.second_order * Z;
    {
        const Eval up = eval(t, S + hs, Z), dn = eval(t, S - hs, Z);
        p.S2_dSS = S * S * (up.d - 2.0 * c0.d + dn.d) / (hs * hs);
        p.S2_CSS = S * S * (up.c - 2.0 * c0.c + dn.c) / (hs * hs);
    }
    {
        const Eval up = eval(t, S, Z + hz), dn = eval(t, S, Z - hz);
        p.Z2_dZZ = Z * Z * (up.d - 2.0 * c0.d + dn.d) / (hz * hz);
        p.Z2_CZZ = Z * Z * (up.c - 2.0 * c0.c + dn.c) / (hz * hz);
    }
    {
        const Eval pp = eval(t, S + hs, Z + hz), pm = eval(t, S + hs, Z - hz);
        const Eval mp = eval(t, S - hs, Z + hz), mm = eval(t, S - hs, Z - hz);
        const double scale = S * Z / (4.0 * hs * hz);
        p.SZ_dSZ = scale * (pp.d - pm.d - mp.d + mm.d);
        p.SZ_CSZ = scale * (pp.c - pm.c - mp.c + mm.c);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Randomised verification over many instances.

struct VerificationRecord
{
    LrClosedFormInputs instance;
    double price = 0;
    double residual = 0;          // analytic partials
    double residual_bound = 0;    // tolerance * max(1, price)
    double fd_residual = 0;       // same PDE with finite-difference partials
    double split_error = 0;          // |F1 + F2 - F3| / F3
    double weight_error = 0;         // |w F1^ + w~ F2^ - 1|
    double g_sum_error = 0;       // |G1 + G2 + G3| / (|G1| + |G2| + |G3|)
    double curvature_error = 0;
    double gradient_norm_error = 0;
    double fd_first_order = 0;    // worst scaled difference, first-order partials
    double fd_second_order = 0;   // worst scaled difference, second-order partials
    std::string worst_first_name;
    std::string worst_second_name;
};

struct VerificationTolerances
{
    double residual = 1e-8; // relative to max(1, C)
    double identity = 1e-10;
    double fd_first_order = 1e-5;
    double fd_second_order = 1e-3;
};

struct VerificationSummary
{
    std::vector<VerificationRecord> records;
    double worst_residual_ratio = 0; // |residual| / bound
    double worst_split = 0, worst_weight = 0, worst_g_sum = 0, worst_gradient_norm = 0;
    double worst_fd_first = 0, worst_fd_second = 0;
    std::vector<std::string> failures;

    bool passed() const { return failures.empty(); }
};

/// Hook for negative controls: mutates the analytic partials before they
/// are checked. Leave empty in normal use.
using PartialsFault = void (*)(PartialSet &);

// Difference scaled by the larger of |analytic| and 1 (price units).
inline double scaled_difference(double analytic, double numeric)
{
    return std::abs(analytic - numeric) / std::max(std::abs(analytic), 1.0);
}

inline VerificationRecord verify_instance(const LrClosedFormInputs &in,
                                          const VerificationTolerances &tol = {},
                                          PartialsFault fault = nullptr)
{
    VerificationRecord rec;
    rec.instance = in;
    const LrTerms k = lr_terms(in);
    const RootResult root = solve_y_star(in);
    const StrikeFrame f = strike_frame(in, root);
    PartialSet an = analytic_partials(in, root, f);
    if (fault)
        fault(an);
    const PartialSet fd = finite_difference_partials(in);

    rec.price = lr_call_price(in, root);
    rec.residual = lr_pde_residual(k, rec.price, an);
    rec.residual_bound = tol.residual * std::max(1.0, rec.price);
    rec.fd_residual = lr_pde_residual(k, rec.price, fd);

    rec.split_error = std::abs(f.F1 + f.F2 - f.F3) / f.F3;
    rec.weight_error = std::abs(k.w * f.F1_hat + k.w_tilde * f.F2_hat - 1.0);
    const double g_abs = std::abs(f.G1) + std::abs(f.G2) + std::abs(f.G3);
    rec.g_sum_error = g_abs > 0.0 ? std::abs(f.G()) / g_abs : 0.0;

    const double w = k.w, wt = k.w_tilde;
    const double curv_lhs = w * w * an.S2_dSS + 2.0 * w * wt * an.SZ_dSZ + wt * wt * an.Z2_dZZ;
    const double curv_rhs = -(w * w * f.F1_hat + wt * wt * f.F2_hat);
    rec.curvature_error = std::abs(curv_lhs - curv_rhs) / std::max(std::abs(curv_rhs), 1.0);
    const double grad_norm = w * w * an.S_dS * an.S_dS + 2.0 * w * wt * an.S_dS * an.Z_dZ +
                              wt * wt * an.Z_dZ * an.Z_dZ;
    rec.gradient_norm_error = std::abs(grad_norm - 1.0);

    const std::pair<const char *, double PartialSet::*> first[] = {
        {"C_t", &PartialSet::C_t},   {"S_CS", &PartialSet::S_CS}, {"Z_CZ", &PartialSet::Z_CZ},
        {"d_t", &PartialSet::d_t},   {"S_dS", &PartialSet::S_dS}, {"Z_dZ", &PartialSet::Z_dZ}};
    const std::pair<const char *, double PartialSet::*> second[] = {
        {"S2_CSS", &PartialSet::S2_CSS}, {"SZ_CSZ", &PartialSet::SZ_CSZ},
        {"Z2_CZZ", &PartialSet::Z2_CZZ}, {"S2_dSS", &PartialSet::S2_dSS},
        {"SZ_dSZ", &PartialSet::SZ_dSZ}, {"Z2_dZZ", &PartialSet::Z2_dZZ}};
    for (const auto &[name, field] : first) {
        const double e = scaled_difference(an.*field, fd.*field);
        if (e >= rec.fd_first_order) {
            rec.fd_first_order = e;
            rec.worst_first_name = name;
        }
    }
    for (const auto &[name, field] : second) {
        const double e = scaled_difference(an.*field, fd.*field);
        if (e >= rec.fd_second_order) {
            rec.fd_second_order = e;
            rec.worst_second_name = name;
        }
    }
    return rec;
}

struct GridRanges
{
    double sigma_lo = 0.05, sigma_hi = 0.8;
    double min_spread = 0.05;
    double moneyness_lo = 0.5, moneyness_hi = 2.0;
    double tau_lo = 0.05, tau_hi = 5.0;
    double rate_lo = 0.0, rate_hi = 0.10;
    double strike = 100.0;
};

/// Random instances over the verification box; eta in [0, 1], shadow rate
/// drawn directly.
inline std::vector<LrClosedFormInputs> random_verification_grid(std::size_t count,
                                                                std::uint64_t seed,
                                                                const GridRanges &g = {})
{
    Xoshiro256 rng(seed);
    auto draw = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
    std::vector<LrClosedFormInputs> grid;
    grid.reserve(count);
    while (grid.size() < count) {
        const double s = draw(g.sigma_lo, g.sigma_hi);
        const double st = draw(g.sigma_lo, g.sigma_hi);
        if (std::abs(st - s) < g.min_spread)
            continue;
        LrClosedFormInputs in;
        in.params = DualAssetParams::from_shadow_rate(draw(g.rate_lo, g.rate_hi), s, st);
        in.spec.eta = draw(0.0, 1.0);
        in.spec.strike = g.strike;
        in.S = g.strike * draw(g.moneyness_lo, g.moneyness_hi);
        in.Z = g.strike * draw(g.moneyness_lo, g.moneyness_hi);
        in.spec.maturity = draw(g.tau_lo, g.tau_hi);
        in.t = 0.0;
        grid.push_back(in);
    }
    return grid;
}

inline VerificationSummary run_verification(const std::vector<LrClosedFormInputs> &grid,
                                            const VerificationTolerances &tol = {},
                                            PartialsFault fault = nullptr)
{
    VerificationSummary sum;
    for (const auto &in : grid) {
        VerificationRecord rec = verify_instance(in, tol, fault);
        const std::size_t index = sum.records.size();
        auto fail = [&](const std::string &what, double value) {
            sum.failures.push_back("instance " + std::to_string(index) + ": " + what + " = " +
                                   std::to_string(value));
        };
        const double ratio = std::abs(rec.residual) / rec.residual_bound;
        sum.worst_residual_ratio = std::max(sum.worst_residual_ratio, ratio);
        sum.worst_split = std::max(sum.worst_split, rec.split_error);
        sum.worst_weight = std::max(sum.worst_weight, rec.weight_error);
        sum.worst_g_sum = std::max(sum.worst_g_sum, rec.g_sum_error);
        sum.worst_gradient_norm = std::max(sum.worst_gradient_norm, rec.gradient_norm_error);
        sum.worst_fd_first = std::max(sum.worst_fd_first, rec.fd_first_order);
        sum.worst_fd_second = std::max(sum.worst_fd_second, rec.fd_second_order);
        if (!(ratio <= 1.0))
            fail("pde_residual", rec.residual);
        if (!(rec.split_error <= tol.identity))
            fail("identity_split", rec.split_error);
        if (!(rec.weight_error <= tol.identity))
            fail("identity_weight", rec.weight_error);
        if (!(rec.g_sum_error <= tol.identity))
            fail("identity_g_sum", rec.g_sum_error);
        if (!(rec.fd_first_order <= tol.fd_first_order))
            fail("fd_first_order[" + rec.worst_first_name + "]", rec.fd_first_order);
        if (!(rec.fd_second_order <= tol.fd_second_order))
            fail("fd_second_order[" + rec.worst_second_name + "]", rec.fd_second_order);
        sum.records.push_back(std::move(rec));
    }
    return sum;
}

} // namespace altprice
