#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "closed_form.hpp"
#include "errors.hpp"
#include "market.hpp"
#include "rng.hpp"

namespace altprice
{

enum class Scheme
{
    ExactLognormal,
    Euler,
};

enum class Measure
{
    P,
    Q,
};

enum class ProcessTag
{
    S,
    Z,
    S_pi,
    Z_hat,
};

/// Simulated prices, row-major [n_paths x (n_steps + 1)], with the settings
/// that reproduce them.
struct PathBatch
{
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::vector<double> times;
    std::vector<double> values;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::ExactLognormal;
    Measure measure = Measure::P;
    ProcessTag process = ProcessTag::S;

    double at(std::size_t path, std::size_t step) const
    {
        return values[path * (n_steps + 1) + step];
    }
    double &at(std::size_t path, std::size_t step) { return values[path * (n_steps + 1) + step]; }

    std::span<const double> path(std::size_t i) const
    {
        return {values.data() + i * (n_steps + 1), n_steps + 1};
    }

    std::vector<double> terminal() const
    {
        std::vector<double> out(n_paths);
        for (std::size_t i = 0; i < n_paths; ++i)
            out[i] = at(i, n_steps);
        return out;
    }
};

struct McEstimate
{
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
};

struct McOptions
{
    std::uint64_t seed = 42;
    bool antithetic = false;
    std::size_t batch_size = 1u << 14; // fixed partition; results do not depend on threads
    unsigned threads = 0;              // 0 = hardware concurrency
};

namespace detail
{

// Running mean / M2 (Welford), merged with Chan's pairwise update.
struct Moments
{
    std::size_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x)
    {
        ++count;
        const double d = x - mean;
        mean += d / static_cast<double>(count);
        m2 += d * (x - mean);
    }

    void merge(const Moments &o)
    {
        if (o.count == 0)
            return;
        if (count == 0) {
            *this = o;
            return;
        }
        const double n = static_cast<double>(count + o.count);
        const double d = o.mean - mean;
        mean += d * static_cast<double>(o.count) / n;
        m2 += o.m2 + d * d * static_cast<double>(count) * static_cast<double>(o.count) / n;
        count += o.count;
    }

    McEstimate estimate() const
    {
        McEstimate e;
        e.value = mean;
        e.n_paths = count;
        e.std_error = count > 1 ? std::sqrt(m2 / static_cast<double>(count - 1) /
                                            static_cast<double>(count))
                                : 0.0;
        return e;
    }
};

/// Splits [0, n_paths) into fixed batches; batch b draws from sub-stream b of
/// the seed. body(first, count, rng) -> Moments. Merge order is fixed.
template <class Body>
Moments run_batches(std::size_t n_paths, const McOptions &opts, const Body &body)
{
    if (n_paths == 0)
        throw std::invalid_argument("need at least one path");
    const std::size_t bs = std::max<std::size_t>(1, opts.batch_size);
    const std::size_t nb = (n_paths + bs - 1) / bs;
    std::vector<Moments> parts(nb);
    unsigned threads = opts.threads ? opts.threads : std::thread::hardware_concurrency();
    threads = static_cast<unsigned>(std::clamp<std::size_t>(threads, 1, nb));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= nb)
                return;
            Xoshiro256 rng = Xoshiro256::stream(opts.seed, b);
            const std::size_t first = b * bs;
            parts[b] = body(first, std::min(bs, n_paths - first), rng);
        }
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned i = 1; i < threads; ++i)
            pool.emplace_back(worker);
        worker();
    }
    Moments total;
    for (const auto &m : parts)
        total.merge(m);
    return total;
}

/// A sub-interval of constant coefficients; `step` >= 0 marks that the
/// interval ends on grid point step.
struct Segment
{
    double a, b;
    long step;
};

inline std::vector<Segment> segment_grid(double t0, double t1, std::size_t n_steps,
                                         std::initializer_list<const Schedule *> schedules)
{
    std::vector<Segment> out;
    const double h = (t1 - t0) / static_cast<double>(n_steps);
    double a = t0;
    for (std::size_t k = 1; k <= n_steps; ++k) {
        const double b = k == n_steps ? t1 : t0 + h * static_cast<double>(k);
        for (double cut : merged_breakpoints(a, b, schedules)) {
            out.push_back({a, cut, -1});
            a = cut;
        }
        out.push_back({a, b, static_cast<long>(k)});
        a = b;
    }
    return out;
}

inline std::vector<double> grid_times(double t0, double t1, std::size_t n_steps)
{
    std::vector<double> times(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k)
        times[k] = k == n_steps ? t1 : t0 + (t1 - t0) * static_cast<double>(k) / n_steps;
    return times;
}

inline void require_vol_spread(const DualAssetParams &params, const std::vector<Segment> &segs)
{
    for (const auto &s : segs)
        (void)shadow_rate(params, s.a);
}

inline double deflated_vol(const SingleAssetParams &params, double t)
{
    const double mu = params.mu.value_at(t);
    if (mu == 0.0)
        throw ZeroDrift("zero drift at t = " + std::to_string(t) +
                        ": cumulative-return deflator undefined");
    return params.r_f.value_at(t) / mu * params.sigma.value_at(t);
}

} // namespace detail

/// Sample mean with standard error.
inline McEstimate sample_mean(std::span<const double> xs)
{
    detail::Moments m;
    for (double x : xs)
        m.add(x);
    return m.estimate();
}

/// S and Z under the S-numeraire measure, driven by one Brownian path:
///   d ln S = (r_bar + sigma^2/2) dt + sigma dW,
///   d ln Z = (r_bar + sigma sigma~ - sigma~^2/2) dt + sigma~ dW.
inline std::pair<PathBatch, PathBatch>
simulate_q_pair(double S0, double Z0, const DualAssetParams &params, double T,
                std::size_t n_steps, std::size_t n_paths, std::uint64_t seed,
                Scheme scheme = Scheme::ExactLognormal)
{
    params.validate();
    const auto segs = detail::segment_grid(0.0, T, n_steps,
                                           {&params.mu, &params.sigma, &params.mu_tilde,
                                            &params.sigma_tilde});
    detail::require_vol_spread(params, segs);

    PathBatch s, z;
    for (PathBatch *b : {&s, &z}) {
        b->n_paths = n_paths;
        b->n_steps = n_steps;
        b->times = detail::grid_times(0.0, T, n_steps);
        b->values.assign(n_paths * (n_steps + 1), 0.0);
        b->seed = seed;
        b->scheme = scheme;
        b->measure = Measure::Q;
    }
    s.process = ProcessTag::S;
    z.process = ProcessTag::Z;

    McOptions opts;
    opts.seed = seed;
    detail::run_batches(n_paths, opts, [&](std::size_t first, std::size_t count, Xoshiro256 &rng) {
        for (std::size_t i = first; i < first + count; ++i) {
            double ls = std::log(S0), lz = std::log(Z0);
            double ps = S0, pz = Z0;
            s.at(i, 0) = S0;
            z.at(i, 0) = Z0;
            for (const auto &seg : segs) {
                const double dt = seg.b - seg.a;
                const double r = shadow_rate(params, seg.a);
                const double sg = params.sigma.value_at(seg.a);
                const double st = params.sigma_tilde.value_at(seg.a);
                const double dw = std::sqrt(dt) * rng.normal();
                if (scheme == Scheme::ExactLognormal) {
                    ls += (r + 0.5 * sg * sg) * dt + sg * dw;
                    lz += (r + sg * st - 0.5 * st * st) * dt + st * dw;
                    ps = std::exp(ls);
                    pz = std::exp(lz);
                } else {
                    ps *= 1.0 + (r + sg * sg) * dt + sg * dw;
                    pz *= 1.0 + (r + sg * st) * dt + st * dw;
                }
                if (seg.step >= 0) {
                    s.at(i, static_cast<std::size_t>(seg.step)) = ps;
                    z.at(i, static_cast<std::size_t>(seg.step)) = pz;
                }
            }
        }
        return detail::Moments{};
    });
    return {std::move(s), std::move(z)};
}

/// Elementwise Z/S of a simulated pair.
inline PathBatch ratio_batch(const PathBatch &s, const PathBatch &z)
{
    if (s.values.size() != z.values.size())
        throw std::invalid_argument("ratio of mismatched batches");
    PathBatch r = z;
    r.process = ProcessTag::Z_hat;
    for (std::size_t i = 0; i < r.values.size(); ++i)
        r.values[i] = z.values[i] / s.values[i];
    return r;
}

/// Call on the two-asset portfolio as E^Q[(S_t/S_T) payoff(S_T, Z_T)] with
/// S as numeraire. Schedules are integrated exactly segment by segment.
inline McEstimate mc_price_lr(double S0, double Z0, const DualAssetParams &params,
                              const OptionSpec &spec, std::size_t n_paths,
                              const McOptions &opts = {}, double t = 0.0)
{
    params.validate();
    spec.validate();
    const auto segs = detail::segment_grid(t, spec.maturity, 1,
                                           {&params.mu, &params.sigma, &params.mu_tilde,
                                            &params.sigma_tilde});
    detail::require_vol_spread(params, segs);
    struct Coef
    {
        double drift_s, drift_z, sd, sg, st;
    };
    std::vector<Coef> coefs;
    for (const auto &seg : segs) {
        const double dt = seg.b - seg.a;
        const double r = shadow_rate(params, seg.a);
        const double sg = params.sigma.value_at(seg.a);
        const double st = params.sigma_tilde.value_at(seg.a);
        coefs.push_back({(r + 0.5 * sg * sg) * dt, (r + sg * st - 0.5 * st * st) * dt,
                         std::sqrt(dt), sg, st});
    }

    auto sample = [&](Xoshiro256 &rng, std::vector<double> &normals) {
        for (auto &x : normals)
            x = rng.normal();
    };
    auto payoff = [&](const std::vector<double> &normals, double sign) {
        double ls = 0.0, lz = 0.0;
        for (std::size_t j = 0; j < coefs.size(); ++j) {
            const double dw = sign * coefs[j].sd * normals[j];
            ls += coefs[j].drift_s + coefs[j].sg * dw;
            lz += coefs[j].drift_z + coefs[j].st * dw;
        }
        const double sT = S0 * std::exp(ls);
        const double zT = Z0 * std::exp(lz);
        return S0 / sT * spec.terminal(sT, zT);
    };

    const auto m = detail::run_batches(n_paths, opts, [&](std::size_t, std::size_t count,
                                                           Xoshiro256 &rng) {
        detail::Moments acc;
        std::vector<double> normals(coefs.size());
        for (std::size_t i = 0; i < count; ++i) {
            sample(rng, normals);
            double v = payoff(normals, 1.0);
            if (opts.antithetic)
                v = 0.5 * (v + payoff(normals, -1.0));
            acc.add(v);
        }
        return acc;
    });
    return m.estimate();
}

/// Single stock under the natural measure. Plain: drift mu, volatility
/// sigma. Deflated cumulative return: drift r_f, volatility
/// sigma_R = (r_f / mu) sigma.
inline PathBatch simulate_p_single(double S0, const SingleAssetParams &params, double T,
                                   std::size_t n_steps, std::size_t n_paths, std::uint64_t seed,
                                   bool deflated, Scheme scheme = Scheme::ExactLognormal)
{
    params.validate();
    const auto segs =
        detail::segment_grid(0.0, T, n_steps, {&params.mu, &params.sigma, &params.r_f});
    if (deflated) {
        for (const auto &seg : segs)
            (void)detail::deflated_vol(params, seg.a);
    }
    PathBatch out;
    out.n_paths = n_paths;
    out.n_steps = n_steps;
    out.times = detail::grid_times(0.0, T, n_steps);
    out.values.assign(n_paths * (n_steps + 1), 0.0);
    out.seed = seed;
    out.scheme = scheme;
    out.measure = Measure::P;
    out.process = deflated ? ProcessTag::S_pi : ProcessTag::S;

    McOptions opts;
    opts.seed = seed;
    detail::run_batches(n_paths, opts, [&](std::size_t first, std::size_t count, Xoshiro256 &rng) {
        for (std::size_t i = first; i < first + count; ++i) {
            double ls = std::log(S0), ps = S0;
            out.at(i, 0) = S0;
            for (const auto &seg : segs) {
                const double dt = seg.b - seg.a;
                const double drift = deflated ? params.r_f.value_at(seg.a) : params.mu.value_at(seg.a);
                const double vol = deflated ? detail::deflated_vol(params, seg.a)
                                            : params.sigma.value_at(seg.a);
                const double dw = std::sqrt(dt) * rng.normal();
                if (scheme == Scheme::ExactLognormal) {
                    ls += (drift - 0.5 * vol * vol) * dt + vol * dw;
                    ps = std::exp(ls);
                } else {
                    ps *= 1.0 + drift * dt + vol * dw;
                }
                if (seg.step >= 0)
                    out.at(i, static_cast<std::size_t>(seg.step)) = ps;
            }
        }
        return detail::Moments{};
    });
    return out;
}

/// Price as E[exp(-int r_f) g(S^pi_T)] under the natural measure; no change
/// of measure is involved.
inline McEstimate mc_price_pi(double S0, const SingleAssetParams &params, const OptionSpec &spec,
                              std::size_t n_paths, const McOptions &opts = {})
{
    params.validate();
    spec.validate();
    const auto segs =
        detail::segment_grid(0.0, spec.maturity, 1, {&params.mu, &params.sigma, &params.r_f});
    double drift = 0.0, variance = 0.0;
    for (const auto &seg : segs) {
        const double dt = seg.b - seg.a;
        const double vol = detail::deflated_vol(params, seg.a);
        drift += (params.r_f.value_at(seg.a) - 0.5 * vol * vol) * dt;
        variance += vol * vol * dt;
    }
    // Piecewise-constant coefficients: the log-price is Gaussian, one draw.
    const double sd = std::sqrt(variance);
    const double discount = std::exp(-params.r_f.integrate(0.0, spec.maturity));
    auto value = [&](double z) { return discount * spec.terminal(S0 * std::exp(drift + sd * z)); };

    const auto m = detail::run_batches(n_paths, opts, [&](std::size_t, std::size_t count,
                                                           Xoshiro256 &rng) {
        detail::Moments acc;
        for (std::size_t i = 0; i < count; ++i) {
            const double z = rng.normal();
            acc.add(opts.antithetic ? 0.5 * (value(z) + value(-z)) : value(z));
        }
        return acc;
    });
    return m.estimate();
}

/// Price with the deflated-return asset S^pi as numeraire:
///   E^Q[exp(-int sigma_R^2/2 - int sigma_R dW) g(S_t exp(int (sigma_R sigma -
///   sigma^2/2) + int sigma dW))].
inline McEstimate mc_price_deflated_numeraire(double S0, const SingleAssetParams &params,
                                              const OptionSpec &spec, std::size_t n_paths,
                                              const McOptions &opts = {}, double t = 0.0,
                                              double spread_epsilon = kDefaultSpreadEpsilon)
{
    params.validate();
    spec.validate();
    const auto segs =
        detail::segment_grid(t, spec.maturity, 1, {&params.mu, &params.sigma, &params.r_f});
    struct Coef
    {
        double sd, a, s, dt;
    };
    std::vector<Coef> coefs;
    for (const auto &seg : segs) {
        const double a = detail::deflated_vol(params, seg.a);
        const double s = params.sigma.value_at(seg.a);
        if (!(std::abs(a - s) >= spread_epsilon))
            throw DegenerateVolatilitySpread(
                "sigma_R equals sigma: deflated asset cannot serve as a distinct numeraire");
        const double dt = seg.b - seg.a;
        coefs.push_back({std::sqrt(dt), a, s, dt});
    }
    auto value = [&](const std::vector<double> &normals, double sign) {
        double lw = 0.0, ls = 0.0;
        for (std::size_t j = 0; j < coefs.size(); ++j) {
            const auto &c = coefs[j];
            const double dw = sign * c.sd * normals[j];
            lw += -0.5 * c.a * c.a * c.dt - c.a * dw;
            ls += (c.a * c.s - 0.5 * c.s * c.s) * c.dt + c.s * dw;
        }
        return std::exp(lw) * spec.terminal(S0 * std::exp(ls));
    };
    const auto m = detail::run_batches(n_paths, opts, [&](std::size_t, std::size_t count,
                                                           Xoshiro256 &rng) {
        detail::Moments acc;
        std::vector<double> normals(coefs.size());
        for (std::size_t i = 0; i < count; ++i) {
            for (auto &x : normals)
                x = rng.normal();
            double v = value(normals, 1.0);
            if (opts.antithetic)
                v = 0.5 * (v + value(normals, -1.0));
            acc.add(v);
        }
        return acc;
    });
    return m.estimate();
}

/// S and S^pi under the measure making S/S^pi a martingale:
///   dS = S (sigma sigma_R dt + sigma dW),  dS^pi = S^pi (sigma_R^2 dt + sigma_R dW).
inline std::pair<PathBatch, PathBatch>
simulate_deflated_numeraire_pair(double S0, const SingleAssetParams &params, double T,
                                 std::size_t n_steps, std::size_t n_paths, std::uint64_t seed)
{
    params.validate();
    const auto segs =
        detail::segment_grid(0.0, T, n_steps, {&params.mu, &params.sigma, &params.r_f});
    PathBatch s, sp;
    for (PathBatch *b : {&s, &sp}) {
        b->n_paths = n_paths;
        b->n_steps = n_steps;
        b->times = detail::grid_times(0.0, T, n_steps);
        b->values.assign(n_paths * (n_steps + 1), 0.0);
        b->seed = seed;
        b->measure = Measure::Q;
    }
    s.process = ProcessTag::S;
    sp.process = ProcessTag::S_pi;
    McOptions opts;
    opts.seed = seed;
    detail::run_batches(n_paths, opts, [&](std::size_t first, std::size_t count, Xoshiro256 &rng) {
        for (std::size_t i = first; i < first + count; ++i) {
            double ls = std::log(S0), lp = std::log(S0);
            s.at(i, 0) = S0;
            sp.at(i, 0) = S0;
            for (const auto &seg : segs) {
                const double dt = seg.b - seg.a;
                const double a = detail::deflated_vol(params, seg.a);
                const double sg = params.sigma.value_at(seg.a);
                const double dw = std::sqrt(dt) * rng.normal();
                ls += (sg * a - 0.5 * sg * sg) * dt + sg * dw;
                lp += 0.5 * a * a * dt + a * dw;
                if (seg.step >= 0) {
                    s.at(i, static_cast<std::size_t>(seg.step)) = std::exp(ls);
                    sp.at(i, static_cast<std::size_t>(seg.step)) = std::exp(lp);
                }
            }
        }
        return detail::Moments{};
    });
    return {std::move(s), std::move(sp)};
}

struct BsmVsPiReport
{
    double bsm_price;   // rate r_f, volatility sigma
    double pi_price;    // rate r_f, volatility sigma_R
    double sigma;
    double sigma_R;
    double difference;  // pi_price - bsm_price
};

/// Black-Scholes on the stock next to Black-Scholes on the deflated-return
/// asset. Reported side by side; the two differ whenever r_f != mu.
inline BsmVsPiReport compare_bsm_vs_pi(double S0, const SingleAssetParams &params,
                                       const OptionSpec &spec)
{
    if (!params.is_constant())
        throw std::invalid_argument("comparison needs constant coefficients");
    spec.validate();
    const double r = params.r_f.value_at(0.0);
    const double sigma = params.sigma.value_at(0.0);
    const double sigma_r = detail::deflated_vol(params, 0.0);
    BsmVsPiReport rep{};
    rep.sigma = sigma;
    rep.sigma_R = sigma_r;
    rep.bsm_price = black_scholes_call(S0, spec.strike, r, sigma, spec.maturity);
    rep.pi_price = black_scholes_call(S0, spec.strike, r, sigma_r, spec.maturity);
    rep.difference = rep.pi_price - rep.bsm_price;
    return rep;
}

} // namespace altprice
