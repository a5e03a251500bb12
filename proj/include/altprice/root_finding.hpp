#pragma once

#include <cmath>
#include <string>
#include <tuple>
#include <utility>

#include "errors.hpp"

namespace altprice
{

struct ScalarRoot
{
    double x = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

/// Root of an increasing function via a bracket that grows geometrically
/// from [lo, hi], then Newton steps safeguarded by bisection. fdf(x) must
/// return {f(x), f'(x)}.
template <class FdF>
ScalarRoot solve_increasing(const FdF &fdf, double lo, double hi, double x_tol,
                            int max_iterations = 200)
{
    auto [flo, dlo] = fdf(lo);
    auto [fhi, dhi] = fdf(hi);
    int expansions = 0;
    while (flo > 0.0) {
        if (++expansions > 60)
            throw NoRoot("could not bracket root from below");
        const double width = hi - lo;
        hi = lo;
        fhi = flo;
        lo -= 2.0 * width;
        std::tie(flo, dlo) = fdf(lo);
    }
    while (fhi < 0.0) {
        if (++expansions > 60)
            throw NoRoot("could not bracket root from above");
        const double width = hi - lo;
        lo = hi;
        flo = fhi;
        hi += 2.0 * width;
        std::tie(fhi, dhi) = fdf(hi);
    }
    if (flo == 0.0)
        return {lo, 0.0, 0};
    if (fhi == 0.0)
        return {hi, 0.0, 0};

    double x = 0.5 * (lo + hi);
    for (int it = 1; it <= max_iterations; ++it) {
        const auto [fx, dfx] = fdf(x);
        if (fx == 0.0)
            return {x, 0.0, it};
        if (fx < 0.0)
            lo = x;
        else
            hi = x;

        double next = x - fx / dfx;
        if (!(next > lo && next < hi) || !std::isfinite(next))
            next = 0.5 * (lo + hi);
        const double step = std::abs(next - x);
        x = next;
        if (step <= x_tol || hi - lo <= x_tol) {
            return {x, fdf(x).first, it};
        }
    }
    throw ToleranceNotMet("root finder: no convergence within " +
                          std::to_string(max_iterations) + " iterations");
}

} // namespace altprice
