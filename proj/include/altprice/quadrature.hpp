#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "errors.hpp"

namespace altprice
{

struct QuadratureResult
{
    double value = 0.0;
    double error_estimate = 0.0;
    int intervals = 0;
};

namespace detail
{
struct GkPanel
{
    double a, b, value, error;
    bool operator<(const GkPanel &o) const { return error < o.error; }
};

// 7-point Gauss / 15-point Kronrod pair (QUADPACK qk15 nodes and weights).
template <class Func>
GkPanel gauss_kronrod15(const Func &f, double a, double b)
{
    static constexpr double xgk[8] = {
        0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
    static constexpr double wgk[8] = {
        0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    static constexpr double wg[4] = {
        0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
        0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * wgk[7];
    double gauss = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * xgk[j];
        const double sum = f(center - dx) + f(center + dx);
        kronrod += wgk[j] * sum;
        if (j % 2 == 1)
            gauss += wg[j / 2] * sum;
    }
    return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}
} // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over [a, b]. Optional
/// interior break points (e.g. peaks of the integrand) seed the first
/// partition. Throws QuadratureBudgetExceeded when max_intervals panels
/// cannot reach abs_tol.
template <class Func>
QuadratureResult integrate_adaptive(const Func &f, double a, double b, double abs_tol,
                                    std::vector<double> break_points = {},
                                    int max_intervals = 2000)
{
    if (a == b)
        return {};
    const double sign = b < a ? -1.0 : 1.0;
    if (b < a)
        std::swap(a, b);

    std::vector<double> cuts{a};
    std::sort(break_points.begin(), break_points.end());
    for (double x : break_points) {
        if (x > cuts.back() && x < b)
            cuts.push_back(x);
    }
    cuts.push_back(b);

    std::priority_queue<detail::GkPanel> panels;
    double total = 0.0;
    double error = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto p = detail::gauss_kronrod15(f, cuts[i], cuts[i + 1]);
        total += p.value;
        error += p.error;
        panels.push(p);
    }

    while (error > abs_tol) {
        if (static_cast<int>(panels.size()) >= max_intervals) {
            throw QuadratureBudgetExceeded("adaptive quadrature: error estimate " +
                                           std::to_string(error) + " above tolerance after " +
                                           std::to_string(panels.size()) + " panels");
        }
        const auto worst = panels.top();
        panels.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const auto left = detail::gauss_kronrod15(f, worst.a, mid);
        const auto right = detail::gauss_kronrod15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        panels.push(left);
        panels.push(right);
    }

    // Re-sum to drop the drift accumulated by the running updates.
    double resum = 0.0, reerr = 0.0;
    const int count = static_cast<int>(panels.size());
    while (!panels.empty()) {
        resum += panels.top().value;
        reerr += panels.top().error;
        panels.pop();
    }
    return {sign * resum, reerr, count};
}

} // namespace altprice
