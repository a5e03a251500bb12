#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "market.hpp"
#include "rng.hpp"

namespace altprice
{

using Date = std::chrono::sys_days;

inline constexpr double kTradingDaysPerYear = 252.0;

inline std::optional<Date> parse_iso_date(const std::string &text)
{
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3)
        return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok())
        return std::nullopt;
    return Date{ymd};
}

inline std::string format_iso_date(Date date)
{
    const std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

struct PriceSeries
{
    std::string symbol;
    std::vector<Date> dates;
    std::vector<double> closes;

    std::size_t size() const { return closes.size(); }
};

namespace detail
{

inline std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// Two-column CSV with a header; rows are numbered from 1 at the header.
inline std::vector<std::pair<Date, double>> read_two_columns(std::istream &in,
                                                             const char *value_name)
{
    std::vector<std::pair<Date, double>> rows;
    std::string line;
    std::size_t row = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++row;
        line = trim(line);
        if (line.empty())
            continue;
        if (!header_seen) {
            header_seen = true;
            if (line.rfind("date", 0) == 0)
                continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError("expected 'date," + std::string(value_name) + "'", row);
        const auto date = parse_iso_date(trim(line.substr(0, comma)));
        if (!date)
            throw ParseError("invalid ISO-8601 date", row);
        const std::string field = trim(line.substr(comma + 1));
        double value = 0.0;
        std::size_t used = 0;
        try {
            value = std::stod(field, &used);
        } catch (const std::exception &) {
            throw ParseError("invalid number '" + field + "'", row);
        }
        if (used != field.size() || !std::isfinite(value))
            throw ParseError("invalid number '" + field + "'", row);
        if (!rows.empty() && !(*date > rows.back().first))
            throw ParseError(*date == rows.back().first ? "duplicate date" : "dates not increasing",
                             row);
        rows.emplace_back(*date, value);
        if (value_name == std::string("close") && !(value > 0.0))
            throw NonPositivePrice("non-positive close", row);
    }
    return rows;
}

} // namespace detail

/// Reads `date,close` CSV.
inline PriceSeries load_series(std::istream &in, std::string symbol = {})
{
    PriceSeries s;
    s.symbol = std::move(symbol);
    for (auto [d, v] : detail::read_two_columns(in, "close")) {
        s.dates.push_back(d);
        s.closes.push_back(v);
    }
    return s;
}

inline PriceSeries load_series(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::ios_base::failure("cannot open " + path);
    auto stem = path.substr(path.find_last_of('/') + 1);
    return load_series(in, stem.substr(0, stem.find('.')));
}

/// Annual yields by date, as read from `date,annual_yield`.
struct YieldSeries
{
    std::vector<Date> dates;
    std::vector<double> annual;

    /// Last yield on or before `d`; nullopt before the first observation.
    std::optional<double> on_or_before(Date d) const
    {
        auto it = std::upper_bound(dates.begin(), dates.end(), d);
        if (it == dates.begin())
            return std::nullopt;
        return annual[static_cast<std::size_t>(it - dates.begin()) - 1];
    }
};

inline YieldSeries load_yields(std::istream &in)
{
    YieldSeries y;
    for (auto [d, v] : detail::read_two_columns(in, "annual_yield")) {
        y.dates.push_back(d);
        y.annual.push_back(v);
    }
    return y;
}

inline YieldSeries load_yields(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::ios_base::failure("cannot open " + path);
    return load_yields(in);
}

struct RollingEstimate
{
    Date date;
    double mu_hat;
    double sigma_hat;
    double delta_hat; // NaN when flagged
    std::size_t window;
    bool flagged;     // sigma_hat == 0 or no yield available
};

/// Per date from index `window` on: arithmetic daily returns over the
/// trailing window, sample mean and unbiased standard deviation, and
/// delta = 2 (annual_yield / 252) / sigma^2 with the yield forward-filled.
inline std::vector<RollingEstimate> rolling_estimates(const PriceSeries &series, std::size_t window,
                                                      const YieldSeries &yields)
{
    if (window < 2)
        throw std::invalid_argument("window must hold at least two returns");
    if (series.size() < window + 1)
        throw WindowTooLong("series of " + std::to_string(series.size()) +
                            " prices cannot fill a window of " + std::to_string(window) +
                            " returns");
    std::vector<RollingEstimate> out;
    out.reserve(series.size() - window);
    const double n = static_cast<double>(window);
    for (std::size_t end = window; end < series.size(); ++end) {
        double mean = 0.0;
        for (std::size_t i = end - window + 1; i <= end; ++i)
            mean += series.closes[i] / series.closes[i - 1] - 1.0;
        mean /= n;
        double ss = 0.0;
        for (std::size_t i = end - window + 1; i <= end; ++i) {
            const double d = series.closes[i] / series.closes[i - 1] - 1.0 - mean;
            ss += d * d;
        }
        const double sigma = std::sqrt(ss / (n - 1.0));
        RollingEstimate e{series.dates[end], mean, sigma, std::nan(""), window, true};
        const auto annual = yields.on_or_before(series.dates[end]);
        if (sigma > 0.0 && annual) {
            e.delta_hat = 2.0 * (*annual / kTradingDaysPerYear) / (sigma * sigma);
            e.flagged = false;
        }
        out.push_back(e);
    }
    return out;
}

/// Constant-yield overload.
inline std::vector<RollingEstimate> rolling_estimates(const PriceSeries &series, std::size_t window,
                                                      double annual_yield)
{
    YieldSeries y;
    y.dates = {series.dates.empty() ? Date{} : series.dates.front()};
    y.annual = {annual_yield};
    return rolling_estimates(series, window, y);
}

/// Daily exact-lognormal path with daily mu, sigma from `params` (evaluated
/// at the day index). Business-day calendar is ignored: consecutive dates.
inline PriceSeries synthesize_series(const SingleAssetParams &params, std::size_t n_days,
                                     std::uint64_t seed, double S0 = 1.0,
                                     Date start = Date{std::chrono::year{2000} / 1 / 3})
{
    if (n_days < 2)
        throw std::invalid_argument("need at least two days");
    params.validate();
    Xoshiro256 rng(seed);
    PriceSeries s;
    s.symbol = "SYN";
    s.dates.reserve(n_days);
    s.closes.reserve(n_days);
    double log_s = std::log(S0);
    for (std::size_t k = 0; k < n_days; ++k) {
        if (k > 0) {
            const double t = static_cast<double>(k - 1);
            const double mu = params.mu.value_at(t);
            const double sg = params.sigma.value_at(t);
            log_s += mu - 0.5 * sg * sg + sg * rng.normal();
        }
        s.dates.push_back(start + std::chrono::days{static_cast<long>(k)});
        s.closes.push_back(std::exp(log_s));
    }
    return s;
}

/// S and its perpetual companion S^gamma sharing the same daily increments:
/// d ln S^gamma = (mu~ - sigma~^2/2) + sigma~ dW with mu~ = (1 - gamma) r_f +
/// gamma mu, sigma~ = gamma sigma.
inline std::pair<PriceSeries, PriceSeries>
synthesize_pair(const SingleAssetParams &params, double gamma, std::size_t n_days,
                std::uint64_t seed, double S0 = 1.0, double G0 = 1.0,
                Date start = Date{std::chrono::year{2000} / 1 / 3})
{
    if (n_days < 2)
        throw std::invalid_argument("need at least two days");
    params.validate();
    Xoshiro256 rng(seed);
    PriceSeries s, g;
    s.symbol = "S";
    g.symbol = "S^gamma";
    double ls = std::log(S0), lg = std::log(G0);
    for (std::size_t k = 0; k < n_days; ++k) {
        if (k > 0) {
            const double t = static_cast<double>(k - 1);
            const double mu = params.mu.value_at(t);
            const double sg = params.sigma.value_at(t);
            const double r = params.r_f.value_at(t);
            const double mu_g = (1.0 - gamma) * r + gamma * mu;
            const double sg_g = gamma * sg;
            const double z = rng.normal();
            ls += mu - 0.5 * sg * sg + sg * z;
            lg += mu_g - 0.5 * sg_g * sg_g + sg_g * z;
        }
        const Date d = start + std::chrono::days{static_cast<long>(k)};
        s.dates.push_back(d);
        g.dates.push_back(d);
        s.closes.push_back(std::exp(ls));
        g.closes.push_back(std::exp(lg));
    }
    return {std::move(s), std::move(g)};
}

} // namespace altprice
