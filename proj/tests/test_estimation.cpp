#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "altprice/companion_assets.hpp"
#include "altprice/estimation.hpp"

using namespace altprice;

namespace
{

PriceSeries parse(const std::string &text)
{
    std::istringstream in(text);
    return load_series(in, "T");
}

std::size_t error_row(const std::string &text)
{
    try {
        parse(text);
    } catch (const ParseError &e) {
        return e.row();
    }
    return 0;
}

} // namespace

TEST(LoadSeries, ValidRows)
{
    const auto s = parse("date,close\n2023-08-28,322.93\n2023-08-29,328.41\n");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.closes[1], 328.41);
    EXPECT_EQ(format_iso_date(s.dates[0]), "2023-08-28");
    EXPECT_EQ(s.symbol, "T");
}

TEST(LoadSeries, RejectsBadRows)
{
    EXPECT_THROW(parse("date,close\n2023-01-02,1\n2023-01-03,0\n"), NonPositivePrice);
    EXPECT_EQ(error_row("date,close\n2023-01-02,1\n2023-01-03,-2\n"), 3u);
    EXPECT_EQ(error_row("date,close\n2023-01-03,1\n2023-01-02,2\n"), 3u);
    EXPECT_EQ(error_row("date,close\n2023-01-03,1\n2023-01-03,2\n"), 3u);
    EXPECT_EQ(error_row("date,close\n2023-01-03,abc\n"), 2u);
    EXPECT_EQ(error_row("date,close\n2023-02-30,1\n"), 2u);
    EXPECT_THROW(load_series(std::string("/nonexistent/file.csv")), std::ios_base::failure);
}

TEST(LoadSeries, FromFileTakesSymbolFromStem)
{
    const auto path = std::filesystem::temp_directory_path() / "altprice_msft.csv";
    {
        std::ofstream out(path);
        out << "date,close\n2023-08-28,1\n2023-08-29,2\n";
    }
    EXPECT_EQ(load_series(path.string()).symbol, "altprice_msft");
    std::filesystem::remove(path);
}

TEST(RollingEstimates, ConstantPricesAreFlagged)
{
    const auto s = synthesize_series({0.0, 1e-300, 0.0}, 20, 1, 5.0);
    const auto est = rolling_estimates(s, 10, 0.04);
    ASSERT_EQ(est.size(), 10u);
    for (const auto &e : est) {
        EXPECT_TRUE(e.flagged);
        EXPECT_EQ(e.sigma_hat, 0.0);
        EXPECT_TRUE(std::isnan(e.delta_hat));
    }
}

TEST(RollingEstimates, RecoversGeneratingParameters)
{
    const double mu = 5e-4, sigma = 0.02;
    // arithmetic-return moments of an exact lognormal step
    const double mean = std::expm1(mu);
    const double sd = std::exp(mu) * std::sqrt(std::expm1(sigma * sigma));
    for (std::size_t w : {512u, 4096u}) {
        const auto s = synthesize_series({mu, sigma, 1e-4}, w + 1, 17 + w);
        const auto est = rolling_estimates(s, w, 0.0412);
        ASSERT_EQ(est.size(), 1u);
        const double n = static_cast<double>(w);
        EXPECT_LE(std::abs(est[0].mu_hat - mean), 3 * sd / std::sqrt(n)) << w;
        EXPECT_LE(std::abs(est[0].sigma_hat - sd), 3 * sd / std::sqrt(2 * (n - 1))) << w;
    }
}

TEST(RollingEstimates, ShiftEquivariant)
{
    const auto full = synthesize_series({4e-4, 0.015, 1e-4}, 200, 3);
    PriceSeries tail;
    tail.dates.assign(full.dates.begin() + 50, full.dates.end());
    tail.closes.assign(full.closes.begin() + 50, full.closes.end());
    const auto a = rolling_estimates(full, 30, 0.03);
    const auto b = rolling_estimates(tail, 30, 0.03);
    ASSERT_EQ(a.size(), b.size() + 50);
    for (std::size_t i = 0; i < b.size(); ++i) {
        EXPECT_EQ(a[i + 50].date, b[i].date);
        EXPECT_EQ(a[i + 50].mu_hat, b[i].mu_hat);
        EXPECT_EQ(a[i + 50].sigma_hat, b[i].sigma_hat);
    }
}

TEST(RollingEstimates, DeltaUsesDailyYield)
{
    const auto s = synthesize_series({4e-4, 0.015, 1e-4}, 100, 5);
    for (const auto &e : rolling_estimates(s, 40, 0.0412)) {
        ASSERT_FALSE(e.flagged);
        EXPECT_NEAR(e.delta_hat * e.sigma_hat * e.sigma_hat, 2 * 0.0412 / 252, 1e-18);
        EXPECT_GT(e.delta_hat, 0.0);
    }
    EXPECT_THROW(rolling_estimates(s, 100, 0.04), WindowTooLong);
    EXPECT_NO_THROW(rolling_estimates(s, 99, 0.04));
}

TEST(RollingEstimates, YieldsForwardFilled)
{
    const auto s = synthesize_series({4e-4, 0.015, 1e-4}, 12, 5);
    std::ostringstream csv;
    csv << "date,annual_yield\n"
        << format_iso_date(s.dates[4]) << ",0.02\n"
        << format_iso_date(s.dates[8]) << ",0.05\n";
    std::istringstream in(csv.str());
    const auto y = load_yields(in);
    const auto est = rolling_estimates(s, 3, y);
    for (const auto &e : est) {
        const auto days = (e.date - s.dates[0]).count();
        if (days < 4) {
            EXPECT_TRUE(e.flagged);
            continue;
        }
        const double expect = days < 8 ? 0.02 : 0.05;
        EXPECT_NEAR(e.delta_hat * e.sigma_hat * e.sigma_hat, 2 * expect / 252, 1e-18) << days;
    }
}

TEST(RollingEstimates, PublishedDailyTriple)
{
    // 2 r / sigma^2 with the published daily values
    EXPECT_NEAR(delta_exponent(1.635e-4, 1.935e-2), 0.87334, 1e-5);
}

TEST(SynthesizeSeries, ReproducibleAndStartsAtS0)
{
    const SingleAssetParams p{4.38e-4, 1.935e-2, 1.635e-4};
    const auto a = synthesize_series(p, 300, 9);
    const auto b = synthesize_series(p, 300, 9);
    EXPECT_EQ(a.closes, b.closes);
    EXPECT_EQ(a.closes.front(), 1.0);
    EXPECT_NE(a.closes, synthesize_series(p, 300, 10).closes);
    const auto [s, g] = synthesize_pair(p, -0.87332, 512, 42);
    EXPECT_EQ(s.closes.front(), 1.0);
    EXPECT_EQ(g.closes.front(), 1.0);
    EXPECT_EQ(s.size(), 512u);
    EXPECT_THROW(synthesize_series(p, 1, 1), std::invalid_argument);
}
