#pragma once

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "altprice/altprice.hpp"

namespace altprice::cli
{

using nlohmann::ordered_json;

enum ExitCode : int
{
    kOk = 0,
    kInvariantFailure = 1,
    kConfigError = 2,
    kIoError = 3,
};

struct ConfigError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

inline std::string num(double v) { return fmt::format("{:.17g}", v); }

// Parameter flags shared by the subcommands; dashes become underscores in
// the JSON keys ("--mu-tilde" <-> "mu_tilde").
inline const std::vector<std::pair<std::string, std::string>> &parameter_flags()
{
    static const std::vector<std::pair<std::string, std::string>> names = {
        {"S0", "spot of S [100; 1 for paths]"},
        {"Z0", "spot of Z [100]"},
        {"strike", "strike K [100]"},
        {"maturity", "maturity T [1]"},
        {"eta", "portfolio weight on S [1]"},
        {"mu", "drift of S [lr: set with mu-tilde; pi: 0.10]"},
        {"sigma", "volatility of S [0.2]"},
        {"mu-tilde", "drift of Z"},
        {"sigma-tilde", "volatility of Z [0.4]"},
        {"rate", "shadow rate; sets mu = mu-tilde [0.05]"},
        {"r-f", "riskless rate [0.05]"},
        {"p", "lattice up-probability [0.5]"},
        {"gamma", "perpetual exponent [-delta]"},
        {"delta", "2 r_f / sigma^2 (xi-curve)"},
        {"h0", "perpetual deterministic component [0]"},
        {"t", "valuation time [0]"},
        {"S", "stock price for perpetual price/residual [1]"},
        {"yield", "constant annual yield for estimate"},
        {"days", "series length in days [512]"},
        {"window", "rolling window in returns [512]"},
        {"steps", "time steps per path [50]"},
        {"gamma-min", "xi-curve grid start [-2.5]"},
        {"gamma-max", "xi-curve grid end [2]"},
        {"gamma-points", "xi-curve grid size [91]"}};
    return names;
}

inline std::string json_key(std::string flag)
{
    for (auto &c : flag)
        if (c == '-')
            c = '_';
    return flag;
}

struct Flags
{
    std::string model;
    std::string action;
    std::string config;
    std::string output;
    std::string format = "json";
    std::string nodes;
    std::string input;
    std::string yields;
    std::string inject;
    std::uint64_t seed = 42;
    int n = 200;
    long long paths = 100000;
    long long grid = 100;
    double tolerance = 0.0;
    bool antithetic = false;
    bool deflated = false;
    std::map<std::string, double> values;
    std::vector<std::pair<std::string, CLI::Option *>> options;
    CLI::Option *n_opt = nullptr;
    CLI::Option *paths_opt = nullptr;
    CLI::Option *tol_opt = nullptr;
};

// ---------------------------------------------------------------------------
// Parameter document

class Params
{
public:
    Params(const Flags &f, ordered_json doc) : flags_(f), doc_(std::move(doc))
    {
        for (const auto &[flag, opt] : f.options)
            if (opt->count() > 0)
                doc_[json_key(flag)] = f.values.at(flag);
    }

    bool has(const std::string &key) const { return doc_.contains(key); }

    double get(const std::string &key, double fallback) const
    {
        if (!doc_.contains(key))
            return fallback;
        const auto &v = doc_.at(key);
        if (!v.is_number())
            throw ConfigError("parameter '" + key + "' must be a number");
        return v.get<double>();
    }

    long long get_int(const std::string &key, long long fallback) const
    {
        const double v = get(key, static_cast<double>(fallback));
        if (v != std::floor(v))
            throw ConfigError("parameter '" + key + "' must be an integer");
        return static_cast<long long>(v);
    }

    // A number, or a list of [t_start, value] pairs.
    Schedule schedule(const std::string &key, double fallback) const
    {
        if (!doc_.contains(key))
            return fallback;
        const auto &v = doc_.at(key);
        if (v.is_number())
            return v.get<double>();
        if (!v.is_array() || v.empty())
            throw ConfigError("parameter '" + key + "' must be a number or [[t, value], ...]");
        std::vector<Schedule::Segment> segs;
        for (const auto &pair : v) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
                !pair[1].is_number())
                throw ConfigError("schedule '" + key + "' entries must be [t, value]");
            segs.push_back({pair[0].get<double>(), pair[1].get<double>()});
        }
        try {
            return Schedule(std::move(segs));
        } catch (const std::invalid_argument &e) {
            throw ConfigError("schedule '" + key + "': " + e.what());
        }
    }

    DualAssetParams dual() const
    {
        if (has("mu") || has("mu_tilde")) {
            if (!has("mu") || !has("mu_tilde"))
                throw ConfigError("two-asset model needs both mu and mu_tilde (or rate)");
            return DualAssetParams{schedule("mu", 0.0), schedule("sigma", 0.2),
                                   schedule("mu_tilde", 0.0), schedule("sigma_tilde", 0.4)};
        }
        DualAssetParams p = DualAssetParams::from_shadow_rate(0.0, 0.2, 0.4);
        p.mu = p.mu_tilde = schedule("rate", 0.05);
        p.sigma = schedule("sigma", 0.2);
        p.sigma_tilde = schedule("sigma_tilde", 0.4);
        return p;
    }

    SingleAssetParams single(double mu = 0.10, double sigma = 0.2, double r_f = 0.05) const
    {
        return SingleAssetParams{schedule("mu", mu), schedule("sigma", sigma),
                                 schedule("r_f", r_f)};
    }

    OptionSpec option() const
    {
        OptionSpec s;
        s.strike = get("strike", 100.0);
        s.maturity = get("maturity", 1.0);
        s.eta = get("eta", 1.0);
        return s;
    }

    const Flags &flags() const { return flags_; }

private:
    const Flags &flags_;
    ordered_json doc_;
};

inline ordered_json load_config(const std::string &path)
{
    if (path.empty())
        return ordered_json::object();
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read config " + path);
    try {
        auto doc = ordered_json::parse(in);
        if (!doc.is_object())
            throw ConfigError("config must be a JSON object");
        return doc;
    } catch (const ordered_json::parse_error &e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

// Writes to --output when given, else to `out`.
class Sink
{
public:
    Sink(const std::string &path, std::ostream &fallback) : stream_(&fallback)
    {
        if (!path.empty()) {
            file_.open(path, std::ios::binary | std::ios::trunc);
            if (!file_)
                throw IoError("cannot write " + path);
            stream_ = &file_;
        }
    }
    std::ostream &operator*() { return *stream_; }

    void close(const std::string &path)
    {
        if (file_.is_open()) {
            file_.close();
            if (!file_)
                throw IoError("failed writing " + path);
        }
    }

private:
    std::ofstream file_;
    std::ostream *stream_;
};

inline void emit_report(const Flags &f, const ordered_json &report, std::ostream &out)
{
    Sink sink(f.output, out);
    if (f.format == "json") {
        *sink << report.dump(2) << '\n';
    } else {
        std::string head, row;
        for (const auto &[k, v] : report.items()) {
            if (v.is_structured())
                continue;
            head += (head.empty() ? "" : ",") + k;
            row += (row.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
        }
        *sink << head << '\n' << row << '\n';
    }
    sink.close(f.output);
}

inline ordered_json warnings_json(const std::vector<std::string> &w)
{
    return ordered_json(w);
}

inline void write_nodes(const std::string &path, const LatticeResult &r, bool two_asset)
{
    if (path.empty())
        return;
    if (r.node_values.empty())
        throw ConfigError("node dump needs a recombining tree with stored nodes");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path);
    out << "step,node,S,Z,C,q,a\n";
    const std::size_t n = r.node_values.size() - 1;
    for (std::size_t k = 0; k <= n; ++k) {
        for (std::size_t j = 0; j <= k; ++j) {
            out << k << ',' << j << ',' << num(r.node_s[k][j]) << ','
                << (two_asset ? num(r.node_z[k][j]) : "") << ',' << num(r.node_values[k][j])
                << ',';
            if (k < n)
                out << num(r.q_schedule[k]) << ',' << num(r.replication_weights[k][j].first);
            else
                out << ',';
            out << '\n';
        }
    }
    if (!out)
        throw IoError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_price(const Flags &f, const Params &p, std::ostream &out)
{
    ordered_json rep;
    rep["model"] = f.model;
    const double S0 = p.get("S0", 100.0);
    const double Z0 = p.get("Z0", 100.0);
    const OptionSpec spec = p.option();
    ordered_json diag = ordered_json::object();

    if (f.model == "lr-closed" || f.model == "lr-quadrature") {
        const LrClosedFormInputs in{S0, Z0, p.dual(), spec, p.get("t", 0.0)};
        RootConfig rc;
        if (f.tol_opt->count() > 0)
            rc.y_tolerance = f.tolerance;
        const RootResult root = solve_y_star(in, rc);
        const LrTerms k = lr_terms(in);
        rep["price"] = f.model == "lr-closed" ? lr_call_price(in, root)
                                               : lr_call_price_quadrature(in, root);
        diag["shadow_rate"] = k.rbar;
        diag["y_star"] = root.y_star;
        diag["root_iterations"] = root.iterations;
        diag["root_residual"] = root.residual;
    } else if (f.model == "lr-tree") {
        const DualAssetParams params = p.dual();
        auto cfg = LatticeConfig::uniform(f.n, spec.maturity, p.get("p", 0.5), !f.nodes.empty());
        const LatticeResult r = price_lr_tree(S0, Z0, params, spec, cfg);
        rep["price"] = r.option_value_root;
        diag["n"] = f.n;
        diag["q"] = r.q_schedule.front();
        diag["R"] = r.R_schedule.front();
        if (params.is_constant()) {
            const double ref = lr_call_price({S0, Z0, params, spec, 0.0});
            diag["closed_form"] = ref;
            diag["relative_error"] = std::abs(r.option_value_root - ref) / ref;
        }
        diag["warnings"] = warnings_json(r.warnings);
        write_nodes(f.nodes, r, true);
    } else if (f.model == "lr-mc") {
        McOptions o{f.seed, f.antithetic};
        const auto e = mc_price_lr(S0, Z0, p.dual(), spec, static_cast<std::size_t>(f.paths), o,
                                   p.get("t", 0.0));
        rep["price"] = e.value;
        rep["std_error"] = e.std_error;
        rep["n_paths"] = e.n_paths;
        diag["seed"] = f.seed;
    } else if (f.model == "pi-tree") {
        OptionSpec single = spec;
        single.payoff = PayoffKind::CallOnSingle;
        auto cfg = LatticeConfig::uniform(f.n, spec.maturity, p.get("p", 0.5), !f.nodes.empty());
        const PiTree tree = build_pi_tree(S0, p.single(), cfg);
        const LatticeResult r = price_pi_tree(tree, single);
        rep["price"] = r.option_value_root;
        diag["n"] = f.n;
        diag["pi"] = tree.pi.front();
        diag["warnings"] = warnings_json(r.warnings);
        write_nodes(f.nodes, r, false);
    } else if (f.model == "pi-mc" || f.model == "pi-numeraire") {
        OptionSpec single = spec;
        single.payoff = PayoffKind::CallOnSingle;
        McOptions o{f.seed, f.antithetic};
        const auto params = p.single();
        const auto e = f.model == "pi-mc"
                           ? mc_price_pi(S0, params, single, static_cast<std::size_t>(f.paths), o)
                           : mc_price_deflated_numeraire(S0, params, single,
                                                         static_cast<std::size_t>(f.paths), o);
        rep["price"] = e.value;
        rep["std_error"] = e.std_error;
        rep["n_paths"] = e.n_paths;
        diag["seed"] = f.seed;
    } else if (f.model == "bsm-vs-pi") {
        const auto r = compare_bsm_vs_pi(S0, p.single(), spec);
        rep["price"] = r.pi_price;
        rep["bsm_price"] = r.bsm_price;
        rep["sigma"] = r.sigma;
        rep["sigma_R"] = r.sigma_R;
        rep["difference"] = r.difference;
    } else {
        throw ConfigError("unknown model '" + f.model + "'");
    }
    rep["diagnostics"] = diag;
    emit_report(f, rep, out);
    return kOk;
}

inline void fault_flip_S_CS(PartialSet &p) { p.S_CS = -p.S_CS; }
inline void fault_flip_Z_CZ(PartialSet &p) { p.Z_CZ = -p.Z_CZ; }
inline void fault_flip_C_t(PartialSet &p) { p.C_t = -p.C_t; }
inline void fault_flip_SZ_CSZ(PartialSet &p) { p.SZ_CSZ = -p.SZ_CSZ; }

inline PartialsFault fault_by_name(const std::string &name)
{
    static const std::map<std::string, PartialsFault> table = {
        {"flip-S_CS", fault_flip_S_CS},
        {"flip-Z_CZ", fault_flip_Z_CZ},
        {"flip-C_t", fault_flip_C_t},
        {"flip-SZ_CSZ", fault_flip_SZ_CSZ}};
    if (name.empty())
        return nullptr;
    auto it = table.find(name);
    if (it == table.end())
        throw ConfigError("unknown fault '" + name + "'");
    return it->second;
}

inline int cmd_verify(const Flags &f, std::ostream &out)
{
    if (f.grid <= 0)
        throw ConfigError("grid size must be positive");
    VerificationTolerances tol;
    if (f.tol_opt->count() > 0)
        tol.residual = f.tolerance;
    const auto grid = random_verification_grid(static_cast<std::size_t>(f.grid), f.seed);
    const auto sum = run_verification(grid, tol, fault_by_name(f.inject));

    double worst_quad = 0.0;
    for (const auto &in : grid)
        worst_quad = std::max(worst_quad,
                              std::abs(lr_call_price(in) - lr_call_price_quadrature(in)));

    ordered_json rep;
    rep["instances"] = f.grid;
    rep["seed"] = f.seed;
    rep["passed"] = sum.passed();
    rep["worst_residual_ratio"] = sum.worst_residual_ratio;
    rep["worst_identity_split"] = sum.worst_split;
    rep["worst_identity_weight"] = sum.worst_weight;
    rep["worst_identity_g_sum"] = sum.worst_g_sum;
    rep["worst_fd_first_order"] = sum.worst_fd_first;
    rep["worst_fd_second_order"] = sum.worst_fd_second;
    rep["worst_quadrature_difference"] = worst_quad;
    ordered_json failures = ordered_json::array();
    for (std::size_t i = 0; i < sum.failures.size() && i < 20; ++i) {
        const auto &msg = sum.failures[i];
        const std::size_t idx = std::stoul(msg.substr(9, msg.find(':') - 9));
        const auto &in = sum.records[idx].instance;
        failures.push_back({{"failure", msg},
                            {"S", in.S},
                            {"Z", in.Z},
                            {"strike", in.spec.strike},
                            {"eta", in.spec.eta},
                            {"maturity", in.spec.maturity},
                            {"rate", in.params.mu.value_at(0.0)},
                            {"sigma", in.params.sigma.value_at(0.0)},
                            {"sigma_tilde", in.params.sigma_tilde.value_at(0.0)}});
    }
    rep["failure_count"] = sum.failures.size();
    rep["failures"] = failures;
    emit_report(f, rep, out);
    return sum.passed() ? kOk : kInvariantFailure;
}

inline std::vector<double> gamma_grid(const Params &p)
{
    const double lo = p.get("gamma_min", -2.5), hi = p.get("gamma_max", 2.0);
    const long long count = p.get_int("gamma_points", 91);
    if (count < 2 || !(hi > lo))
        throw ConfigError("gamma grid needs gamma_max > gamma_min and at least two points");
    std::vector<double> g;
    for (long long i = 0; i < count; ++i)
        g.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
    return g;
}

// Daily parameters used when none are supplied (large-cap stock, 10-year yield).
inline constexpr double kDailyMu = 4.38e-4;
inline constexpr double kDailySigma = 1.935e-2;
inline constexpr double kDailyRate = 1.635e-4;

inline double delta_from(const Params &p)
{
    if (p.has("delta"))
        return p.get("delta", 0.0);
    const auto s = p.single(kDailyMu, kDailySigma, kDailyRate);
    return delta_exponent(s.r_f.value_at(0.0), s.sigma.value_at(0.0));
}

inline int write_xi_curve(const Flags &f, const Params &p, std::ostream &out)
{
    const double delta = delta_from(p);
    const auto grid = gamma_grid(p);
    const auto points = xi_curve(delta, grid);
    Sink sink(f.output, out);
    *sink << "gamma,xi,label\n";
    for (const auto &pt : points)
        *sink << num(pt.gamma) << ',' << num(pt.xi) << ','
              << (pt.label ? std::string(1, *pt.label) : std::string()) << '\n';
    sink.close(f.output);
    return kOk;
}

inline int write_joint_paths(const Flags &f, const Params &p, std::ostream &out)
{
    const auto params = p.single(kDailyMu, kDailySigma, kDailyRate);
    const double gamma = p.has("gamma") ? p.get("gamma", 0.0) : -delta_from(p);
    const long long days = p.get_int("days", 512);
    if (days < 2)
        throw ConfigError("days must be at least 2");
    const auto [s, g] = synthesize_pair(params, gamma, static_cast<std::size_t>(days), f.seed,
                                        p.get("S0", 1.0), p.get("S_gamma0", 1.0));
    Sink sink(f.output, out);
    *sink << "day,date,S,S_gamma\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        *sink << i << ',' << format_iso_date(s.dates[i]) << ',' << num(s.closes[i]) << ','
              << num(g.closes[i]) << '\n';
    sink.close(f.output);
    return kOk;
}

inline int cmd_simulate(const Flags &f, const Params &p, std::ostream &out)
{
    if (f.action == "xi-curve")
        return write_xi_curve(f, p, out);
    if (f.action == "paths")
        return write_joint_paths(f, p, out);

    const long long steps = p.get_int("steps", 50);
    if (steps < 1 || f.paths < 1)
        throw ConfigError("steps and paths must be positive");
    const double T = p.get("maturity", 1.0);
    const auto n_paths = static_cast<std::size_t>(f.paths);
    Sink sink(f.output, out);
    if (f.action == "q-pair") {
        const auto [s, z] = simulate_q_pair(p.get("S0", 100.0), p.get("Z0", 100.0), p.dual(), T,
                                            static_cast<std::size_t>(steps), n_paths, f.seed);
        *sink << "path_id,step,time,S,Z\n";
        for (std::size_t i = 0; i < n_paths; ++i)
            for (std::size_t k = 0; k <= s.n_steps; ++k)
                *sink << i << ',' << k << ',' << num(s.times[k]) << ',' << num(s.at(i, k)) << ','
                      << num(z.at(i, k)) << '\n';
    } else if (f.action == "p-single") {
        const auto b = simulate_p_single(p.get("S0", 100.0), p.single(), T,
                                         static_cast<std::size_t>(steps), n_paths, f.seed,
                                         f.deflated);
        *sink << "path_id,step,time,value\n";
        for (std::size_t i = 0; i < n_paths; ++i)
            for (std::size_t k = 0; k <= b.n_steps; ++k)
                *sink << i << ',' << k << ',' << num(b.times[k]) << ',' << num(b.at(i, k)) << '\n';
    } else {
        throw ConfigError("unknown simulate target '" + f.action + "'");
    }
    sink.close(f.output);
    return kOk;
}

inline int cmd_estimate(const Flags &f, const Params &p, std::ostream &out)
{
    const long long window = p.get_int("window", 512);
    if (window < 2)
        throw ConfigError("window must be at least 2");
    PriceSeries series;
    if (f.input.empty()) {
        series = synthesize_series(p.single(kDailyMu, kDailySigma, kDailyRate),
                                   static_cast<std::size_t>(p.get_int("days", 2048)), f.seed);
    } else {
        try {
            series = load_series(f.input);
        } catch (const std::ios_base::failure &e) {
            throw IoError(e.what());
        }
    }
    YieldSeries yields;
    if (!f.yields.empty()) {
        try {
            yields = load_yields(f.yields);
        } catch (const std::ios_base::failure &e) {
            throw IoError(e.what());
        }
    } else {
        yields.dates = {series.dates.empty() ? Date{} : series.dates.front()};
        yields.annual = {p.get("yield", kDailyRate * kTradingDaysPerYear)};
    }
    const auto rows = rolling_estimates(series, static_cast<std::size_t>(window), yields);
    Sink sink(f.output, out);
    *sink << "date,mu_hat,sigma_hat,delta_hat\n";
    for (const auto &r : rows)
        *sink << format_iso_date(r.date) << ',' << num(r.mu_hat) << ',' << num(r.sigma_hat) << ','
              << (r.flagged ? std::string("NaN") : num(r.delta_hat)) << '\n';
    sink.close(f.output);
    return kOk;
}

inline int cmd_perpetual(const Flags &f, const Params &p, std::ostream &out)
{
    if (f.action == "xi-curve")
        return write_xi_curve(f, p, out);
    if (f.action == "paths")
        return write_joint_paths(f, p, out);

    const auto single = p.single(kDailyMu, kDailySigma, kDailyRate);
    PerpetualSpec spec;
    spec.r_f = single.r_f;
    spec.sigma = single.sigma;
    spec.mu = single.mu;
    spec.h0 = p.get("h0", 0.0);
    const double r = single.r_f.value_at(0.0), s = single.sigma.value_at(0.0);
    const double delta = delta_exponent(r, s);
    spec.gamma = p.has("gamma") ? p.get("gamma", 0.0) : -delta;

    ordered_json rep;
    rep["action"] = f.action;
    rep["gamma"] = spec.gamma;
    rep["delta"] = delta;
    rep["xi"] = xi(spec.gamma, delta);
    if (f.action == "price") {
        rep["price"] = perpetual_price(spec, p.get("t", 0.0), p.get("S", 1.0));
    } else if (f.action == "dynamics") {
        const auto d = perpetual_dynamics(spec);
        rep["mu_tilde"] = d.drift;
        rep["sigma_tilde"] = d.vol;
        if (spec.gamma != 1.0)
            rep["shadow_rate"] = shadow_rate(perpetual_pair(spec), 0.0);
    } else if (f.action == "residual") {
        const double t = p.get("t", 0.0), S = p.get("S", 1.0);
        rep["residual"] = perpetual_pde_residual(spec, t, S);
        rep["price"] = perpetual_price(spec, t, S);
    } else {
        throw ConfigError("unknown perpetual action '" + f.action + "'");
    }
    emit_report(f, rep, out);
    return kOk;
}

// ---------------------------------------------------------------------------

inline void add_common(CLI::App *sub, Flags &f)
{
    sub->add_option("--config", f.config, "JSON parameter document");
    sub->add_option("--output", f.output, "output path (default stdout)");
    sub->add_option("--seed", f.seed, "random seed")->capture_default_str();
    for (const auto &[name, help] : parameter_flags()) {
        f.values[name] = 0.0;
        f.options.emplace_back(name, sub->add_option("--" + name, f.values[name], help));
    }
}

/// Runs the tool on argv-style arguments (args[0] is the program name).
inline int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Option pricing with two risky assets or a deflated cumulative return"};
    app.require_subcommand(1);
    Flags f;
    const std::vector<std::string> formats = {"json", "csv"};

    auto *price = app.add_subcommand("price", "price a European call");
    price
        ->add_option("--model", f.model,
                     "lr-closed | lr-quadrature | lr-tree | lr-mc | pi-tree | pi-mc | "
                     "pi-numeraire | bsm-vs-pi")
        ->required()
        ->check(CLI::IsMember({"lr-closed", "lr-quadrature", "lr-tree", "lr-mc", "pi-tree",
                               "pi-mc", "pi-numeraire", "bsm-vs-pi"}));
    f.n_opt = price->add_option("--n", f.n, "lattice steps")->capture_default_str();
    f.paths_opt = price->add_option("--paths", f.paths, "Monte Carlo paths")->capture_default_str();
    f.tol_opt = price->add_option("--tolerance", f.tolerance, "root tolerance in y");
    price->add_option("--format", f.format)->check(CLI::IsMember(formats))->capture_default_str();
    price->add_option("--nodes", f.nodes, "tree node dump CSV (step,node,S,Z,C,q,a)");
    price->add_flag("--antithetic", f.antithetic);
    add_common(price, f);

    auto *verify = app.add_subcommand("verify", "randomized PDE residual and identity checks");
    verify->add_option("--model", f.model, "pde (only choice)")
        ->check(CLI::IsMember({"pde"}));
    verify->add_option("--grid", f.grid, "number of random instances")->capture_default_str();
    auto *vtol = verify->add_option("--tolerance", f.tolerance, "PDE residual tolerance");
    verify->add_option("--format", f.format)->check(CLI::IsMember(formats))->capture_default_str();
    verify->add_option("--inject-fault", f.inject,
                       "debug: flip-S_CS | flip-Z_CZ | flip-C_t | flip-SZ_CSZ");
    verify->add_option("--config", f.config, "JSON parameter document");
    verify->add_option("--output", f.output, "output path (default stdout)");
    verify->add_option("--seed", f.seed, "random seed")->capture_default_str();

    auto *simulate = app.add_subcommand("simulate", "CSV dumps of simulated paths and curves");
    simulate->add_option("target", f.action, "paths | xi-curve | q-pair | p-single")
        ->required()
        ->check(CLI::IsMember({"paths", "xi-curve", "q-pair", "p-single"}));
    auto *sim_paths = simulate->add_option("--paths", f.paths, "number of paths")
                          ->capture_default_str();
    simulate->add_flag("--deflated", f.deflated, "p-single: deflated cumulative return");
    add_common(simulate, f);

    auto *estimate = app.add_subcommand("estimate", "rolling mu, sigma, delta estimates");
    estimate->add_option("--input", f.input, "date,close CSV (default: synthetic series)");
    estimate->add_option("--yields", f.yields, "date,annual_yield CSV");
    add_common(estimate, f);

    auto *perpetual = app.add_subcommand("perpetual", "perpetual derivative S^gamma");
    perpetual->add_option("action", f.action, "price | dynamics | residual | xi-curve | paths")
        ->required()
        ->check(CLI::IsMember({"price", "dynamics", "residual", "xi-curve", "paths"}));
    perpetual->add_option("--format", f.format)->check(CLI::IsMember(formats))
        ->capture_default_str();
    add_common(perpetual, f);

    std::vector<const char *> argv;
    for (const auto &a : args)
        argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }
    if (!f.tol_opt->count() && vtol->count())
        f.tol_opt = vtol;
    if (simulate->parsed() && sim_paths->count() == 0)
        f.paths = 10;

    try {
        const Params params(f, load_config(f.config));
        if (price->parsed())
            return cmd_price(f, params, out);
        if (verify->parsed())
            return cmd_verify(f, out);
        if (simulate->parsed())
            return cmd_simulate(f, params, out);
        if (estimate->parsed())
            return cmd_estimate(f, params, out);
        return cmd_perpetual(f, params, out);
    } catch (const IoError &e) {
        err << "io error: " << e.what() << '\n';
        return kIoError;
    } catch (const ConfigError &e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ParseError &e) {
        err << "input error: " << e.what() << '\n';
        return kConfigError;
    } catch (const PricingError &e) {
        err << "precondition violated: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::invalid_argument &e) {
        err << "precondition violated: " << e.what() << '\n';
        return kConfigError;
    }
}

} // namespace altprice::cli
