#include "frameless/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "frameless/analysis.hpp"
#include "frameless/optimizer.hpp"
#include "frameless/oracle.hpp"
#include "frameless/simulator.hpp"

namespace frameless::cli {

namespace {

using nlohmann::ordered_json;

struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

struct CurveOptions
{
    int n = 0;
    int k = 0;
    double beta = 0.0;
    int m_min = 0;
    int m_max = 0;
    int m_step = 1;
    std::string format = "csv";
    std::string out;
};

void add_curve_options(CLI::App& cmd, CurveOptions& o)
{
    cmd.add_option("--n", o.n, "number of users")->required()->check(CLI::PositiveNumber);
    cmd.add_option("--k", o.k, "MUD capability")->required()->check(CLI::PositiveNumber);
    cmd.add_option("--beta", o.beta, "slot access scale, p = beta/n")->required();
    cmd.add_option("--m-min", o.m_min, "first slot count (default 0.1 n)");
    cmd.add_option("--m-max", o.m_max, "last slot count (default 2 n)");
    cmd.add_option("--m-step", o.m_step, "slot count increment")->check(CLI::PositiveNumber);
    cmd.add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv", "json"}));
    cmd.add_option("--out", o.out, "write data here instead of stdout");
}

std::vector<int> slot_grid(CurveOptions& o)
{
    const auto def = default_slot_range(o.n);
    if (o.m_min == 0)
        o.m_min = def.lo;
    if (o.m_max == 0)
        o.m_max = std::max(def.hi, o.m_min);
    if (o.m_min < 1)
        throw UsageError("--m-min must be >= 1");
    if (o.m_max < o.m_min)
        throw UsageError("--m-max (" + std::to_string(o.m_max) + ") is below --m-min ("
                         + std::to_string(o.m_min) + ")");
    std::vector<int> ms;
    for (int m = o.m_min; m <= o.m_max; m += o.m_step)
        ms.push_back(m);
    return ms;
}

// Redirects to --out when given.
class Sink
{
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback)
    {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_)
                throw UsageError("cannot open output file " + path);
            stream_ = file_.get();
        }
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

ordered_json params_block(const CurveOptions& o)
{
    ordered_json p;
    p["n"] = o.n;
    p["k"] = o.k;
    p["beta"] = o.beta;
    p["p"] = o.beta / o.n;
    p["m_min"] = o.m_min;
    p["m_max"] = o.m_max;
    p["m_step"] = o.m_step;
    return p;
}

struct CurveRow
{
    int m = 0;
    double per = 0.0;
    double throughput = 0.0;
    double per_stderr = 0.0;
    double thr_stderr = 0.0;
    double pruned = 0.0;
};

void write_curve(std::ostream& os, const std::string& format, const std::string& command,
                 ordered_json params, const std::vector<CurveRow>& rows, int n, bool with_stderr)
{
    std::vector<std::string> columns{"m", "m_over_n", "per", "throughput"};
    if (with_stderr) {
        columns.push_back("per_stderr");
        columns.push_back("thr_stderr");
    }
    columns.push_back("pruned_mass");

    if (format == "csv") {
        for (size_t i = 0; i < columns.size(); ++i)
            os << (i ? "," : "") << columns[i];
        os << '\n';
        for (const auto& r : rows) {
            os << r.m << ',' << num(static_cast<double>(r.m) / n) << ',' << num(r.per) << ','
               << num(r.throughput);
            if (with_stderr)
                os << ',' << num(r.per_stderr) << ',' << num(r.thr_stderr);
            os << ',' << num(r.pruned) << '\n';
        }
        return;
    }

    ordered_json doc;
    doc["command"] = command;
    doc["params"] = std::move(params);
    doc["columns"] = columns;
    doc["rows"] = ordered_json::array();
    for (const auto& r : rows) {
        ordered_json row;
        row["m"] = r.m;
        row["m_over_n"] = static_cast<double>(r.m) / n;
        row["per"] = r.per;
        row["throughput"] = r.throughput;
        if (with_stderr) {
            row["per_stderr"] = r.per_stderr;
            row["thr_stderr"] = r.thr_stderr;
        }
        row["pruned_mass"] = r.pruned;
        doc["rows"].push_back(std::move(row));
    }
    os << doc.dump(2) << '\n';
}

// Splices the JSON document named by --config in front of the command-line
// arguments; every option keeps its last value, so explicit flags win.
std::vector<std::string> expand_config(const std::vector<std::string>& args)
{
    std::vector<std::string> rest;
    std::string path;
    for (size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size())
                throw UsageError("--config needs a file name");
            path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (path.empty())
        return rest;

    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot read config file " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError("config file " + path + ": " + e.what());
    }
    if (!doc.is_object())
        throw UsageError("config file " + path + " must hold a JSON object");

    std::vector<std::string> spliced;
    if (!rest.empty())
        spliced.push_back(rest.front());
    for (const auto& [key, value] : doc.items()) {
        std::string flag = "--" + key;
        for (char& c : flag)
            if (c == '_')
                c = '-';
        if (value.is_boolean()) {
            if (value.get<bool>())
                spliced.push_back(flag);
        } else if (value.is_string()) {
            spliced.push_back(flag);
            spliced.push_back(value.get<std::string>());
        } else if (value.is_number_integer()) {
            spliced.push_back(flag);
            spliced.push_back(std::to_string(value.get<long long>()));
        } else if (value.is_number()) {
            spliced.push_back(flag);
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", value.get<double>());
            spliced.push_back(buf);
        } else {
            throw UsageError("config key '" + key + "' must be a scalar");
        }
    }
    spliced.insert(spliced.end(), rest.begin() + (rest.empty() ? 0 : 1), rest.end());
    return spliced;
}

int cmd_analyze(CurveOptions o, double epsilon, std::ostream& out)
{
    const auto ms = slot_grid(o);
    const SystemParams base(o.n, ms.front(), o.k, o.beta);
    AnalysisOptions options;
    options.epsilon = epsilon;

    std::vector<CurveRow> rows;
    for (int m : ms) {
        const auto r = analyze(base.with_m(m), options);
        rows.push_back({m, r.per, r.throughput, 0.0, 0.0, r.pruned_mass});
    }
    auto params = params_block(o);
    params["epsilon"] = epsilon;
    Sink sink(o.out, out);
    write_curve(*sink, o.format, "analyze", std::move(params), rows, o.n, false);
    return kOk;
}

int cmd_simulate(CurveOptions o, long runs, uint64_t seed, std::ostream& out)
{
    const auto ms = slot_grid(o);
    const SystemParams base(o.n, ms.front(), o.k, o.beta);

    std::vector<CurveRow> rows;
    for (int m : ms) {
        const auto s = simulate(base.with_m(m), runs, seed);
        rows.push_back({m, s.per_estimate, s.throughput_estimate, s.per_stderr, s.throughput_stderr, 0.0});
    }
    auto params = params_block(o);
    params["runs"] = runs;
    params["seed"] = seed;
    Sink sink(o.out, out);
    write_curve(*sink, o.format, "simulate", std::move(params), rows, o.n, true);
    return kOk;
}

ordered_json profile_json(const std::vector<ProfilePoint>& profile)
{
    ordered_json arr = ordered_json::array();
    for (const auto& p : profile)
        arr.push_back({{"beta", p.beta}, {"t_max", p.t_max}, {"m", p.m}});
    return arr;
}

int cmd_optimize(int n, int k, OptimizerConfig config, int m_min, int m_max, const std::string& search,
                 const std::string& format, const std::string& out_path, std::ostream& out, std::ostream& err)
{
    if (config.beta_max < config.beta_min)
        throw UsageError("--beta-max (" + num(config.beta_max) + ") is below --beta-min ("
                         + num(config.beta_min) + ")");
    if (config.beta_max > n)
        throw UsageError("--beta-max must not exceed n");
    if (m_min != 0 || m_max != 0) {
        const auto def = default_slot_range(n);
        SlotRange r{m_min ? m_min : def.lo, m_max ? m_max : def.hi};
        if (r.lo < 1 || r.hi < r.lo)
            throw UsageError("slot range must satisfy 1 <= --m-min <= --m-max");
        config.m_range = r;
    }
    config.search = search == "exhaustive" ? PeakSearch::exhaustive : PeakSearch::unimodal;

    const auto opt = optimize_beta(n, k, config);

    char row[160];
    std::snprintf(row, sizeof row, "%5d %3d %10.2f %10.4f %12.3f", n, k, opt.beta_opt, opt.t_max,
                  opt.m_over_n_at_peak);

    Sink sink(out_path, out);
    if (format == "table") {
        *sink << "    n   k   beta_opt      T_max   m/n(T_max)\n" << row << '\n';
        return kOk;
    }

    ordered_json doc;
    doc["command"] = "optimize";
    doc["params"] = {{"n", n},
                     {"k", k},
                     {"beta_min", config.beta_min},
                     {"beta_max", config.beta_max},
                     {"coarse_step", config.coarse_step},
                     {"refine_step", config.refine_step},
                     {"m_min", opt.m_range.lo},
                     {"m_max", opt.m_range.hi},
                     {"search", search},
                     {"epsilon", config.epsilon}};
    doc["optimum"] = {{"beta_opt", opt.beta_opt},
                      {"t_max", opt.t_max},
                      {"m", opt.m_at_peak},
                      {"m_over_n", opt.m_over_n_at_peak},
                      {"per", opt.per_at_peak},
                      {"pruned_mass", opt.pruned_mass}};
    doc["coarse_profile"] = profile_json(opt.coarse_profile);
    doc["refine_profile"] = profile_json(opt.refine_profile);
    *sink << doc.dump(2) << '\n';
    err << row << '\n';
    return kOk;
}

} // namespace

int run_validate_command(const ValidationConfig& config, const PerFunction& analysis_per, std::ostream& out,
                         std::ostream& err)
{
    const auto report = run_validation(config, analysis_per);

    out << "n,m,k,beta,analysis_per,oracle_per,abs_diff,sim_per,sim_stderr,status\n";
    int failures = 0;
    for (const auto& r : report.rows) {
        const bool ok = r.exact_ok && r.sim_ok;
        failures += ok ? 0 : 1;
        out << r.n << ',' << r.m << ',' << r.k << ',' << num(r.beta) << ',' << num(r.analysis) << ','
            << num(r.oracle) << ',' << num(std::abs(r.analysis - r.oracle)) << ',' << num(r.simulated) << ','
            << num(r.sim_stderr) << ',' << (ok ? "ok" : "FAIL") << '\n';
    }
    err << report.rows.size() << " grid points, " << failures << " failures\n";
    return report.ok() ? kOk : kValidationFailure;
}

bool ValidationReport::ok() const
{
    for (const auto& r : rows)
        if (!r.exact_ok || !r.sim_ok)
            return false;
    return true;
}

ValidationReport run_validation(const ValidationConfig& config, const PerFunction& analysis_per)
{
    if (config.max_nm > kOracleMaxCells)
        throw std::invalid_argument("validation grid exceeds the oracle budget");

    PerFunction per_fn = analysis_per;
    if (!per_fn) {
        per_fn = [](const SystemParams& p) {
            AnalysisOptions exact;
            exact.epsilon = 0.0;
            return analyze(p, exact).per;
        };
    }

    ValidationReport report;
    for (int k = 1; k <= config.max_k; ++k) {
        for (int n = 1; n <= config.max_n; ++n) {
            std::vector<double> betas;
            for (double b : config.betas)
                if (b <= n)
                    betas.push_back(b);
            if (config.include_beta_n && std::find(betas.begin(), betas.end(), double(n)) == betas.end())
                betas.push_back(n);
            for (int m = 1; m <= config.max_m && n * m <= config.max_nm; ++m) {
                for (double beta : betas) {
                    const SystemParams params(n, m, k, beta);
                    ValidationRow row;
                    row.n = n;
                    row.m = m;
                    row.k = k;
                    row.beta = beta;
                    row.analysis = per_fn(params);
                    row.oracle = exact_per(params);
                    row.exact_ok = std::abs(row.analysis - row.oracle) <= config.tolerance;
                    if (config.runs > 0) {
                        const auto s = simulate(params, config.runs, derive_seed(config.seed, report.rows.size()));
                        row.simulated = s.per_estimate;
                        row.sim_stderr = s.per_stderr;
                        row.sim_ok = std::abs(s.per_estimate - row.oracle)
                                  <= 4.0 * s.per_stderr + 5.0 / static_cast<double>(config.runs);
                    }
                    report.rows.push_back(row);
                }
            }
        }
    }
    return report;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Finite-length analysis, simulation and tuning of frameless ALOHA with k-MUD", "frameless"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "show help for every subcommand");

    auto take_last = [](CLI::App* cmd) {
        cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        return cmd;
    };
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    const std::string config_help = "JSON file whose keys mirror the flags; flags override it";

    CurveOptions analyze_opts;
    double epsilon = 1e-15;
    auto* analyze_cmd = take_last(app.add_subcommand("analyze", "exact PER and throughput over an m sweep"));
    add_curve_options(*analyze_cmd, analyze_opts);
    analyze_cmd->add_option("--epsilon", epsilon, "pruning threshold per state (0 disables)")
        ->check(CLI::NonNegativeNumber);
    analyze_cmd->add_option("--config", config_help);

    CurveOptions sim_opts;
    long runs = 10000;
    uint64_t seed = 1;
    auto* sim_cmd = take_last(app.add_subcommand("simulate", "Monte Carlo SIC decoding over an m sweep"));
    add_curve_options(*sim_cmd, sim_opts);
    sim_cmd->add_option("--runs", runs, "contention periods per point")
        ->check(CLI::Range(1L, std::numeric_limits<long>::max()));
    sim_cmd->add_option("--seed", seed, "base seed");
    sim_cmd->add_option("--config", config_help);

    int opt_n = 0, opt_k = 0, opt_m_min = 0, opt_m_max = 0;
    OptimizerConfig opt_config;
    opt_config.beta_max = 0.0;
    std::string opt_search = "unimodal", opt_format = "json", opt_out;
    auto* opt_cmd = take_last(app.add_subcommand("optimize", "search beta maximizing peak throughput"));
    opt_cmd->add_option("--n", opt_n, "number of users")->required()->check(CLI::PositiveNumber);
    opt_cmd->add_option("--k", opt_k, "MUD capability")->required()->check(CLI::PositiveNumber);
    opt_cmd->add_option("--beta-min", opt_config.beta_min, "lower end of the beta grid")->check(CLI::PositiveNumber);
    opt_cmd->add_option("--beta-max", opt_config.beta_max, "upper end of the beta grid (default min(n, 2.5 (k+1)))");
    opt_cmd->add_option("--coarse-step", opt_config.coarse_step, "coarse beta step")->check(CLI::PositiveNumber);
    opt_cmd->add_option("--refine-step", opt_config.refine_step, "fine beta step")->check(CLI::PositiveNumber);
    opt_cmd->add_option("--m-min", opt_m_min, "smallest slot count searched (default 0.1 n)");
    opt_cmd->add_option("--m-max", opt_m_max, "largest slot count searched (default 2 n)");
    opt_cmd->add_option("--search", opt_search, "peak search over m")
        ->check(CLI::IsMember({"unimodal", "exhaustive"}));
    opt_cmd->add_option("--epsilon", opt_config.epsilon, "pruning threshold")->check(CLI::NonNegativeNumber);
    opt_cmd->add_option("--format", opt_format, "output format")->check(CLI::IsMember({"json", "table"}));
    opt_cmd->add_option("--out", opt_out, "write data here instead of stdout");
    opt_cmd->add_option("--config", config_help);

    ValidationConfig val;
    auto* val_cmd = take_last(app.add_subcommand("validate", "analysis vs oracle vs simulator on small instances"));
    val_cmd->add_option("--max-n", val.max_n, "largest n")->check(CLI::PositiveNumber);
    val_cmd->add_option("--max-m", val.max_m, "largest m")->check(CLI::PositiveNumber);
    val_cmd->add_option("--max-k", val.max_k, "largest k")->check(CLI::Range(1, kMaxAnalysisK));
    val_cmd->add_option("--max-nm", val.max_nm, "largest n*m enumerated")->check(CLI::PositiveNumber);
    val_cmd->add_option("--tolerance", val.tolerance, "allowed |analysis - oracle|")->check(CLI::NonNegativeNumber);
    val_cmd->add_option("--runs", val.runs, "simulated periods per point (0 skips)")->check(CLI::NonNegativeNumber);
    val_cmd->add_option("--seed", val.seed, "base seed");
    val_cmd->add_option("--config", config_help);

    try {
        std::vector<std::string> args;
        for (int i = 1; i < argc; ++i)
            args.emplace_back(argv[i]);
        args = expand_config(args);
        std::reverse(args.begin(), args.end());
        app.parse(args);

        if (*analyze_cmd)
            return cmd_analyze(analyze_opts, epsilon, out);
        if (*sim_cmd)
            return cmd_simulate(sim_opts, runs, seed, out);
        if (*opt_cmd) {
            if (opt_config.beta_max == 0.0)
                opt_config.beta_max = std::min<double>(opt_n, 2.5 * (opt_k + 1));
            return cmd_optimize(opt_n, opt_k, opt_config, opt_m_min, opt_m_max, opt_search, opt_format, opt_out,
                                out, err);
        }
        if (*val_cmd) {
            if (val.max_nm > kOracleMaxCells)
                throw UsageError("--max-nm " + std::to_string(val.max_nm) + " exceeds the oracle budget of "
                                 + std::to_string(kOracleMaxCells) + " cells");
            return run_validate_command(val, {}, out, err);
        }
    } catch (const CLI::ParseError& e) {
        // Help requests exit 0 through here as well.
        return app.exit(e, out, err) == 0 ? kOk : kUsageError;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    }
    return kUsageError;
}

} // namespace frameless::cli
