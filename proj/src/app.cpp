#include "ctlcap/app.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <omp.h>

#include "ctlcap/capacity.hpp"
#include "ctlcap/carryfree.hpp"
#include "ctlcap/distributions.hpp"
#include "ctlcap/error.hpp"
#include "ctlcap/side_info.hpp"
#include "ctlcap/simulate.hpp"

namespace ctlcap {
namespace {

using json = nlohmann::ordered_json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double or_nan(std::optional<double> v)
{
    return v.value_or(kNan);
}

json json_list(std::vector<double> const& xs)
{
    auto out = json::array();
    for (double x : xs) {
        out.push_back(json_number(x));
    }
    return out;
}

CapacityQuery query_of(RunConfig const& c)
{
    CapacityQuery q;
    q.coarse_grid_points = c.grid_points;
    q.refine_tolerance = c.refine_tolerance;
    return q;
}

json diagnostics_of(CapacityResult const& r)
{
    auto const& d = r.diagnostics;
    return json{{"grid_evaluations", d.grid_evaluations},
                {"refinement_iterations", d.refinement_iterations},
                {"flat", d.flat},
                {"search_bound_hit", d.search_bound_hit},
                {"search_halfwidth", json_number(d.search_halfwidth)}};
}

ActuationDistribution require_dist(RunConfig const& c)
{
    if (c.dist_spec.empty()) {
        throw ConfigError("command '" + c.command + "' needs a distribution (--dist)");
    }
    return parse_distribution(c.dist_spec);
}

double require_a(RunConfig const& c)
{
    if (!c.a) {
        throw ConfigError("command '" + c.command + "' needs --a");
    }
    return *c.a;
}

std::vector<double> default_eta_grid()
{
    // 20 points, geometric from 0.01 to 64.
    std::vector<double> g;
    for (int i = 0; i < 20; ++i) {
        g.push_back(0.01 * std::pow(6400.0, i / 19.0));
    }
    return g;
}

Report run_capacity(RunConfig const& c)
{
    auto const dist = require_dist(c);
    auto const q = query_of(c);
    auto const sh = shannon_capacity(dist, q);
    auto const ze = zero_error_capacity(dist);
    auto const c2 = second_moment_closed_form(dist);

    Report r;
    r.results.columns = {"dist", "C_sh", "d_sh", "C_ze", "d_ze", "C_2", "d_2"};
    std::vector<TableCell> row{dist.describe(), sh.value_bits, or_nan(sh.optimal_d), ze.value_bits,
                               or_nan(ze.optimal_d), c2.value_bits, or_nan(c2.optimal_d)};
    r.diagnostics["shannon"] = diagnostics_of(sh);
    if (c.eta) {
        auto const ce = eta_capacity(dist, *c.eta, q);
        r.results.columns.insert(r.results.columns.end(), {"eta", "C_eta", "d_eta"});
        row.insert(row.end(), {*c.eta, ce.value_bits, or_nan(ce.optimal_d)});
        r.diagnostics["eta"] = diagnostics_of(ce);
    }
    r.results.add_row(std::move(row));
    return r;
}

Report run_curve(RunConfig const& c)
{
    auto const dist = require_dist(c);
    auto const etas = c.etas.empty() ? default_eta_grid() : c.etas;
    auto const curve = capacity_curve(dist, etas, query_of(c));
    Report r;
    r.config["etas"] = json_list(etas);
    r.results.columns = {"eta", "C_eta", "d_star"};
    for (auto const& p : curve) {
        r.results.add_row({p.eta, p.value_bits, or_nan(p.optimal_d)});
    }
    r.diagnostics["C_sh"] = json_number(shannon_capacity(dist, query_of(c)).value_bits);
    r.diagnostics["C_ze"] = json_number(zero_error_capacity(dist).value_bits);
    return r;
}

Report run_sweep(RunConfig const& c)
{
    std::vector<double> grid = c.ratio_grid;
    if (grid.empty()) {
        for (int i = 0; i <= 16; ++i) {
            grid.push_back(-2.0 + 0.5 * i);
        }
    }
    auto const q = query_of(c);
    Report r;
    r.config["log2_ratio_grid"] = json_list(grid);
    r.results.columns = {"family", "log2_ratio", "C_sh", "C_ze", "C_2"};
    for (std::string family : {"uniform", "gaussian", "erasure"}) {
        for (double lr : grid) {
            double const ratio = std::exp2(lr);
            // Unit standard deviation, mean = ratio; erasure uses p with mean/sigma = sqrt(p/(1-p)).
            auto const dist = family == "uniform"    ? ActuationDistribution::uniform(ratio - std::sqrt(3.0),
                                                                                      ratio + std::sqrt(3.0))
                              : family == "gaussian" ? ActuationDistribution::gaussian(ratio, 1.0)
                                                     : ActuationDistribution::scaled_bernoulli(
                                                           1.0, ratio * ratio / (1.0 + ratio * ratio));
            r.results.add_row({family, lr, shannon_capacity(dist, q).value_bits,
                               zero_error_capacity(dist).value_bits, second_moment_closed_form(dist).value_bits});
        }
    }
    return r;
}

Report run_sideinfo(RunConfig const& c)
{
    auto const dist = require_dist(c);
    auto const q = query_of(c);
    auto const sh = si_value_curve(dist, c.si_bits, CapacitySense::shannon(), q);
    Report r;
    r.config["si_bits"] = c.si_bits;
    r.results.columns = {"k", "C_sh"};
    std::vector<SideInfoCurvePoint> et;
    if (c.eta) {
        et = si_value_curve(dist, c.si_bits, CapacitySense::moment(*c.eta), q);
        r.results.columns.push_back("C_eta");
    }
    for (std::size_t i = 0; i < sh.size(); ++i) {
        std::vector<TableCell> row{static_cast<std::int64_t>(sh[i].bits), sh[i].value_bits};
        if (c.eta) {
            row.push_back(et[i].value_bits);
        }
        r.results.add_row(std::move(row));
    }
    return r;
}

SimulationParams sim_params(RunConfig const& c, int horizon, int paths)
{
    SimulationParams p;
    p.horizon = c.horizon.value_or(horizon);
    p.paths = c.paths.value_or(paths);
    p.seed = c.seed;
    if (c.eta) {
        p.etas = {*c.eta};
    }
    if (!c.etas.empty()) {
        p.etas = c.etas;
    }
    p.thresholds = c.thresholds.empty() ? std::vector<double>{1e6} : c.thresholds;
    return p;
}

Report run_simulate(RunConfig const& c)
{
    auto const dist = require_dist(c);
    SystemSpec const spec{require_a(c), dist, 1.0, c.process_noise, c.obs_noise};
    StrategySpec strategy;
    double const d = c.d ? *c.d : shannon_capacity(dist, query_of(c)).optimal_d.value_or(0.0);
    if (c.strategy == "linear") {
        strategy = StrategySpec::linear(d);
    } else if (c.strategy == "zero") {
        strategy = StrategySpec::zero();
    } else if (c.strategy == "random") {
        strategy = StrategySpec::random_gain(std::min(2.0 * d, 0.0), std::max(2.0 * d, 0.0));
    } else {
        throw ConfigError("unknown strategy '" + c.strategy + "'");
    }
    auto const params = sim_params(c, 2000, 10000);
    auto const rep = simulate(spec, strategy, params);

    Report r;
    r.config["a"] = json_number(spec.a);
    r.config["strategy"] = strategy.name();
    r.config["d"] = json_number(d);
    r.config["horizon"] = params.horizon;
    r.config["paths"] = params.paths;
    r.config["etas"] = json_list(params.etas);
    r.config["thresholds"] = json_list(params.thresholds);
    r.results.columns = {"n", "mean_log2"};
    for (double eta : params.etas) {
        r.results.columns.push_back("log2_moment_eta_" + format_number(eta));
    }
    for (double m : params.thresholds) {
        r.results.columns.push_back("frac_above_" + format_number(m));
    }
    for (int n = 0; n <= rep.horizon; ++n) {
        auto const i = static_cast<std::size_t>(n);
        std::vector<TableCell> row{static_cast<std::int64_t>(n), rep.mean_log2[i]};
        for (auto const& m : rep.log2_moment) {
            row.push_back(m[i]);
        }
        for (auto const& f : rep.fraction_above) {
            row.push_back(f[i]);
        }
        r.results.add_row(std::move(row));
    }
    r.diagnostics["growth_slope_bits"] = json_number(rep.growth_slope_bits);
    r.diagnostics["moment_slope_bits"] = json_list(rep.moment_slope_bits);
    r.diagnostics["overflow_paths"] = rep.overflow_paths;
    return r;
}

Report run_scan(RunConfig const& c)
{
    auto const dist = require_dist(c);
    if (c.a_grid.empty()) {
        throw ConfigError("scan needs --a-grid");
    }
    auto const sense = c.eta ? CapacitySense::moment(*c.eta) : CapacitySense::shannon();
    auto params = sim_params(c, 2000, 10000);
    auto const scan = threshold_scan(dist, sense, c.a_grid, params, query_of(c));
    Report r;
    r.config["sense"] = sense.name();
    r.config["a_grid"] = json_list(c.a_grid);
    r.config["horizon"] = params.horizon;
    r.config["paths"] = params.paths;
    r.results.columns = {"a", "log2_a", "slope_bits", "verdict"};
    for (auto const& p : scan.points) {
        r.results.add_row({p.a, p.log2_a, p.slope, to_string(p.verdict)});
    }
    r.diagnostics["capacity_bits"] = json_number(scan.capacity_bits);
    r.diagnostics["d_star"] = json_number(scan.d_star);
    r.diagnostics["critical_log2_a"] = scan.critical_log2_a ? json_number(*scan.critical_log2_a) : json(nullptr);
    return r;
}

Report run_converse(RunConfig const& c)
{
    auto const dist = require_dist(c);
    auto params = sim_params(c, 2000, 10000);
    auto const res = strong_converse_experiment(dist, require_a(c), params.thresholds, params);
    Report r;
    r.config["a"] = json_number(res.a);
    r.config["horizon"] = params.horizon;
    r.config["paths"] = params.paths;
    r.config["thresholds"] = json_list(res.thresholds);
    r.results.columns = {"strategy", "M", "n", "fraction_above"};
    for (auto const& trace : res.traces) {
        for (std::size_t t = 0; t < res.thresholds.size(); ++t) {
            auto const& f = trace.fraction_above[t];
            for (std::size_t n = 0; n < f.size(); ++n) {
                r.results.add_row({trace.strategy.name(), res.thresholds[t], static_cast<std::int64_t>(n), f[n]});
            }
        }
    }
    r.diagnostics["C_sh"] = json_number(res.shannon_capacity_bits);
    r.diagnostics["log2_a"] = json_number(std::log2(res.a));
    auto finals = json::object();
    for (auto const& trace : res.traces) {
        finals[trace.strategy.name()] = json_list(trace.final_fraction);
    }
    r.diagnostics["final_fraction"] = std::move(finals);
    return r;
}

Report run_carryfree(RunConfig const& c)
{
    if (c.dist_spec.empty()) {
        throw ConfigError("carryfree needs a gain spec cf:g_det,g_ran[,...]");
    }
    auto const gain = CarryFreeGain::parse(c.dist_spec);
    DegreeParams p;
    p.horizon = c.horizon.value_or(1000);
    p.paths = c.paths.value_or(1000);
    p.seed = c.seed;
    p.window = c.window;
    auto const rep = simulate_degrees(gain, c.g_a, p);

    Report r;
    r.config["gain"] = gain.describe();
    r.config["g_a"] = c.g_a;
    r.config["horizon"] = p.horizon;
    r.config["paths"] = p.paths;
    r.config["window"] = p.window;
    r.results.columns = {"n", "max_degree", "mean_degree"};
    for (std::size_t n = 0; n < rep.max_degree.size(); ++n) {
        r.results.add_row({static_cast<std::int64_t>(n), rep.max_degree[n], rep.mean_degree[n]});
    }
    r.diagnostics["C_ze"] = cf_zero_error_capacity(gain);
    r.diagnostics["C_sh_without_side_info"] = cf_shannon_capacity(gain.without_side_information());
    r.diagnostics["one_step_decay"] = json_number(one_step_decay(gain, c.decay_samples, c.seed, c.window));
    r.diagnostics["bounded"] = rep.bounded;
    r.diagnostics["overall_max_degree"] = rep.overall_max;
    r.diagnostics["mean_growth_per_step"] = json_number(rep.mean_growth_per_step);
    return r;
}

}  // namespace

Report execute(RunConfig const& config)
{
    if (config.format != "csv" && config.format != "json") {
        throw ConfigError("format must be csv or json");
    }
    if (config.threads < 0) {
        throw ConfigError("thread count must be nonnegative");
    }
    if (config.threads > 0) {
        omp_set_num_threads(config.threads);
    }
    Report r;
    auto const& cmd = config.command;
    if (cmd == "capacity") {
        r = run_capacity(config);
    } else if (cmd == "curve") {
        r = run_curve(config);
    } else if (cmd == "sweep") {
        r = run_sweep(config);
    } else if (cmd == "sideinfo") {
        r = run_sideinfo(config);
    } else if (cmd == "simulate") {
        r = run_simulate(config);
    } else if (cmd == "scan") {
        r = run_scan(config);
    } else if (cmd == "converse") {
        r = run_converse(config);
    } else if (cmd == "carryfree") {
        r = run_carryfree(config);
    } else {
        throw ConfigError("unknown command '" + cmd + "'");
    }
    json head = json::object();
    head["command"] = cmd;
    if (!config.dist_spec.empty()) {
        head["dist"] = config.dist_spec;
    }
    head["seed"] = config.seed;
    head.update(r.config);
    r.config = std::move(head);
    return r;
}

std::string render(Report const& report, RunConfig const& config)
{
    return config.format == "json" ? to_json(report) : to_csv(report.results);
}

int run(RunConfig const& config, std::ostream& out, std::ostream& err)
{
    try {
        auto const text = render(execute(config), config);
        if (config.out_path) {
            std::ofstream file(*config.out_path, std::ios::binary);
            if (!file) {
                throw ConfigError("cannot open output file '" + *config.out_path + "'");
            }
            file << text;
        } else {
            out << text;
        }
        return kExitOk;
    } catch (ConfigError const& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (InvalidArgument const& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (UnboundedSupport const& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (std::exception const& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumeric;
    }
}

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err)
{
    RunConfig c;
    CLI::App app{"Control capacities of multiplicative actuation channels"};
    app.add_option("command", c.command, "capacity | curve | sweep | sideinfo | simulate | scan | converse | carryfree")
        ->required()
        ->check(CLI::IsMember({"capacity", "curve", "sweep", "sideinfo", "simulate", "scan", "converse", "carryfree"}));
    std::string positional_dist;
    app.add_option("spec", positional_dist, "distribution or carry-free gain spec");
    app.add_option("--dist", c.dist_spec, "distribution or carry-free gain spec");
    app.add_option("--eta", c.eta, "moment order");
    app.add_option("--etas", c.etas, "comma-separated moment orders")->delimiter(',');
    app.add_option("--si-bits", c.si_bits, "bits of interval side information")->check(CLI::Range(0, 20));
    app.add_option("--a", c.a, "open-loop gain");
    app.add_option("--a-grid", c.a_grid, "comma-separated open-loop gains")->delimiter(',');
    app.add_option("--ratio-grid", c.ratio_grid, "comma-separated log2(mean/sigma) values for sweep")->delimiter(',');
    app.add_option("--horizon", c.horizon, "steps per path")->check(CLI::PositiveNumber);
    app.add_option("--paths", c.paths, "Monte Carlo paths")->check(CLI::PositiveNumber);
    app.add_option("--seed", c.seed, "random seed");
    app.add_option("--out", c.out_path, "output file (default stdout)");
    app.add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--threshold-M", c.thresholds, "comma-separated tightness thresholds")->delimiter(',');
    app.add_option("--strategy", c.strategy, "linear | zero | random")
        ->check(CLI::IsMember({"linear", "zero", "random"}));
    app.add_option("--d", c.d, "control gain (default: Shannon-optimal)");
    app.add_option("--process-noise", c.process_noise, "std of Gaussian process noise W");
    app.add_option("--obs-noise", c.obs_noise, "std of Gaussian observation noise V");
    app.add_option("--grid-points", c.grid_points, "coarse optimizer grid size (odd)");
    app.add_option("--refine-tol", c.refine_tolerance, "golden-section tolerance on d");
    app.add_option("--g-a", c.g_a, "carry-free state gain degree");
    app.add_option("--window", c.window, "carry-free window width");
    app.add_option("--decay-samples", c.decay_samples, "samples for the one-step decay estimate");
    app.add_option("--threads", c.threads, "OpenMP threads (0 = runtime default)");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (CLI::ParseError const& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
    }
    if (!positional_dist.empty()) {
        if (!c.dist_spec.empty() && c.dist_spec != positional_dist) {
            err << "config error: distribution given twice\n";
            return kExitConfig;
        }
        c.dist_spec = positional_dist;
    }
    return run(c, out, err);
}

}  // namespace ctlcap
