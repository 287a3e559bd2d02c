#include "rsmv/cli.hpp"

#include "rsmv/config.hpp"
#include "rsmv/error.hpp"
#include "rsmv/frontier.hpp"
#include "rsmv/montecarlo.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <utility>

namespace rsmv::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Monte Carlo criteria need at least this many paths to be conclusive.
constexpr long kMinConclusivePaths = 10000;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// Collects output files in memory and publishes them with write-to-temp
/// plus rename, so a failing command leaves nothing behind.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

    void commit() const {
        fs::create_directories(dir_);
        for (const auto& [name, content] : files_) {
            const fs::path target = dir_ / name;
            const fs::path tmp = dir_ / (name + ".tmp");
            {
                std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
                out << content;
                if (!out) throw std::runtime_error("cannot write " + tmp.string());
            }
            fs::rename(tmp, target);
        }
    }

private:
    fs::path dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

struct Options {
    std::string config;
    std::string out_dir = ".";
    std::string z;
    std::string overlay;
    std::optional<long> paths;
    std::optional<std::uint64_t> seed;
    std::optional<double> step;
    std::optional<double> dt;
    std::string law = "optimal";
    bool per_path = false;
    bool antithetic = false;
};

struct Loaded {
    ModelConfig cfg;
    std::shared_ptr<const Model> model;
    Analysis analysis;
};

Loaded load(const Options& opt) {
    Loaded l;
    l.cfg = load_config(opt.config);
    if (opt.step) l.cfg.run.h = *opt.step;
    if (opt.paths) l.cfg.run.paths = *opt.paths;
    if (opt.seed) l.cfg.run.seed = *opt.seed;
    if (opt.dt) l.cfg.run.dt = *opt.dt;
    if (opt.antithetic) l.cfg.run.antithetic = true;
    l.model = build_model(l.cfg);
    l.analysis = analyze(l.model, l.cfg.grid_step());
    return l;
}

json summary_json(const Analysis& a, double h) {
    json j;
    j["h"] = h;
    j["p0"] = a.inputs.p0;
    j["g0"] = a.inputs.g0;
    j["delta"] = a.delta.delta;
    j["f_part"] = a.delta.f_part;
    j["jump_part"] = a.delta.jump_part;
    j["gamma"] = a.gamma;
    j["feasible"] = a.feasible();
    j["z_zero"] = a.z_zero;
    j["quadratic_coefficient"] = a.inputs.quadratic_coefficient();
    j["condition_61"] = a.inputs.quadratic_coefficient() < 0.0;  // key name fixed by the output contract
    j["lower_bound_b"] = a.solution->lower_bound_b;
    j["upper_bound_B"] = a.solution->upper_bound_B;
    if (a.inputs.quadratic_coefficient() < 0.0) {
        const auto mv = min_variance_point(a.inputs);
        j["z_min"] = mv.z_min;
        j["var_min"] = mv.var_min;
    }
    j["warnings"] = a.model->market.warnings();
    return j;
}

std::vector<double> z_grid_for(const Options& opt, const ModelConfig& cfg, double z_floor, double x0) {
    if (!opt.z.empty()) return parse_z_list(opt.z);
    if (!cfg.z.empty()) return cfg.z;
    std::vector<double> out;
    const double step = 0.05 * std::max(std::abs(x0), 1.0);
    for (int k = 0; k <= 10; ++k) out.push_back(z_floor + step * k);
    return out;
}

std::string frontier_csv(const std::vector<FrontierPoint>& pts) {
    std::string s = "z,lambda_star,variance,std_dev\n";
    for (const auto& p : pts) {
        s += num(p.z) + ',' + num(p.lambda_star) + ',' + num(p.variance) + ',' + num(p.std_dev) + '\n';
    }
    return s;
}

int cmd_solve(const Options& opt, std::ostream& out) {
    const auto l = load(opt);
    const auto& sol = *l.analysis.solution;
    std::string csv = "t,regime,psi,p,g\n";
    for (std::size_t k = 0; k < sol.grid.size(); ++k) {
        const auto c = static_cast<Eigen::Index>(k);
        for (int i = 0; i < sol.n_regimes(); ++i) {
            csv += num(sol.grid[k]) + ',' + std::to_string(i + 1) + ',' + num(sol.psi(i, c)) + ',' +
                   num(sol.p(i, c)) + ',' + num(sol.g(i, c)) + '\n';
        }
    }
    const auto summary = summary_json(l.analysis, l.cfg.grid_step());
    OutputSet files(opt.out_dir);
    files.add("solutions.csv", std::move(csv));
    files.add("summary.json", summary.dump(2) + "\n");
    files.commit();
    out << summary.dump(2) << '\n';
    return kOk;
}

int cmd_frontier(const Options& opt, std::ostream& out) {
    OutputSet files(opt.out_dir);
    json report = json::array();
    if (opt.overlay.empty()) {
        const auto l = load(opt);
        check_inputs(l.analysis.inputs);
        const auto mv = min_variance_point(l.analysis.inputs);
        const auto pts = frontier_curve(l.analysis.inputs, z_grid_for(opt, l.cfg, mv.z_min, l.cfg.x0));
        auto header = summary_json(l.analysis, l.cfg.grid_step());
        files.add("frontier.csv", frontier_csv(pts));
        files.add("frontier.json", header.dump(2) + "\n");
        report.push_back({{"csv", "frontier.csv"}, {"z_min", mv.z_min}, {"var_min", mv.var_min}});
    } else {
        std::vector<std::string> labels;
        std::stringstream ss(opt.overlay);
        for (std::string tok; std::getline(ss, tok, ',');) {
            if (!tok.empty()) labels.push_back(tok);
        }
        std::vector<Loaded> runs;
        double z_floor = -INFINITY;
        for (const auto& label : labels) {
            double f = 0.0;
            try {
                f = std::stod(label);
            } catch (const std::exception&) {
                throw ValidationError("ConfigParse", "bad density in --density-overlay: " + label);
            }
            Loaded l;
            l.cfg = load_config(opt.config);
            if (opt.step) l.cfg.run.h = *opt.step;
            l.cfg.density = {{0.0, f}};
            l.model = build_model(l.cfg);
            l.analysis = analyze(l.model, l.cfg.grid_step());
            check_inputs(l.analysis.inputs);
            z_floor = std::max(z_floor, min_variance_point(l.analysis.inputs).z_min);
            runs.push_back(std::move(l));
        }
        for (std::size_t k = 0; k < runs.size(); ++k) {
            const auto& l = runs[k];
            const auto pts = frontier_curve(l.analysis.inputs, z_grid_for(opt, l.cfg, z_floor, l.cfg.x0));
            const std::string base = "frontier_f" + labels[k];
            files.add(base + ".csv", frontier_csv(pts));
            auto header = summary_json(l.analysis, l.cfg.grid_step());
            header["density"] = std::stod(labels[k]);
            files.add(base + ".json", header.dump(2) + "\n");
            report.push_back({{"csv", base + ".csv"}, {"density", std::stod(labels[k])}});
        }
    }
    files.commit();
    out << report.dump(2) << '\n';
    return kOk;
}

json sim_json(const SimResult& r) {
    const auto agree = dual_cost_check(r);
    return {{"n_paths", r.n_paths},
            {"reference_z", r.reference_z},
            {"mean_terminal", r.mean_terminal.value},
            {"se_mean", r.mean_terminal.se},
            {"var_terminal", r.var_terminal.value},
            {"se_var", r.var_terminal.se},
            {"j1_weighted", r.j1_weighted.value},
            {"se_j1_weighted", r.j1_weighted.se},
            {"j_mv_sampled", r.j_mv_sampled.value},
            {"j_mv_weighted", r.j_mv_weighted.value},
            {"dual_cost", {{"difference", agree.difference}, {"joint_se", agree.joint_se}, {"pass", agree.pass}}},
            {"max_abs_wealth", r.max_abs_wealth}};
}

SimConfig sim_config(const ModelConfig& cfg, bool keep_paths) {
    SimConfig s;
    s.n_paths = cfg.run.paths;
    s.euler_step = cfg.run.dt;
    s.base_seed = cfg.run.seed;
    s.antithetic = cfg.run.antithetic;
    s.keep_paths = keep_paths;
    return s;
}

int cmd_simulate(const Options& opt, std::ostream& out) {
    const auto l = load(opt);
    const auto& a = l.analysis;
    LawPtr law;
    json analytic;
    if (opt.law == "zero") {
        law = std::make_shared<ZeroLaw>(l.model->market.n_assets());
        analytic["z_zero"] = a.z_zero;
    } else if (opt.law == "min") {
        const auto mv = min_variance(a);
        law = mv.law;
        analytic = {{"z", mv.z_min}, {"variance", mv.var_min}, {"lambda_star", 0.0}};
    } else {
        std::optional<double> z;
        if (!opt.z.empty()) {
            const auto zs = parse_z_list(opt.z);
            if (zs.size() != 1) throw ValidationError("ConfigParse", "simulate takes a single --z value");
            z = zs.front();
        } else if (!l.cfg.z.empty()) {
            z = l.cfg.z.front();
        }
        if (opt.law == "feasible") {
            const double target = z.value_or(a.z_zero);
            law = feasible_portfolio(a, target);
            analytic = {{"z", target}, {"gamma", a.gamma}, {"z_zero", a.z_zero}};
        } else if (opt.law == "optimal") {
            const double target = z.value_or(min_variance_point(a.inputs).z_min);
            const auto pt = frontier_curve(a.inputs, {target}).front();
            law = optimal_law(a, target);
            analytic = {{"z", pt.z}, {"variance", pt.variance}, {"lambda_star", pt.lambda_star}};
        } else {
            throw ValidationError("ConfigParse", "unknown --law " + opt.law);
        }
    }
    const auto res = simulate(*l.model, *law, sim_config(l.cfg, opt.per_path));
    json report = {{"law", opt.law},
                   {"dt", l.cfg.run.dt},
                   {"seed", l.cfg.run.seed},
                   {"antithetic", l.cfg.run.antithetic},
                   {"analytic", analytic},
                   {"simulation", sim_json(res)}};
    OutputSet files(opt.out_dir);
    files.add("simulate.json", report.dump(2) + "\n");
    if (opt.per_path) {
        std::string csv = "path_id,tau,x_at_exit\n";
        for (const auto& p : res.paths) csv += std::to_string(p.path_id) + ',' + num(p.tau) + ',' + num(p.x_at_exit) + '\n';
        files.add("paths.csv", std::move(csv));
    }
    files.commit();
    out << report.dump(2) << '\n';
    return kOk;
}

json criterion(const std::string& name, const std::string& status, json detail) {
    return {{"name", name}, {"status", status}, {"detail", std::move(detail)}};
}

std::string pass_fail(bool ok) { return ok ? "PASS" : "FAIL"; }

int cmd_validate(const Options& opt, std::ostream& out, std::ostream& err) {
    const auto l = load(opt);
    const auto& a = l.analysis;
    const auto& sol = *a.solution;
    const auto& market = l.model->market;
    json criteria = json::array();

    criteria.push_back(criterion("p_positive", pass_fail(sol.p.minCoeff() > 0.0), {{"min_p", sol.p.minCoeff()}}));
    const double g_min = sol.g.minCoeff();
    const double g_max = sol.g.maxCoeff();
    criteria.push_back(criterion("g_bounds", pass_fail(g_min > 0.0 && g_max <= 1.0 + 1e-10),
                                 {{"min_g", g_min}, {"max_g", g_max}}));
    double r_min = INFINITY;
    for (int i = 0; i < market.n_regimes(); ++i) {
        for (const auto& s : market.segments(i)) r_min = std::min(r_min, s.r);
    }
    if (r_min > 0.0) {
        const double below = sol.g.leftCols(sol.g.cols() - 1).maxCoeff();
        criteria.push_back(criterion("g_below_one_before_T", pass_fail(below < 1.0), {{"max_g_before_T", below}}));
    }
    criteria.push_back(criterion("psi_positive", pass_fail(sol.psi.minCoeff() > 0.0), {{"min_psi", sol.psi.minCoeff()}}));
    criteria.push_back(criterion("delta_nonnegative",
                                 pass_fail(a.delta.delta >= 0.0 && a.delta.f_part >= 0.0 && a.delta.jump_part >= 0.0),
                                 {{"delta", a.delta.delta}}));
    const double quad = a.inputs.quadratic_coefficient();
    criteria.push_back(criterion("frontier_condition", pass_fail(quad < 0.0), {{"quadratic_coefficient", quad}}));
    criteria.push_back(criterion("feasibility_gamma", pass_fail(a.gamma > 0.0), {{"gamma", a.gamma}}));

    const bool conclusive = l.cfg.run.paths >= kMinConclusivePaths;
    const auto mc_status = [&](bool ok) { return conclusive ? pass_fail(ok) : std::string("INCONCLUSIVE"); };
    const auto cfg = sim_config(l.cfg, false);
    if (quad < 0.0) {
        const auto mv = min_variance_point(a.inputs);
        std::vector<double> zs = l.cfg.z;
        if (!opt.z.empty()) zs = parse_z_list(opt.z);
        if (zs.empty()) zs = {mv.z_min};
        const auto rows = frontier_validation(a, zs, cfg);
        for (const auto& row : rows) {
            const json detail = {{"z", row.z},
                                 {"analytic_variance", row.analytic_variance},
                                 {"simulated_mean", row.sim.mean_terminal.value},
                                 {"se_mean", row.sim.mean_terminal.se},
                                 {"simulated_variance", row.sim.var_terminal.value},
                                 {"se_var", row.sim.var_terminal.se},
                                 {"mean_z_score", row.mean_z_score},
                                 {"var_z_score", row.var_z_score}};
            criteria.push_back(criterion("mc_frontier_z=" + num(row.z),
                                         mc_status(std::abs(row.mean_z_score) <= 3.0 && std::abs(row.var_z_score) <= 3.0),
                                         detail));
        }
        if (!rows.empty()) {
            const auto agree = dual_cost_check(rows.front().sim);
            criteria.push_back(criterion("dual_cost_check", mc_status(agree.pass),
                                         {{"difference", agree.difference}, {"joint_se", agree.joint_se}}));
        }
    }
    // All-bond strategy reproduces z0. The Euler recursion (1 + r dt)^n
    // undershoots exp(r T) by about r^2 T dt / 2 relative, which is added to
    // the 3 SE band because single-regime runs have zero sampling error.
    const auto bond = simulate(*l.model, ZeroLaw(market.n_assets()), cfg);
    double r_max = 0.0;
    for (int i = 0; i < market.n_regimes(); ++i) {
        for (const auto& s : market.segments(i)) r_max = std::max(r_max, s.r);
    }
    const double euler_allowance = std::abs(a.z_zero) * r_max * r_max * market.horizon() * l.cfg.run.dt;
    const double z0_gap = bond.j1_weighted.value - a.z_zero;
    criteria.push_back(criterion("z_zero_identity",
                                 mc_status(std::abs(z0_gap) <= 3.0 * bond.j1_weighted.se + euler_allowance),
                                 {{"z_zero", a.z_zero},
                                  {"simulated", bond.j1_weighted.value},
                                  {"se", bond.j1_weighted.se},
                                  {"euler_allowance", euler_allowance}}));

    bool any_fail = false;
    bool any_inconclusive = false;
    for (const auto& c : criteria) {
        any_fail |= c["status"] == "FAIL";
        any_inconclusive |= c["status"] == "INCONCLUSIVE";
    }
    json report = {{"criteria", criteria}, {"paths", l.cfg.run.paths}, {"all_pass", !any_fail && !any_inconclusive}};
    OutputSet files(opt.out_dir);
    files.add("validate.json", report.dump(2) + "\n");
    files.commit();
    out << report.dump(2) << '\n';
    if (any_inconclusive && !any_fail) {
        err << json{{"warning", "Monte Carlo criteria inconclusive"},
                    {"detail", "fewer than " + std::to_string(kMinConclusivePaths) + " paths"}}
                   .dump()
            << '\n';
    }
    return any_fail ? kValidationFailed : kOk;
}

void error_json(std::ostream& err, const std::string& code, const std::string& message) {
    err << json{{"error", code}, {"message", message}}.dump() << '\n';
}

} // namespace

std::vector<double> parse_z_list(const std::string& text) {
    std::vector<double> out;
    try {
        if (text.find(':') != std::string::npos) {
            std::stringstream ss(text);
            std::string a;
            std::string b;
            std::string c;
            std::getline(ss, a, ':');
            std::getline(ss, b, ':');
            std::getline(ss, c, ':');
            const double start = std::stod(a);
            const double step = std::stod(b);
            const double stop = std::stod(c);
            if (!(step > 0.0) || stop < start) throw ValidationError("ConfigParse", "bad z range " + text);
            const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
            for (long k = 0; k <= count; ++k) out.push_back(start + step * static_cast<double>(k));
        } else {
            std::stringstream ss(text);
            for (std::string tok; std::getline(ss, tok, ',');) {
                if (!tok.empty()) out.push_back(std::stod(tok));
            }
        }
    } catch (const std::logic_error&) {
        throw ValidationError("ConfigParse", "cannot parse z list '" + text + "'");
    }
    if (out.empty()) throw ValidationError("ConfigParse", "empty z list");
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mean-variance efficient frontiers under regime switching with a random exit time", "rsmv"};
    app.require_subcommand(1);
    Options opt;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "Model config (JSON)")->required();
        sub->add_option("--out", opt.out_dir, "Output directory");
        sub->add_option("--step", opt.step, "Backward grid step h in years (default 1e-4 T)");
    };
    auto sim_flags = [&](CLI::App* sub) {
        sub->add_option("--paths", opt.paths, "Number of Monte Carlo paths");
        sub->add_option("--seed", opt.seed, "Base seed");
        sub->add_option("--dt", opt.dt, "Euler step in years");
        sub->add_flag("--antithetic", opt.antithetic, "Use antithetic Brownian increments");
    };

    auto* solve = app.add_subcommand("solve", "Solve the backward equations; write solutions.csv and summary.json");
    common(solve);
    auto* frontier = app.add_subcommand("frontier", "Write the efficient frontier as frontier.csv");
    common(frontier);
    frontier->add_option("--z", opt.z, "Targets: comma list or start:step:stop");
    frontier->add_option("--density-overlay", opt.overlay, "Comma list of constant exit densities, one CSV each");
    auto* sim = app.add_subcommand("simulate", "Monte Carlo check of one portfolio law");
    common(sim);
    sim_flags(sim);
    sim->add_option("--z", opt.z, "Target expected exit wealth");
    sim->add_option("--law", opt.law, "optimal | min | feasible | zero")
        ->check(CLI::IsMember({"optimal", "min", "feasible", "zero"}));
    sim->add_flag("--per-path", opt.per_path, "Also write paths.csv (path_id, tau, x_at_exit)");
    auto* validate = app.add_subcommand("validate", "Run invariant and Monte Carlo checks; exit 5 on any FAIL");
    common(validate);
    sim_flags(validate);
    validate->add_option("--z", opt.z, "Targets to check by simulation");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        error_json(err, "UsageError", e.what());
        return kUsage;
    }
    try {
        if (app.got_subcommand(solve)) return cmd_solve(opt, out);
        if (app.got_subcommand(frontier)) return cmd_frontier(opt, out);
        if (app.got_subcommand(sim)) return cmd_simulate(opt, out);
        return cmd_validate(opt, out, err);
    } catch (const ValidationError& e) {
        error_json(err, e.code(), e.what());
        return e.code() == "ZBelowMinimum" ? kZBelowMinimum : kConfigError;
    } catch (const SolverError& e) {
        error_json(err, e.code(), e.what());
        return kSolverError;
    } catch (const std::exception& e) {
        error_json(err, "InternalError", e.what());
        return kSolverError;
    }
}

} // namespace rsmv::cli
