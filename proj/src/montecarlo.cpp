#include "rsmv/montecarlo.hpp"

#include "rsmv/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <string>
#include <thread>

namespace rsmv {

namespace {

constexpr double kBlowupLevel = 1e12;

// Neumaier compensated sum; fixed summation order keeps results independent
// of how paths were distributed over workers.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            carry_ += (sum_ - t) + v;
        } else {
            carry_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

struct PathOutcome {
    double tau = 0.0;
    double x_exit = 0.0;
    double x_final = 0.0;
    double f_mass = 0.0;  // int f dt
    double f_x = 0.0;     // int f x dt
    double f_x2 = 0.0;    // int f x^2 dt
    double max_abs = 0.0;
};

// Mean of `values` with its standard error. Antithetic pairs (2k, 2k+1) are
// averaged first because they are not independent.
Estimate mean_estimate(const std::vector<double>& values, bool antithetic) {
    const auto n = values.size();
    CompensatedSum total;
    for (double v : values) total.add(v);
    const double mean = total.value() / static_cast<double>(n);

    CompensatedSum dev2;
    std::size_t units = 0;
    if (antithetic) {
        units = n / 2;
        for (std::size_t k = 0; k < units; ++k) {
            const double d = 0.5 * (values[2 * k] + values[2 * k + 1]) - mean;
            dev2.add(d * d);
        }
    } else {
        units = n;
        for (double v : values) dev2.add((v - mean) * (v - mean));
    }
    const double var_units = dev2.value() / static_cast<double>(units - 1);
    return {mean, std::sqrt(var_units / static_cast<double>(units))};
}

// Unbiased sample variance with the fourth-central-moment standard error.
Estimate variance_estimate(const std::vector<double>& values, bool antithetic) {
    const auto n = static_cast<double>(values.size());
    CompensatedSum total;
    for (double v : values) total.add(v);
    const double mean = total.value() / n;
    CompensatedSum m2;
    CompensatedSum m4;
    for (double v : values) {
        const double d2 = (v - mean) * (v - mean);
        m2.add(d2);
        m4.add(d2 * d2);
    }
    const double s2 = m2.value() / (n - 1.0);
    const double mu4 = m4.value() / n;
    const double n_eff = antithetic ? n / 2.0 : n;
    const double var_of_s2 = (mu4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n_eff;
    return {s2, std::sqrt(std::max(var_of_s2, 0.0))};
}

} // namespace

SimResult simulate(const Model& model, const PortfolioLaw& law, const SimConfig& cfg) {
    const double T = model.market.horizon();
    if (cfg.n_paths < 2) throw ValidationError("BadSimConfig", "need at least 2 paths");
    if (!(cfg.euler_step > 0.0) || cfg.euler_step > T / 100.0 * (1.0 + 1e-12)) {
        throw ValidationError("BadSimConfig", "Euler step must lie in (0, T/100]");
    }
    if (cfg.antithetic && cfg.n_paths % 2 != 0) {
        throw ValidationError("BadSimConfig", "antithetic sampling needs an even path count");
    }
    if (cfg.brownian_pieces < 1) throw ValidationError("BadSimConfig", "brownian_pieces must be at least 1");
    if (law.n_assets() != model.market.n_assets()) {
        throw ValidationError("DimensionMismatch", "law and market disagree on the number of assets");
    }

    const HorizonSpec& weighting = cfg.weighting_override ? *cfg.weighting_override : model.horizon;
    const long steps = std::max(1L, std::lround(T / cfg.euler_step));
    const auto node = [&](long k) { return k >= steps ? T : T * static_cast<double>(k) / static_cast<double>(steps); };
    const int n_assets = model.market.n_assets();
    const int copies = cfg.antithetic ? 2 : 1;
    const long units = cfg.n_paths / copies;

    std::vector<PathOutcome> outcomes(static_cast<std::size_t>(cfg.n_paths));

    auto run_unit = [&](long unit, Eigen::VectorXd (&dW)[2], std::vector<Eigen::VectorXd>& pi) {
        auto rng = make_stream(cfg.base_seed, static_cast<std::uint64_t>(unit));
        const ChainPath chain = sample_path(model.generator, model.initial_regime, T, rng);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double tau = sample_exit(model.horizon, unif(rng));
        std::normal_distribution<double> normal(0.0, 1.0);

        double x[2] = {model.x0, model.x0};
        PathOutcome out[2];
        bool exited = false;
        int regime = model.initial_regime;
        std::size_t jump = 0;
        long k = 1;
        double t = 0.0;
        while (t < T) {
            double t_next = node(k);
            if (jump < chain.jump_times.size() && chain.jump_times[jump] < t_next) t_next = chain.jump_times[jump];
            if (!exited && tau < t_next) t_next = tau;

            const double dt = t_next - t;
            if (dt > 0.0) {
                const double root = std::sqrt(dt / cfg.brownian_pieces);
                dW[0].setZero();
                for (int piece = 0; piece < cfg.brownian_pieces; ++piece) {
                    for (int a = 0; a < n_assets; ++a) dW[0](a) += root * normal(rng);
                }
                dW[1] = -dW[0];
                const auto& seg = model.market.segment(t, regime);
                const double f = weighting.density_for_step(t, t_next);
                for (int c = 0; c < copies; ++c) {
                    law.evaluate(t, x[c], regime, pi[static_cast<std::size_t>(c)]);
                    const double x_lo = x[c];
                    const double inc = wealth_increment(seg, x_lo, pi[static_cast<std::size_t>(c)], dt, dW[c]);
                    const double x_hi = x_lo + inc;
                    x[c] = x_hi;
                    auto& o = out[c];
                    o.f_mass += f * dt;
                    o.f_x += f * dt * 0.5 * (x_lo + x_hi);
                    o.f_x2 += f * dt * 0.5 * (x_lo * x_lo + x_hi * x_hi);
                    o.max_abs = std::max(o.max_abs, std::abs(x_hi));
                    if (!(std::abs(x_hi) <= kBlowupLevel)) {
                        throw SolverError("NumericalBlowup", "wealth exceeded 1e12 on path " +
                                                                 std::to_string(unit * copies + c) + " at t = " +
                                                                 std::to_string(t_next));
                    }
                }
            }
            if (!exited && tau == t_next) {
                exited = true;
                for (int c = 0; c < copies; ++c) out[c].x_exit = x[c];
            }
            while (jump < chain.jump_times.size() && chain.jump_times[jump] == t_next) {
                regime = chain.post_jump_regimes[jump];
                ++jump;
            }
            if (node(k) == t_next) ++k;
            t = t_next;
        }
        for (int c = 0; c < copies; ++c) {
            out[c].tau = tau;
            out[c].x_final = x[c];
            if (!exited) out[c].x_exit = x[c];
            outcomes[static_cast<std::size_t>(unit * copies + c)] = out[c];
        }
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const auto workers = static_cast<long>(std::min<long>(cfg.workers ? cfg.workers : hw, units));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    auto run_block = [&](long w) {
        Eigen::VectorXd dW[2] = {Eigen::VectorXd(n_assets), Eigen::VectorXd(n_assets)};
        std::vector<Eigen::VectorXd> pi(2, Eigen::VectorXd(n_assets));
        const long begin = units * w / workers;
        const long end = units * (w + 1) / workers;
        try {
            for (long u = begin; u < end; ++u) run_unit(u, dW, pi);
        } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
    };
    if (workers == 1) {
        run_block(0);
    } else {
        std::vector<std::thread> pool;
        for (long w = 0; w < workers; ++w) pool.emplace_back(run_block, w);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    SimResult res;
    res.n_paths = cfg.n_paths;
    const auto n = outcomes.size();
    std::vector<double> exit_wealth(n);
    for (std::size_t k = 0; k < n; ++k) {
        exit_wealth[k] = outcomes[k].x_exit;
        res.max_abs_wealth = std::max(res.max_abs_wealth, outcomes[k].max_abs);
    }
    res.mean_terminal = mean_estimate(exit_wealth, cfg.antithetic);
    res.var_terminal = variance_estimate(exit_wealth, cfg.antithetic);
    if (cfg.reference_z) {
        res.reference_z = *cfg.reference_z;
    } else if (const auto target = law.target()) {
        res.reference_z = *target;
    } else {
        res.reference_z = res.mean_terminal.value;
    }

    const double z = res.reference_z;
    const double survive = 1.0 - weighting.exit_probability();
    std::vector<double> j1(n);
    std::vector<double> sampled(n);
    std::vector<double> weighted(n);
    std::vector<double> diff(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& o = outcomes[k];
        j1[k] = o.f_x + survive * o.x_final;
        sampled[k] = (o.x_exit - z) * (o.x_exit - z);
        weighted[k] = o.f_x2 - 2.0 * z * o.f_x + z * z * o.f_mass + survive * (o.x_final - z) * (o.x_final - z);
        diff[k] = sampled[k] - weighted[k];
    }
    res.j1_weighted = mean_estimate(j1, cfg.antithetic);
    res.j_mv_sampled = mean_estimate(sampled, cfg.antithetic);
    res.j_mv_weighted = mean_estimate(weighted, cfg.antithetic);
    res.j_mv_difference = mean_estimate(diff, cfg.antithetic);

    if (cfg.keep_paths) {
        res.paths.reserve(n);
        for (std::size_t k = 0; k < n; ++k) {
            res.paths.push_back({static_cast<long>(k), outcomes[k].tau, outcomes[k].x_exit});
        }
    }
    return res;
}

CostAgreement dual_cost_check(const SimResult& result) {
    CostAgreement out;
    out.difference = result.j_mv_sampled.value - result.j_mv_weighted.value;
    out.joint_se = result.j_mv_difference.se;
    out.pass = std::abs(out.difference) <= 3.0 * out.joint_se;
    return out;
}

std::vector<FrontierValidationRow> frontier_validation(const Analysis& analysis, const std::vector<double>& z_list,
                                                       const SimConfig& cfg) {
    std::vector<FrontierValidationRow> rows;
    const auto points = frontier_curve(analysis.inputs, z_list);
    for (const auto& pt : points) {
        FrontierValidationRow row;
        row.z = pt.z;
        row.lambda_star = pt.lambda_star;
        row.analytic_variance = pt.variance;
        const auto law = std::make_shared<FeedbackLaw>(analysis.model, analysis.solution, pt.z, pt.lambda_star);
        row.sim = simulate(*analysis.model, *law, cfg);
        row.mean_z_score = (row.sim.mean_terminal.value - pt.z) / row.sim.mean_terminal.se;
        row.var_z_score = (row.sim.var_terminal.value - pt.variance) / row.sim.var_terminal.se;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace rsmv
