#pragma once

#include "rsmv/frontier.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace rsmv {

struct SimConfig {
    long n_paths = 100000;
    double euler_step = 1e-3;
    std::uint64_t base_seed = 20240917;
    bool antithetic = false;
    /// z used in the cost functionals; defaults to the law's target, then
    /// to the sample mean of x(tau ^ T).
    std::optional<double> reference_z;
    bool keep_paths = false;
    /// 0 selects std::thread::hardware_concurrency().
    unsigned workers = 0;
    /// Exit-time law used only by the weighted estimators. Left empty in
    /// normal runs; set to a deliberately wrong F to check that
    /// dual_cost_check detects the mismatch.
    const HorizonSpec* weighting_override = nullptr;
    /// Each Euler increment is the sum of this many equal Brownian pieces.
    /// A run with step dt and 2 pieces uses the same Brownian path as a run
    /// with step dt/2 and 1 piece (away from jump and exit splits), which
    /// couples the two for step-halving comparisons.
    int brownian_pieces = 1;
};

struct PathRecord {
    long path_id = 0;
    double tau = 0.0;  // tau ^ T
    double x_at_exit = 0.0;
};

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

struct SimResult {
    long n_paths = 0;
    double reference_z = 0.0;
    Estimate mean_terminal;   // E x(tau ^ T)
    Estimate var_terminal;    // Var x(tau ^ T)
    Estimate j1_weighted;     // E[int f x dt + (1 - F(T)) x(T)]
    Estimate j_mv_sampled;    // E (x(tau ^ T) - z)^2
    Estimate j_mv_weighted;   // E[int f (x - z)^2 dt + (1 - F(T)) (x(T) - z)^2]
    Estimate j_mv_difference; // paired difference sampled - weighted
    double max_abs_wealth = 0.0;
    std::vector<PathRecord> paths;
};

/// Simulates the wealth of `law` under the model's regime-switching market
/// with random exit. The Euler grid is the union of the uniform grid of
/// step cfg.euler_step, the chain's jump times and the exit time; the law
/// is evaluated at the left end of each substep with the pre-jump regime.
/// Throws ValidationError(BadSimConfig) and SolverError(NumericalBlowup).
SimResult simulate(const Model& model, const PortfolioLaw& law, const SimConfig& cfg);

struct CostAgreement {
    double difference = 0.0;
    double joint_se = 0.0;
    bool pass = false;
};

/// Compares the sampled-tau and weighted estimators of the cost; PASS iff
/// |difference| <= 3 joint SE.
CostAgreement dual_cost_check(const SimResult& result);

struct FrontierValidationRow {
    double z = 0.0;
    double lambda_star = 0.0;
    double analytic_variance = 0.0;
    SimResult sim;
    double mean_z_score = 0.0;
    double var_z_score = 0.0;
};

std::vector<FrontierValidationRow> frontier_validation(const Analysis& analysis, const std::vector<double>& z_list,
                                                       const SimConfig& cfg);

} // namespace rsmv
