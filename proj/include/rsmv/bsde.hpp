#pragma once

#include "rsmv/chain.hpp"
#include "rsmv/horizon.hpp"
#include "rsmv/market.hpp"

#include <Eigen/Dense>

#include <vector>

namespace rsmv {

// With coefficients that depend only on (t, regime) and a deterministic exit
// density, each backward equation has the Markovian solution
// y(t) = Y(t, alpha(t)): the Brownian integrand vanishes and the jump
// integrand into regime j is Y_j - Y_i. Each BSDE therefore reduces to N
// coupled linear or quasi-linear ODEs solved backward from T with RK4.

inline constexpr double kDefaultRelativeStep = 1e-4;

/// Uniform grid 0 = t_0 < ... < t_K = T with K = round(T / h) (at least 1).
std::vector<double> uniform_grid(double horizon, double h);

/// Feasibility equation: dPsi_i/dt = -(r_i Psi_i + f) - sum_j q_ij (Psi_j - Psi_i),
/// Psi_i(T) = 1 - F(T). Returns N x (K+1). Throws SolverError(StepTooLarge)
/// if positivity is lost.
Eigen::MatrixXd solve_psi(const ValidatedGenerator& gen, const MarketModel& market, const HorizonSpec& horizon,
                          double h);

/// Riccati equation: dP_i/dt = -[2f + (2 r_i - |theta_i|^2) P_i] - sum_j q_ij (P_j - P_i),
/// P_i(T) = 2 (1 - F(T)). Throws SolverError(PositivityLost) if P <= 0 anywhere.
Eigen::MatrixXd solve_p(const ValidatedGenerator& gen, const MarketModel& market, const HorizonSpec& horizon,
                        double h);

/// Auxiliary equation, G_i(T) = 1:
///   dG_i/dt = (r_i + 2f/P_i) G_i - 2f/P_i - (1/P_i) sum_{j != i} q_ij P_j (G_j - G_i).
/// The coupling is the sum of the quadratic jump covariation
/// (P_j - P_i)(G_j - G_i) / P_i and the compensator sum q_ij (G_j - G_i).
/// P values between grid nodes come from cubic Hermite interpolation using
/// the Riccati right-hand side, which keeps the scheme fourth order.
/// Throws SolverError(GridMismatch) or SolverError(BoundViolated) when G
/// leaves (0, 1].
Eigen::MatrixXd solve_g(const ValidatedGenerator& gen, const MarketModel& market, const HorizonSpec& horizon,
                        const Eigen::MatrixXd& p, double h);

struct BackwardSolution {
    std::vector<double> grid;
    Eigen::MatrixXd psi;  // N x (K+1)
    Eigen::MatrixXd p;
    Eigen::MatrixXd g;
    double lower_bound_b = 0.0;  // min P
    double upper_bound_B = 0.0;  // max P

    int n_regimes() const { return static_cast<int>(p.rows()); }
    double step() const { return grid.size() > 1 ? grid[1] - grid[0] : 0.0; }

    /// Linear interpolation on the shared grid; t is clamped to [0, T].
    double psi_at(double t, int regime) const { return interpolate(psi, t, regime); }
    double p_at(double t, int regime) const { return interpolate(p, t, regime); }
    double g_at(double t, int regime) const { return interpolate(g, t, regime); }

private:
    double interpolate(const Eigen::MatrixXd& values, double t, int regime) const;
};

/// Solves all three equations on one grid of step h.
BackwardSolution solve_backward(const ValidatedGenerator& gen, const MarketModel& market, const HorizonSpec& horizon,
                                double h);

struct DeltaValue {
    double delta = 0.0;
    double f_part = 0.0;     // E int f (G - 1)^2 dt
    double jump_part = 0.0;  // E int 1/2 sum_j q_ij P_j (G_j - G_i)^2 dt
};

/// Delta = int_0^T sum_i pi_i(t) [ f (G_i - 1)^2 + 1/2 sum_{j != i} q_ij P_j (G_j - G_i)^2 ] dt
/// by trapezoidal quadrature on the shared grid. The jump term weights
/// each transition with the post-jump value P_j. `occupation` is
/// (K+1) x N as returned by occupation_probabilities. Throws
/// SolverError(GridMismatch) when shapes disagree.
DeltaValue compute_delta(const Eigen::MatrixXd& p, const Eigen::MatrixXd& g, const HorizonSpec& horizon,
                         const Eigen::MatrixXd& occupation, const ValidatedGenerator& gen,
                         const std::vector<double>& grid);

} // namespace rsmv
