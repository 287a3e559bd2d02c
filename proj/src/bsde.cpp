#include "rsmv/bsde.hpp"

#include "rsmv/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rsmv {

namespace {

enum class Stage { End, Mid, Start };  // t_{k+1}, midpoint, t_k

struct StepCoefficients {
    Eigen::VectorXd r;
    Eigen::VectorXd theta_sq;
    double f = 0.0;
};

StepCoefficients coefficients(const MarketModel& market, const HorizonSpec& horizon, double t_lo, double t_hi) {
    const int n = market.n_regimes();
    StepCoefficients c{Eigen::VectorXd(n), Eigen::VectorXd(n), horizon.density_for_step(t_lo, t_hi)};
    for (int i = 0; i < n; ++i) {
        const auto& seg = market.segment_for_step(t_lo, t_hi, i);
        c.r(i) = seg.r;
        c.theta_sq(i) = seg.theta_sq;
    }
    return c;
}

// sum_{j != i} q_ij (y_j - y_i), written in difference form so that a
// constant vector is an exact fixed point.
Eigen::VectorXd coupling(const Eigen::MatrixXd& q, const Eigen::VectorXd& y) {
    const auto n = y.size();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i) out(i) += q(i, j) * (y(j) - y(i));
        }
    }
    return out;
}

// Classical RK4 from t_K = T down to t_0. `rhs(k, stage, coeffs, y)` returns
// dy/dt on step [t_k, t_{k+1}].
template <class Rhs>
Eigen::MatrixXd integrate_backward(const MarketModel& market, const HorizonSpec& horizon,
                                   const std::vector<double>& grid, const Eigen::VectorXd& terminal, Rhs&& rhs) {
    const auto steps = static_cast<Eigen::Index>(grid.size()) - 1;
    Eigen::MatrixXd out(terminal.size(), steps + 1);
    out.col(steps) = terminal;
    Eigen::VectorXd y = terminal;
    for (Eigen::Index k = steps - 1; k >= 0; --k) {
        const double t_lo = grid[static_cast<std::size_t>(k)];
        const double t_hi = grid[static_cast<std::size_t>(k) + 1];
        const double h = t_hi - t_lo;
        const auto c = coefficients(market, horizon, t_lo, t_hi);
        const Eigen::VectorXd k1 = rhs(k, Stage::End, c, y);
        const Eigen::VectorXd k2 = rhs(k, Stage::Mid, c, Eigen::VectorXd(y - 0.5 * h * k1));
        const Eigen::VectorXd k3 = rhs(k, Stage::Mid, c, Eigen::VectorXd(y - 0.5 * h * k2));
        const Eigen::VectorXd k4 = rhs(k, Stage::Start, c, Eigen::VectorXd(y - h * k3));
        y -= (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.col(k) = y;
    }
    return out;
}

void check_inputs(const ValidatedGenerator& gen, const MarketModel& market, const HorizonSpec& horizon) {
    if (gen.n_regimes() != market.n_regimes()) {
        throw ValidationError("DimensionMismatch", "generator has " + std::to_string(gen.n_regimes()) +
                                                       " regimes but market has " +
                                                       std::to_string(market.n_regimes()));
    }
    if (std::abs(market.horizon() - horizon.horizon()) > 1e-12) {
        throw ValidationError("HorizonMismatch", "market and exit-time horizons differ");
    }
}

Eigen::VectorXd riccati_rhs(const Eigen::MatrixXd& q, const StepCoefficients& c, const Eigen::VectorXd& p) {
    return -(2.0 * c.f + (2.0 * c.r - c.theta_sq).cwiseProduct(p).array()).matrix() - coupling(q, p);
}

} // namespace

std::vector<double> uniform_grid(double horizon, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw ValidationError("BadStep", "grid step must be positive");
    }
    if (h > horizon) {
        throw ValidationError("BadStep", "grid step exceeds the horizon");
    }
    const auto steps = std::max<long>(1, std::lround(horizon / h));
    std::vector<double> grid(static_cast<std::size_t>(steps) + 1);
    for (long k = 0; k <= steps; ++k) {
        grid[static_cast<std::size_t>(k)] = horizon * static_cast<double>(k) / static_cast<double>(steps);
    }
    grid.back() = horizon;
    return grid;
}

Eigen::MatrixXd solve_psi(const ValidatedGenerator& gen, const MarketModel& market, const HorizonSpec& horizon,
                          double h) {
    check_inputs(gen, market, horizon);
    const auto grid = uniform_grid(horizon.horizon(), h);
    const Eigen::VectorXd terminal = Eigen::VectorXd::Constant(gen.n_regimes(), 1.0 - horizon.exit_probability());
    const auto& q = gen.q();
    Eigen::MatrixXd psi = integrate_backward(
        market, horizon, grid, terminal, [&](Eigen::Index, Stage, const StepCoefficients& c, const Eigen::VectorXd& y) {
            return Eigen::VectorXd(-(c.r.cwiseProduct(y).array() + c.f).matrix() - coupling(q, y));
        });
    if (!psi.allFinite() || (psi.array() <= 0.0).any()) {
        throw SolverError("StepTooLarge", "feasibility solution lost positivity; reduce the grid step");
    }
    return psi;
}

Eigen::MatrixXd solve_p(const ValidatedGenerator& gen, const MarketModel& market, const HorizonSpec& horizon,
                        double h) {
    check_inputs(gen, market, horizon);
    const auto grid = uniform_grid(horizon.horizon(), h);
    const Eigen::VectorXd terminal =
        Eigen::VectorXd::Constant(gen.n_regimes(), 2.0 * (1.0 - horizon.exit_probability()));
    const auto& q = gen.q();
    Eigen::MatrixXd p = integrate_backward(
        market, horizon, grid, terminal,
        [&](Eigen::Index, Stage, const StepCoefficients& c, const Eigen::VectorXd& y) { return riccati_rhs(q, c, y); });
    if (!p.allFinite() || (p.array() <= 0.0).any()) {
        throw SolverError("PositivityLost", "Riccati solution is not strictly positive on the grid");
    }
    return p;
}

Eigen::MatrixXd solve_g(const ValidatedGenerator& gen, const MarketModel& market, const HorizonSpec& horizon,
                        const Eigen::MatrixXd& p, double h) {
    check_inputs(gen, market, horizon);
    const auto grid = uniform_grid(horizon.horizon(), h);
    if (p.rows() != gen.n_regimes() || p.cols() != static_cast<Eigen::Index>(grid.size())) {
        throw SolverError("GridMismatch", "Riccati arrays do not match the requested grid");
    }
    if ((p.array() <= 0.0).any()) {
        throw SolverError("PositivityLost", "Riccati solution must be strictly positive");
    }
    const auto& q = gen.q();
    const auto n = static_cast<Eigen::Index>(gen.n_regimes());

    auto p_stage = [&](Eigen::Index k, Stage stage, const StepCoefficients& c) -> Eigen::VectorXd {
        switch (stage) {
        case Stage::Start:
            return p.col(k);
        case Stage::End:
            return p.col(k + 1);
        case Stage::Mid:
            break;
        }
        const double step = grid[static_cast<std::size_t>(k) + 1] - grid[static_cast<std::size_t>(k)];
        const Eigen::VectorXd lo = p.col(k);
        const Eigen::VectorXd hi = p.col(k + 1);
        return 0.5 * (lo + hi) + (step / 8.0) * (riccati_rhs(q, c, lo) - riccati_rhs(q, c, hi));
    };

    const Eigen::VectorXd terminal = Eigen::VectorXd::Ones(n);
    Eigen::MatrixXd g = integrate_backward(
        market, horizon, grid, terminal,
        [&](Eigen::Index k, Stage stage, const StepCoefficients& c, const Eigen::VectorXd& y) {
            const Eigen::VectorXd pk = p_stage(k, stage, c);
            Eigen::VectorXd out(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                double jump = 0.0;
                for (Eigen::Index j = 0; j < n; ++j) {
                    if (j != i) jump += q(i, j) * pk(j) * (y(j) - y(i));
                }
                const double w = 2.0 * c.f / pk(i);
                out(i) = (c.r(i) + w) * y(i) - w - jump / pk(i);
            }
            return out;
        });
    if (!g.allFinite() || (g.array() <= 0.0).any() || (g.array() > 1.0 + 1e-12).any()) {
        throw SolverError("BoundViolated", "auxiliary solution left (0, 1]; reduce the grid step");
    }
    return g;
}

double BackwardSolution::interpolate(const Eigen::MatrixXd& values, double t, int regime) const {
    const auto last = static_cast<Eigen::Index>(grid.size()) - 1;
    const double T = grid.back();
    if (t <= 0.0) return values(regime, 0);
    if (t >= T) return values(regime, last);
    const double pos = t / T * static_cast<double>(last);
    auto k = static_cast<Eigen::Index>(pos);
    if (k >= last) k = last - 1;
    const double w = (t - grid[static_cast<std::size_t>(k)]) /
                     (grid[static_cast<std::size_t>(k) + 1] - grid[static_cast<std::size_t>(k)]);
    return (1.0 - w) * values(regime, k) + w * values(regime, k + 1);
}

BackwardSolution solve_backward(const ValidatedGenerator& gen, const MarketModel& market, const HorizonSpec& horizon,
                                double h) {
    BackwardSolution sol;
    sol.grid = uniform_grid(horizon.horizon(), h);
    sol.psi = solve_psi(gen, market, horizon, h);
    sol.p = solve_p(gen, market, horizon, h);
    sol.g = solve_g(gen, market, horizon, sol.p, h);
    sol.lower_bound_b = sol.p.minCoeff();
    sol.upper_bound_B = sol.p.maxCoeff();
    return sol;
}

DeltaValue compute_delta(const Eigen::MatrixXd& p, const Eigen::MatrixXd& g, const HorizonSpec& horizon,
                         const Eigen::MatrixXd& occupation, const ValidatedGenerator& gen,
                         const std::vector<double>& grid) {
    const auto n = static_cast<Eigen::Index>(gen.n_regimes());
    const auto points = static_cast<Eigen::Index>(grid.size());
    if (points < 2 || p.rows() != n || g.rows() != n || p.cols() != points || g.cols() != points ||
        occupation.rows() != points || occupation.cols() != n) {
        throw SolverError("GridMismatch", "Delta inputs must share one grid and regime count");
    }
    const auto& q = gen.q();
    Eigen::VectorXd miss(points);  // sum_i pi_i (G_i - 1)^2
    Eigen::VectorXd jump(points);  // sum_i pi_i 1/2 sum_j q_ij P_j (G_j - G_i)^2
    for (Eigen::Index k = 0; k < points; ++k) {
        double a = 0.0;
        double b = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double gi = g(i, k);
            a += occupation(k, i) * (gi - 1.0) * (gi - 1.0);
            double inner = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                const double d = g(j, k) - gi;
                inner += q(i, j) * p(j, k) * d * d;
            }
            b += occupation(k, i) * 0.5 * inner;
        }
        miss(k) = a;
        jump(k) = b;
    }
    DeltaValue out;
    for (Eigen::Index k = 0; k + 1 < points; ++k) {
        const double t_lo = grid[static_cast<std::size_t>(k)];
        const double t_hi = grid[static_cast<std::size_t>(k) + 1];
        const double h = t_hi - t_lo;
        out.f_part += horizon.density_for_step(t_lo, t_hi) * 0.5 * h * (miss(k) + miss(k + 1));
        out.jump_part += 0.5 * h * (jump(k) + jump(k + 1));
    }
    out.delta = out.f_part + out.jump_part;
    return out;
}

} // namespace rsmv
