#include "rsmv/frontier.hpp"

#include "rsmv/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rsmv {

namespace {

// Relative slack when comparing a requested z against z_min, so that a
// z_min echoed back through text output is still accepted.
constexpr double kZMinSlack = 1e-10;

double scaled_weight(const FrontierInputs& in) { return in.p0 * in.g0 * in.g0 + 2.0 * in.delta; }

} // namespace

void check_inputs(const FrontierInputs& in) {
    if (!(in.p0 > 0.0) || !(in.g0 > 0.0 && in.g0 <= 1.0 + 1e-12) || !(in.delta >= 0.0) || !std::isfinite(in.x0)) {
        throw ValidationError("InvalidFrontierInputs", "frontier inputs need p0 > 0, 0 < g0 <= 1, Delta >= 0");
    }
    if (!(in.quadratic_coefficient() < 0.0)) {
        throw SolverError("DenominatorNonNegative",
                          "1/2 p0 g0^2 + Delta - 1 = " + std::to_string(in.quadratic_coefficient()) +
                              " is not negative; the frontier is unbounded");
    }
}

MinimumVariance min_variance_point(const FrontierInputs& in) {
    check_inputs(in);
    const double w = scaled_weight(in);
    return {in.p0 * in.g0 / w * in.x0, in.p0 * in.delta / w * in.x0 * in.x0};
}

double lambda_star(const FrontierInputs& in, double z) {
    // z + (2z - p0 g0 x0)/(p0 g0^2 + 2 Delta - 2), regrouped as
    // (p0 g0^2 + 2 Delta)(z - z_min)/(p0 g0^2 + 2 Delta - 2) so that
    // lambda*(z_min) is exactly zero.
    const auto mv = min_variance_point(in);
    const double w = scaled_weight(in);
    return w * (z - mv.z_min) / (w - 2.0) + 0.0;  // + 0.0 turns -0 into 0
}

FrontierPoint variance_at(const FrontierInputs& in, double z) {
    const auto mv = min_variance_point(in);
    const double w = scaled_weight(in);
    const double dz = z - mv.z_min;
    FrontierPoint pt;
    pt.z = z;
    pt.lambda_star = lambda_star(in, z);
    pt.variance = w / (2.0 - w) * dz * dz + mv.var_min;
    pt.std_dev = std::sqrt(pt.variance);
    return pt;
}

std::vector<FrontierPoint> frontier_curve(const FrontierInputs& in, const std::vector<double>& z_grid) {
    const auto mv = min_variance_point(in);
    const double floor = mv.z_min - kZMinSlack * std::max(1.0, std::abs(mv.z_min));
    std::vector<double> below;
    for (double z : z_grid) {
        if (!(z >= floor)) below.push_back(z);
    }
    if (!below.empty()) {
        std::ostringstream msg;
        msg.precision(12);
        msg << "z below z_min = " << mv.z_min << ":";
        for (double z : below) msg << ' ' << z;
        throw ValidationError("ZBelowMinimum", msg.str());
    }
    if (!std::is_sorted(z_grid.begin(), z_grid.end())) {
        throw ValidationError("BadZGrid", "z grid must be ascending");
    }
    std::vector<FrontierPoint> out;
    out.reserve(z_grid.size());
    for (double z : z_grid) out.push_back(variance_at(in, z));
    return out;
}

FeedbackLaw::FeedbackLaw(std::shared_ptr<const Model> model, std::shared_ptr<const BackwardSolution> solution,
                         double z, double lambda)
    : model_(std::move(model)), solution_(std::move(solution)), z_(z), lambda_(lambda) {}

void FeedbackLaw::evaluate(double t, double x, int regime, Eigen::Ref<Eigen::VectorXd> out) const {
    const auto& seg = model_->market.segment(t, regime);
    const double bracket = x + (lambda_ - z_) * solution_->g_at(t, regime);
    out = -bracket * seg.gain;
}

FeasibleLaw::FeasibleLaw(std::shared_ptr<const Model> model, std::shared_ptr<const BackwardSolution> solution,
                         double z, double z_zero, double gamma)
    : model_(std::move(model)), solution_(std::move(solution)), z_(z), scale_((z - z_zero) / gamma) {}

void FeasibleLaw::evaluate(double t, double, int regime, Eigen::Ref<Eigen::VectorXd> out) const {
    const auto& seg = model_->market.segment(t, regime);
    out = (scale_ * solution_->psi_at(t, regime)) * seg.excess;
}

MutualFundLaw::MutualFundLaw(double beta, LawPtr law_min, LawPtr law_1)
    : beta_(beta), law_min_(std::move(law_min)), law_1_(std::move(law_1)) {}

void MutualFundLaw::evaluate(double t, double x, int regime, Eigen::Ref<Eigen::VectorXd> out) const {
    Eigen::VectorXd other(n_assets());
    law_min_->evaluate(t, x, regime, out);
    law_1_->evaluate(t, x, regime, other);
    out = (1.0 - beta_) * out + beta_ * other;
}

std::optional<double> MutualFundLaw::target() const {
    const auto a = law_min_->target();
    const auto b = law_1_->target();
    if (!a || !b) return std::nullopt;
    return (1.0 - beta_) * *a + beta_ * *b;
}

double feasibility_gamma(const Eigen::MatrixXd& psi, const MarketModel& market, const Eigen::MatrixXd& occupation,
                         const std::vector<double>& grid) {
    const auto n = static_cast<Eigen::Index>(market.n_regimes());
    const auto points = static_cast<Eigen::Index>(grid.size());
    if (points < 2 || psi.rows() != n || psi.cols() != points || occupation.rows() != points ||
        occupation.cols() != n) {
        throw SolverError("GridMismatch", "gamma inputs must share one grid and regime count");
    }
    double gamma = 0.0;
    for (Eigen::Index k = 0; k + 1 < points; ++k) {
        const double t_lo = grid[static_cast<std::size_t>(k)];
        const double t_hi = grid[static_cast<std::size_t>(k) + 1];
        double lo = 0.0;
        double hi = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double b2 = market.segment_for_step(t_lo, t_hi, static_cast<int>(i)).excess.squaredNorm();
            lo += occupation(k, i) * psi(i, k) * psi(i, k) * b2;
            hi += occupation(k + 1, i) * psi(i, k + 1) * psi(i, k + 1) * b2;
        }
        gamma += 0.5 * (t_hi - t_lo) * (lo + hi);
    }
    return gamma;
}

double z_zero(const Eigen::MatrixXd& psi, double x0, int initial_regime) { return psi(initial_regime, 0) * x0; }

Analysis analyze(std::shared_ptr<const Model> model, double h) {
    Analysis a;
    const auto& m = *model;
    auto sol = std::make_shared<BackwardSolution>(solve_backward(m.generator, m.market, m.horizon, h));
    a.occupation = occupation_probabilities(m.generator, m.initial_regime, sol->grid);
    a.delta = compute_delta(sol->p, sol->g, m.horizon, a.occupation, m.generator, sol->grid);
    a.gamma = feasibility_gamma(sol->psi, m.market, a.occupation, sol->grid);
    a.z_zero = z_zero(sol->psi, m.x0, m.initial_regime);
    a.inputs = {sol->p(m.initial_regime, 0), sol->g(m.initial_regime, 0), a.delta.delta, m.x0, m.initial_regime};
    a.solution = std::move(sol);
    a.model = std::move(model);
    return a;
}

std::shared_ptr<const FeasibleLaw> feasible_portfolio(const Analysis& a, double z) {
    if (!(a.gamma > 0.0)) {
        throw ValidationError("InfeasibleMarket",
                              "gamma = 0: every admissible portfolio has expected exit wealth z0");
    }
    return std::make_shared<FeasibleLaw>(a.model, a.solution, z, a.z_zero, a.gamma);
}

std::shared_ptr<const FeedbackLaw> optimal_law(const Analysis& a, double z) {
    return std::make_shared<FeedbackLaw>(a.model, a.solution, z, lambda_star(a.inputs, z));
}

MinimumVarianceLaw min_variance(const Analysis& a) {
    const auto mv = min_variance_point(a.inputs);
    return {mv.z_min, mv.var_min, std::make_shared<FeedbackLaw>(a.model, a.solution, mv.z_min, 0.0)};
}

std::shared_ptr<const MutualFundLaw> mutual_fund(double beta, LawPtr law_min, LawPtr law_1) {
    if (!(beta >= 0.0)) {
        throw ValidationError("NegativeBeta", "mutual fund weight must be nonnegative");
    }
    return std::make_shared<MutualFundLaw>(beta, std::move(law_min), std::move(law_1));
}

} // namespace rsmv
