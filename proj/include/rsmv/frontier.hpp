#pragma once

#include "rsmv/bsde.hpp"
#include "rsmv/chain.hpp"
#include "rsmv/horizon.hpp"
#include "rsmv/market.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <vector>

namespace rsmv {

/// A fully validated problem instance.
struct Model {
    ValidatedGenerator generator;
    MarketModel market;
    HorizonSpec horizon;
    double x0 = 1.0;
    int initial_regime = 0;
};

struct FrontierInputs {
    double p0 = 0.0;
    double g0 = 0.0;
    double delta = 0.0;
    double x0 = 0.0;
    int initial_regime = 0;

    /// 1/2 p0 g0^2 + Delta - 1; the frontier is finite only when negative.
    double quadratic_coefficient() const { return 0.5 * p0 * g0 * g0 + delta - 1.0; }
};

/// Throws ValidationError(InvalidFrontierInputs) for p0 <= 0, g0 outside
/// (0, 1] or Delta < 0, and SolverError(DenominatorNonNegative) when the
/// quadratic coefficient is not negative.
void check_inputs(const FrontierInputs& inputs);

struct FrontierPoint {
    double z = 0.0;
    double lambda_star = 0.0;
    double variance = 0.0;
    double std_dev = 0.0;
};

/// lambda* = z + (2z - p0 g0 x0) / (p0 g0^2 + 2 Delta - 2).
double lambda_star(const FrontierInputs& inputs, double z);

/// Minimal Var x(tau ^ T) subject to E x(tau ^ T) = z.
FrontierPoint variance_at(const FrontierInputs& inputs, double z);

struct MinimumVariance {
    double z_min = 0.0;
    double var_min = 0.0;
};

MinimumVariance min_variance_point(const FrontierInputs& inputs);

/// One point per z. Throws ValidationError(ZBelowMinimum) listing every
/// offending value when some z < z_min, and ValidationError(BadZGrid) when
/// the grid is not ascending.
std::vector<FrontierPoint> frontier_curve(const FrontierInputs& inputs, const std::vector<double>& z_grid);

/// Dollar amounts held in each stock as a function of (t, x(t-), alpha(t-)).
class PortfolioLaw {
public:
    virtual ~PortfolioLaw() = default;

    virtual int n_assets() const = 0;
    virtual void evaluate(double t, double x, int regime, Eigen::Ref<Eigen::VectorXd> out) const = 0;
    /// Expected exit wealth the law is built to attain, if any.
    virtual std::optional<double> target() const { return std::nullopt; }

    Eigen::VectorXd operator()(double t, double x, int regime) const {
        Eigen::VectorXd out(n_assets());
        evaluate(t, x, regime, out);
        return out;
    }
};

using LawPtr = std::shared_ptr<const PortfolioLaw>;

/// Everything in the bond: pi = 0.
class ZeroLaw final : public PortfolioLaw {
public:
    explicit ZeroLaw(int n_assets) : n_assets_(n_assets) {}
    int n_assets() const override { return n_assets_; }
    void evaluate(double, double, int, Eigen::Ref<Eigen::VectorXd> out) const override { out.setZero(); }

private:
    int n_assets_;
};

/// pi*(t) = -(sigma sigma^T)^{-1} B [x + (lambda - z) G_i(t)], written with
/// theta = sigma^{-1} B as -(sigma^T)^{-1} theta [ ... ].
class FeedbackLaw final : public PortfolioLaw {
public:
    FeedbackLaw(std::shared_ptr<const Model> model, std::shared_ptr<const BackwardSolution> solution, double z,
                double lambda);

    int n_assets() const override { return model_->market.n_assets(); }
    void evaluate(double t, double x, int regime, Eigen::Ref<Eigen::VectorXd> out) const override;
    std::optional<double> target() const override { return z_; }

    double z() const { return z_; }
    double lambda() const { return lambda_; }
    /// lambda - z, the shift multiplying G in the feedback bracket.
    double shift() const { return lambda_ - z_; }

private:
    std::shared_ptr<const Model> model_;
    std::shared_ptr<const BackwardSolution> solution_;
    double z_;
    double lambda_;
};

/// Open-loop portfolio pi(t) = ((z - z0) / gamma) Psi_alpha(t) B_alpha(t)
/// reaching E x(tau ^ T) = z.
class FeasibleLaw final : public PortfolioLaw {
public:
    FeasibleLaw(std::shared_ptr<const Model> model, std::shared_ptr<const BackwardSolution> solution, double z,
                double z_zero, double gamma);

    int n_assets() const override { return model_->market.n_assets(); }
    void evaluate(double t, double x, int regime, Eigen::Ref<Eigen::VectorXd> out) const override;
    std::optional<double> target() const override { return z_; }
    double scale() const { return scale_; }

private:
    std::shared_ptr<const Model> model_;
    std::shared_ptr<const BackwardSolution> solution_;
    double z_;
    double scale_;
};

/// Pointwise (1 - beta) law_min + beta law_1.
class MutualFundLaw final : public PortfolioLaw {
public:
    MutualFundLaw(double beta, LawPtr law_min, LawPtr law_1);

    int n_assets() const override { return law_min_->n_assets(); }
    void evaluate(double t, double x, int regime, Eigen::Ref<Eigen::VectorXd> out) const override;
    std::optional<double> target() const override;

private:
    double beta_;
    LawPtr law_min_;
    LawPtr law_1_;
};

/// Solved problem: backward solution, occupation weights, and the scalars
/// that pin the frontier.
struct Analysis {
    std::shared_ptr<const Model> model;
    std::shared_ptr<const BackwardSolution> solution;
    Eigen::MatrixXd occupation;  // (K+1) x N, started in model->initial_regime
    DeltaValue delta;
    double gamma = 0.0;
    double z_zero = 0.0;
    FrontierInputs inputs;

    bool feasible() const { return gamma > 0.0; }
};

/// Runs every solver for `model` on a grid of step h.
Analysis analyze(std::shared_ptr<const Model> model, double h);

/// gamma = int_0^T sum_i pi_i(t) Psi_i(t)^2 |B_i(t)|^2 dt (trapezoidal,
/// coefficients taken per grid step).
double feasibility_gamma(const Eigen::MatrixXd& psi, const MarketModel& market, const Eigen::MatrixXd& occupation,
                         const std::vector<double>& grid);

/// z0 = Psi_{i0}(0) x0, the expected exit wealth of the all-bond strategy.
double z_zero(const Eigen::MatrixXd& psi, double x0, int initial_regime);

/// Throws ValidationError(InfeasibleMarket) when gamma == 0.
std::shared_ptr<const FeasibleLaw> feasible_portfolio(const Analysis& analysis, double z);

/// Efficient law for target z (lambda = lambda*).
std::shared_ptr<const FeedbackLaw> optimal_law(const Analysis& analysis, double z);

struct MinimumVarianceLaw {
    double z_min = 0.0;
    double var_min = 0.0;
    std::shared_ptr<const FeedbackLaw> law;  // built with lambda* = 0
};

MinimumVarianceLaw min_variance(const Analysis& analysis);

/// Throws ValidationError(NegativeBeta) for beta < 0.
std::shared_ptr<const MutualFundLaw> mutual_fund(double beta, LawPtr law_min, LawPtr law_1);

} // namespace rsmv
