#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace rsmv {

/// One piece of a regime's coefficient schedule, as written in a config.
struct MarketSegmentSpec {
    double t_start = 0.0;
    double r = 0.0;
    std::vector<double> mu;
    std::vector<std::vector<double>> sigma;  // row m = volatility loadings of stock m

    bool operator==(const MarketSegmentSpec&) const = default;
};

struct MarketSpec {
    double horizon = 1.0;
    double delta_floor = 1e-8;
    bool allow_zero_rate = false;  // accept r = 0 (limit case of the positivity assumption)
    std::vector<std::vector<MarketSegmentSpec>> regimes;

    bool operator==(const MarketSpec&) const = default;
};

/// Coefficients of one regime on [t_start, t_end), with the derived
/// quantities the solvers and feedback laws need.
struct MarketSegment {
    double t_start = 0.0;
    double t_end = 0.0;
    double r = 0.0;
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    Eigen::VectorXd excess;        // B = mu - r 1
    Eigen::VectorXd theta;         // sigma^{-1} B, so |theta|^2 = B^T (sigma sigma^T)^{-1} B
    Eigen::VectorXd gain;          // (sigma sigma^T)^{-1} B = (sigma^T)^{-1} theta
    double theta_sq = 0.0;
};

/// Validated regime-switching market. Immutable once built.
class MarketModel {
public:
    int n_assets() const { return n_assets_; }
    int n_regimes() const { return static_cast<int>(segments_.size()); }
    double horizon() const { return spec_.horizon; }
    /// Smallest eigenvalue of sigma sigma^T over all regimes and breakpoints.
    double delta() const { return delta_; }
    const MarketSpec& spec() const { return spec_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    /// Segment in force at time t in regime i (right-continuous schedule).
    /// Throws ValidationError(OutOfRangeTime) outside [0, T].
    const MarketSegment& segment(double t, int regime) const;
    /// Segment used for a whole integration step [t_lo, t_hi]: the one
    /// containing the step midpoint.
    const MarketSegment& segment_for_step(double t_lo, double t_hi, int regime) const;
    const std::vector<MarketSegment>& segments(int regime) const { return segments_[static_cast<std::size_t>(regime)]; }

    /// All schedule breakpoints (including 0), ascending and deduplicated.
    std::vector<double> breakpoints() const;

    bool operator==(const MarketModel& other) const { return spec_ == other.spec_ && delta_ == other.delta_; }

private:
    friend MarketModel build_market(const MarketSpec& spec);

    int n_assets_ = 0;
    double delta_ = 0.0;
    MarketSpec spec_;
    std::vector<std::vector<MarketSegment>> segments_;
    std::vector<std::string> warnings_;
};

/// Validates a market config. Errors (ValidationError codes): EmptyMarket,
/// DimensionMismatch, ScheduleGap, NonFiniteCoefficient, NonPositiveRate,
/// DegenerateVolatility. Negative volatility entries only produce a warning.
MarketModel build_market(const MarketSpec& spec);

Eigen::VectorXd excess_return(const MarketModel& model, double t, int regime);
Eigen::VectorXd theta(const MarketModel& model, double t, int regime);

struct WealthState {
    double x = 0.0;
    double t = 0.0;
    int regime = 0;
};

/// Euler-Maruyama step of dx = (r x + B^T pi) dt + pi^T sigma dW with the
/// regime held fixed across the step.
WealthState wealth_step(const MarketModel& model, const WealthState& state, const Eigen::VectorXd& portfolio,
                        double dt, const Eigen::VectorXd& dW);

/// Allocation-free kernel behind wealth_step, for use inside simulation loops.
inline double wealth_increment(const MarketSegment& seg, double x, const Eigen::Ref<const Eigen::VectorXd>& portfolio,
                               double dt, const Eigen::Ref<const Eigen::VectorXd>& dW) {
    double drift = seg.r * x;
    double noise = 0.0;
    for (Eigen::Index m = 0; m < portfolio.size(); ++m) {
        drift += seg.excess(m) * portfolio(m);
        double loading = 0.0;
        for (Eigen::Index j = 0; j < dW.size(); ++j) loading += seg.sigma(m, j) * dW(j);
        noise += portfolio(m) * loading;
    }
    return drift * dt + noise;
}

} // namespace rsmv
