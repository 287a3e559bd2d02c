#include "rsmv/market.hpp"

#include "rsmv/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rsmv {

namespace {

constexpr double kTimeSlack = 1e-12;

std::string where(std::size_t regime, std::size_t seg) {
    return "regime " + std::to_string(regime + 1) + ", segment " + std::to_string(seg + 1);
}

} // namespace

MarketModel build_market(const MarketSpec& spec) {
    if (spec.regimes.empty()) {
        throw ValidationError("EmptyMarket", "market needs at least one regime");
    }
    if (!(spec.horizon > 0.0) || !std::isfinite(spec.horizon)) {
        throw ValidationError("NonPositiveHorizon", "horizon T must be positive and finite");
    }
    if (!(spec.delta_floor > 0.0)) {
        throw ValidationError("DegenerateVolatility", "nondegeneracy floor delta must be positive");
    }

    MarketModel model;
    model.spec_ = spec;
    model.delta_ = std::numeric_limits<double>::infinity();
    model.n_assets_ = static_cast<int>(spec.regimes.front().empty() ? 0 : spec.regimes.front().front().mu.size());
    if (model.n_assets_ == 0) {
        throw ValidationError("DimensionMismatch", "market needs at least one asset");
    }
    const auto n = static_cast<Eigen::Index>(model.n_assets_);

    for (std::size_t i = 0; i < spec.regimes.size(); ++i) {
        const auto& sched = spec.regimes[i];
        if (sched.empty() || sched.front().t_start != 0.0) {
            throw ValidationError("ScheduleGap", "regime " + std::to_string(i + 1) + " schedule must start at t = 0");
        }
        std::vector<MarketSegment> segs;
        for (std::size_t s = 0; s < sched.size(); ++s) {
            const auto& in = sched[s];
            const double t_end = s + 1 < sched.size() ? sched[s + 1].t_start : spec.horizon;
            if (!(t_end > in.t_start) || in.t_start >= spec.horizon) {
                throw ValidationError("ScheduleGap", where(i, s) + ": segment starts must be increasing and < T");
            }
            if (in.mu.size() != static_cast<std::size_t>(n) || in.sigma.size() != static_cast<std::size_t>(n)) {
                throw ValidationError("DimensionMismatch", where(i, s) + ": mu and sigma must have n_assets rows");
            }
            MarketSegment seg;
            seg.t_start = in.t_start;
            seg.t_end = t_end;
            seg.r = in.r;
            seg.mu = Eigen::Map<const Eigen::VectorXd>(in.mu.data(), n);
            seg.sigma.resize(n, n);
            for (Eigen::Index m = 0; m < n; ++m) {
                const auto& row = in.sigma[static_cast<std::size_t>(m)];
                if (row.size() != static_cast<std::size_t>(n)) {
                    throw ValidationError("DimensionMismatch", where(i, s) + ": sigma must be square");
                }
                for (Eigen::Index k = 0; k < n; ++k) seg.sigma(m, k) = row[static_cast<std::size_t>(k)];
            }
            if (!std::isfinite(seg.r) || !seg.mu.allFinite() || !seg.sigma.allFinite()) {
                throw ValidationError("NonFiniteCoefficient", where(i, s) + ": coefficients must be finite");
            }
            if (!(seg.r > 0.0) && !(spec.allow_zero_rate && seg.r == 0.0)) {
                throw ValidationError("NonPositiveRate", where(i, s) + ": interest rate must be positive");
            }
            if ((seg.sigma.array() < 0.0).any()) {
                model.warnings_.push_back(where(i, s) + ": negative volatility entry (allowed, formulas do not use the sign)");
            }
            const Eigen::MatrixXd cov = seg.sigma * seg.sigma.transpose();
            const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov, Eigen::EigenvaluesOnly)
                                       .eigenvalues()
                                       .minCoeff();
            if (!(min_eig >= spec.delta_floor)) {
                throw ValidationError("DegenerateVolatility", where(i, s) + ": smallest eigenvalue of sigma sigma^T is " +
                                                                  std::to_string(min_eig));
            }
            model.delta_ = std::min(model.delta_, min_eig);

            seg.excess = seg.mu - Eigen::VectorXd::Constant(n, seg.r);
            seg.theta = seg.sigma.partialPivLu().solve(seg.excess);
            seg.gain = seg.sigma.transpose().partialPivLu().solve(seg.theta);
            seg.theta_sq = seg.theta.squaredNorm();
            segs.push_back(std::move(seg));
        }
        model.segments_.push_back(std::move(segs));
    }
    return model;
}

const MarketSegment& MarketModel::segment(double t, int regime) const {
    if (!(t >= -kTimeSlack && t <= horizon() + kTimeSlack)) {
        throw ValidationError("OutOfRangeTime", "time " + std::to_string(t) + " outside [0, T]");
    }
    const auto& segs = segments_[static_cast<std::size_t>(regime)];
    const auto it = std::upper_bound(segs.begin(), segs.end(), t,
                                     [](double v, const MarketSegment& s) { return v < s.t_start; });
    return it == segs.begin() ? segs.front() : *(it - 1);
}

const MarketSegment& MarketModel::segment_for_step(double t_lo, double t_hi, int regime) const {
    const auto& segs = segments_[static_cast<std::size_t>(regime)];
    if (segs.size() == 1) return segs.front();
    return segment(0.5 * (t_lo + t_hi), regime);
}

std::vector<double> MarketModel::breakpoints() const {
    std::vector<double> out;
    for (const auto& segs : segments_) {
        for (const auto& s : segs) out.push_back(s.t_start);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Eigen::VectorXd excess_return(const MarketModel& model, double t, int regime) {
    return model.segment(t, regime).excess;
}

Eigen::VectorXd theta(const MarketModel& model, double t, int regime) {
    return model.segment(t, regime).theta;
}

WealthState wealth_step(const MarketModel& model, const WealthState& state, const Eigen::VectorXd& portfolio,
                        double dt, const Eigen::VectorXd& dW) {
    const auto& seg = model.segment(state.t, state.regime);
    return {state.x + wealth_increment(seg, state.x, portfolio, dt, dW), state.t + dt, state.regime};
}

} // namespace rsmv
