#pragma once

#include <vector>

namespace rsmv {

struct DensitySegment {
    double t_start = 0.0;
    double f = 0.0;  // exit density, 1/year

    bool operator==(const DensitySegment&) const = default;
};

inline constexpr double kDefaultSurvivalMargin = 0.05;

/// Random exit time with deterministic, piecewise-constant density f on
/// [0, T]. F(t) = int_0^t f is piecewise linear and F(T) <= 1 - epsilon.
class HorizonSpec {
public:
    double horizon() const { return horizon_; }
    double epsilon() const { return epsilon_; }
    const std::vector<DensitySegment>& density_schedule() const { return segments_; }

    /// Density in force at t (right-continuous).
    double density(double t) const;
    /// Density used across an integration step (segment of the midpoint).
    double density_for_step(double t_lo, double t_hi) const;
    /// F(T), the probability of exiting before T.
    double exit_probability() const { return cumulative_.back(); }

    bool operator==(const HorizonSpec&) const = default;

private:
    friend HorizonSpec build_horizon(std::vector<DensitySegment>, double, double);
    friend double cdf(const HorizonSpec&, double);
    friend double sample_exit(const HorizonSpec&, double);

    std::size_t index_of(double t) const;

    double horizon_ = 1.0;
    double epsilon_ = kDefaultSurvivalMargin;
    std::vector<DensitySegment> segments_;
    std::vector<double> cumulative_;  // F at each segment start, plus F(T) last
};

/// Errors (ValidationError codes): ScheduleGap, NegativeDensity,
/// BadEpsilon, SurvivalMarginViolated.
HorizonSpec build_horizon(std::vector<DensitySegment> density_schedule, double horizon,
                          double epsilon = kDefaultSurvivalMargin);

/// F(t), exact for piecewise-constant f. Throws OutOfRangeTime outside [0, T].
double cdf(const HorizonSpec& spec, double t);

/// Effective exit time tau ^ T by inverse-CDF sampling from a uniform draw u.
double sample_exit(const HorizonSpec& spec, double u);

} // namespace rsmv
