#include "rsmv/horizon.hpp"

#include "rsmv/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rsmv {

HorizonSpec build_horizon(std::vector<DensitySegment> density_schedule, double horizon, double epsilon) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw ValidationError("NonPositiveHorizon", "horizon T must be positive and finite");
    }
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw ValidationError("BadEpsilon", "survival margin epsilon must lie in (0, 1)");
    }
    if (density_schedule.empty() || density_schedule.front().t_start != 0.0) {
        throw ValidationError("ScheduleGap", "density schedule must start at t = 0");
    }
    HorizonSpec spec;
    spec.horizon_ = horizon;
    spec.epsilon_ = epsilon;
    spec.cumulative_.push_back(0.0);
    for (std::size_t k = 0; k < density_schedule.size(); ++k) {
        const auto& seg = density_schedule[k];
        const double t_end = k + 1 < density_schedule.size() ? density_schedule[k + 1].t_start : horizon;
        if (!(t_end > seg.t_start) || seg.t_start >= horizon) {
            throw ValidationError("ScheduleGap", "density segment starts must be increasing and < T");
        }
        if (!std::isfinite(seg.f)) {
            throw ValidationError("NegativeDensity", "density must be finite");
        }
        if (seg.f < 0.0) {
            throw ValidationError("NegativeDensity",
                                  "density segment " + std::to_string(k + 1) + " is negative");
        }
        spec.cumulative_.push_back(spec.cumulative_.back() + seg.f * (t_end - seg.t_start));
    }
    spec.segments_ = std::move(density_schedule);
    if (spec.exit_probability() > 1.0 - epsilon) {
        throw ValidationError("SurvivalMarginViolated", "F(T) = " + std::to_string(spec.exit_probability()) +
                                                            " exceeds 1 - epsilon = " + std::to_string(1.0 - epsilon));
    }
    return spec;
}

std::size_t HorizonSpec::index_of(double t) const {
    const auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                                     [](double v, const DensitySegment& s) { return v < s.t_start; });
    return it == segments_.begin() ? 0 : static_cast<std::size_t>(it - segments_.begin()) - 1;
}

double HorizonSpec::density(double t) const { return segments_[index_of(t)].f; }

double HorizonSpec::density_for_step(double t_lo, double t_hi) const {
    if (segments_.size() == 1) return segments_.front().f;
    return density(0.5 * (t_lo + t_hi));
}

double cdf(const HorizonSpec& spec, double t) {
    if (!(t >= -1e-12 && t <= spec.horizon_ + 1e-12)) {
        throw ValidationError("OutOfRangeTime", "time " + std::to_string(t) + " outside [0, T]");
    }
    t = std::clamp(t, 0.0, spec.horizon_);
    const auto k = spec.index_of(t);
    return spec.cumulative_[k] + spec.segments_[k].f * (t - spec.segments_[k].t_start);
}

double sample_exit(const HorizonSpec& spec, double u) {
    if (u >= spec.exit_probability()) return spec.horizon_;
    // first segment whose cumulative end exceeds u; skips flat (f = 0) pieces
    const auto it = std::upper_bound(spec.cumulative_.begin() + 1, spec.cumulative_.end(), u);
    const auto k = static_cast<std::size_t>(it - spec.cumulative_.begin()) - 1;
    const auto& seg = spec.segments_[k];
    return seg.t_start + (u - spec.cumulative_[k]) / seg.f;
}

} // namespace rsmv
