#include "rsmv/chain.hpp"

#include "rsmv/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rsmv {

RandomStream make_stream(std::uint64_t base_seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return RandomStream(seq);
}

ValidatedGenerator validate_generator(const std::vector<std::vector<double>>& raw) {
    const auto n = raw.size();
    if (n == 0) {
        throw ValidationError("NotSquare", "generator must have at least one row");
    }
    Eigen::MatrixXd q(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (raw[i].size() != n) {
            throw ValidationError("NotSquare", "generator row " + std::to_string(i + 1) + " has " +
                                                   std::to_string(raw[i].size()) + " entries, expected " +
                                                   std::to_string(n));
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(raw[i][j])) {
                throw ValidationError("NonFiniteEntry", "generator entry (" + std::to_string(i + 1) + "," +
                                                            std::to_string(j + 1) + ") is not finite");
            }
            q(i, j) = raw[i][j];
        }
    }
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        double off = 0.0;
        for (Eigen::Index j = 0; j < q.cols(); ++j) {
            if (i == j) continue;
            if (q(i, j) < 0.0) {
                throw ValidationError("NegativeOffDiagonal", "generator entry (" + std::to_string(i + 1) + "," +
                                                                 std::to_string(j + 1) + ") is negative");
            }
            off += q(i, j);
        }
        const double row_sum = off + q(i, i);
        if (std::abs(row_sum) >= kRowSumTolerance) {
            throw ValidationError("RowSumViolation",
                                  "generator row " + std::to_string(i + 1) + " sums to " + std::to_string(row_sum));
        }
        q(i, i) = -off;
    }
    return ValidatedGenerator(std::move(q));
}

namespace {

// One RK4 step of the row-vector system dP/dt = P Q. Rows evolve independently.
void kolmogorov_rk4(Eigen::MatrixXd& p, const Eigen::MatrixXd& q, double h) {
    const Eigen::MatrixXd k1 = p * q;
    const Eigen::MatrixXd k2 = (p + 0.5 * h * k1) * q;
    const Eigen::MatrixXd k3 = (p + 0.5 * h * k2) * q;
    const Eigen::MatrixXd k4 = (p + h * k3) * q;
    p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void advance(Eigen::MatrixXd& p, const Eigen::MatrixXd& q, double span) {
    if (span <= 0.0) return;
    const auto steps = static_cast<long>(std::ceil(span / kKolmogorovMaxStep - 1e-9));
    const double h = span / static_cast<double>(std::max(steps, 1L));
    for (long k = 0; k < std::max(steps, 1L); ++k) {
        kolmogorov_rk4(p, q, h);
    }
}

} // namespace

Eigen::MatrixXd transition_matrix(const ValidatedGenerator& gen, double t) {
    if (!(t >= 0.0)) {
        throw ValidationError("NegativeTime", "transition_matrix requires t >= 0");
    }
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(gen.n_regimes(), gen.n_regimes());
    advance(p, gen.q(), t);
    return p;
}

Eigen::MatrixXd occupation_probabilities(const ValidatedGenerator& gen, int i0, std::span<const double> grid) {
    const int n = gen.n_regimes();
    if (i0 < 0 || i0 >= n) {
        throw ValidationError("BadRegime", "initial regime out of range");
    }
    if (grid.empty() || grid.front() != 0.0) {
        throw ValidationError("BadGrid", "occupation grid must start at 0");
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(grid.size()), n);
    Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, n);
    row(0, i0) = 1.0;
    out.row(0) = row;
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double span = grid[k] - grid[k - 1];
        if (!(span >= 0.0)) {
            throw ValidationError("BadGrid", "occupation grid must be ascending");
        }
        advance(row, gen.q(), span);
        out.row(static_cast<Eigen::Index>(k)) = row;
    }
    return out;
}

int ChainPath::regime_before(double t) const {
    // alpha(t-): jumps strictly before t
    const auto it = std::lower_bound(jump_times.begin(), jump_times.end(), t);
    const auto k = it - jump_times.begin();
    return k == 0 ? initial_regime : post_jump_regimes[static_cast<std::size_t>(k - 1)];
}

int ChainPath::regime_at(double t) const {
    const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    const auto k = it - jump_times.begin();
    return k == 0 ? initial_regime : post_jump_regimes[static_cast<std::size_t>(k - 1)];
}

ChainPath sample_path(const ValidatedGenerator& gen, int i0, double horizon, RandomStream& rng) {
    if (!(horizon > 0.0)) {
        throw ValidationError("NonPositiveHorizon", "sample_path requires T > 0");
    }
    ChainPath path;
    path.initial_regime = i0;
    path.horizon = horizon;

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int n = gen.n_regimes();
    int state = i0;
    double t = 0.0;
    while (true) {
        const double rate = gen.exit_rate(state);
        if (rate <= 0.0) break;  // absorbing
        std::exponential_distribution<double> hold(rate);
        t += hold(rng);
        if (t > horizon) break;
        double target = unif(rng) * rate;
        int next = -1;
        for (int j = 0; j < n; ++j) {
            if (j == state) continue;
            const double qj = gen.rate(state, j);
            if (qj <= 0.0) continue;
            next = j;
            if (target < qj) break;
            target -= qj;
        }
        path.jump_times.push_back(t);
        path.post_jump_regimes.push_back(next);
        state = next;
    }
    return path;
}

CountingRecord counting_processes(const ChainPath& path, const ValidatedGenerator& gen) {
    const int n = gen.n_regimes();
    const auto in_range = [n](int i) { return i >= 0 && i < n; };
    if (!in_range(path.initial_regime) ||
        !std::all_of(path.post_jump_regimes.begin(), path.post_jump_regimes.end(), in_range) ||
        path.jump_times.size() != path.post_jump_regimes.size()) {
        throw ValidationError("DimensionMismatch", "chain path does not match generator dimension");
    }

    CountingRecord rec;
    rec.horizon_ = path.horizon;
    rec.jump_times_into_.assign(static_cast<std::size_t>(n), {});
    const auto segments = static_cast<Eigen::Index>(path.jump_times.size() + 1);
    rec.segment_start_.reserve(static_cast<std::size_t>(segments));
    rec.segment_start_.push_back(0.0);
    rec.cumulative_ = Eigen::MatrixXd::Zero(segments, n);
    rec.rate_ = Eigen::MatrixXd::Zero(segments, n);

    int state = path.initial_regime;
    for (Eigen::Index s = 0; s < segments; ++s) {
        for (int j = 0; j < n; ++j) {
            rec.rate_(s, j) = j == state ? 0.0 : gen.rate(state, j);
        }
        if (s + 1 < segments) {
            const auto k = static_cast<std::size_t>(s);
            const double t_next = path.jump_times[k];
            rec.cumulative_.row(s + 1) = rec.cumulative_.row(s) + rec.rate_.row(s) * (t_next - rec.segment_start_[k]);
            rec.segment_start_.push_back(t_next);
            state = path.post_jump_regimes[k];
            rec.jump_times_into_[static_cast<std::size_t>(state)].push_back(t_next);
        }
    }
    return rec;
}

int CountingRecord::count_until(int j, double t) const {
    const auto& times = jump_times_into_[static_cast<std::size_t>(j)];
    return static_cast<int>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
}

double CountingRecord::compensator_until(int j, double t) const {
    t = std::clamp(t, 0.0, horizon_);
    const auto it = std::upper_bound(segment_start_.begin(), segment_start_.end(), t);
    const auto s = static_cast<Eigen::Index>(it - segment_start_.begin()) - 1;
    return cumulative_(s, j) + rate_(s, j) * (t - segment_start_[static_cast<std::size_t>(s)]);
}

} // namespace rsmv
