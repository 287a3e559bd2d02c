#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace rsmv {

/// Random stream type used everywhere a draw is needed.
using RandomStream = std::mt19937_64;

/// Independent stream for path `index` of a batch seeded with `base_seed`.
/// Results are reproducible given (base_seed, index) regardless of the
/// order in which paths are processed.
RandomStream make_stream(std::uint64_t base_seed, std::uint64_t index);

/// Generator of a homogeneous continuous-time Markov chain on regimes
/// 0..N-1. Off-diagonal rates are nonnegative and each row sums to zero.
class ValidatedGenerator {
public:
    int n_regimes() const { return static_cast<int>(q_.rows()); }
    const Eigen::MatrixXd& q() const { return q_; }
    double rate(int from, int to) const { return q_(from, to); }
    /// Total exit rate -q_ii.
    double exit_rate(int i) const { return -q_(i, i); }

private:
    friend ValidatedGenerator validate_generator(const std::vector<std::vector<double>>& raw);
    explicit ValidatedGenerator(Eigen::MatrixXd q) : q_(std::move(q)) {}

    Eigen::MatrixXd q_;
};

/// Tolerance on |row sum| below which a row is re-centered on its diagonal.
inline constexpr double kRowSumTolerance = 1e-9;
/// Largest step used by the forward Kolmogorov integrator (years).
inline constexpr double kKolmogorovMaxStep = 1e-3;

/// Throws ValidationError with code NotSquare, NonFiniteEntry,
/// NegativeOffDiagonal or RowSumViolation.
ValidatedGenerator validate_generator(const std::vector<std::vector<double>>& raw);

/// p_ij(t) = P(alpha(t) = j | alpha(0) = i), obtained by integrating
/// dP/dt = P Q with classical RK4 at step <= kKolmogorovMaxStep.
Eigen::MatrixXd transition_matrix(const ValidatedGenerator& gen, double t);

/// Marginal law of the chain started in `i0`, one row per grid time.
/// The grid must be ascending and start at 0. Returns a
/// grid.size() x N matrix.
Eigen::MatrixXd occupation_probabilities(const ValidatedGenerator& gen, int i0,
                                         std::span<const double> grid);

struct ChainPath {
    int initial_regime = 0;
    std::vector<double> jump_times;    // strictly increasing, in (0, T]
    std::vector<int> post_jump_regimes;
    double horizon = 0.0;

    /// Regime occupied just before time t, i.e. alpha(t-).
    int regime_before(double t) const;
    /// Regime at time t (right-continuous).
    int regime_at(double t) const;
};

/// Gillespie-style sampling: exponential holding times at rate -q_ii,
/// destinations proportional to q_ij.
ChainPath sample_path(const ValidatedGenerator& gen, int i0, double horizon, RandomStream& rng);

/// Counting processes Phi_j (jumps into regime j) and their compensators
/// int_0^t lambda_j ds with lambda_j(t) = q[alpha(t-)][j] for j != alpha(t-).
/// Phi_j is a step function; the compensator is piecewise linear with
/// kinks at the path's jump times.
class CountingRecord {
public:
    int n_regimes() const { return static_cast<int>(jump_times_into_.size()); }
    double horizon() const { return horizon_; }

    int count(int j) const { return static_cast<int>(jump_times_into_[j].size()); }
    int count_until(int j, double t) const;
    double compensator(int j) const { return compensator_until(j, horizon_); }
    double compensator_until(int j, double t) const;
    const std::vector<double>& jump_times_into(int j) const { return jump_times_into_[j]; }

private:
    friend CountingRecord counting_processes(const ChainPath&, const ValidatedGenerator&);

    double horizon_ = 0.0;
    std::vector<std::vector<double>> jump_times_into_;
    std::vector<double> segment_start_;    // 0 followed by the jump times
    Eigen::MatrixXd cumulative_;           // compensator at each segment start, segments x N
    Eigen::MatrixXd rate_;                 // lambda_j on each segment, segments x N
};

/// Throws ValidationError(DimensionMismatch) when the path visits a regime
/// outside the generator's state space.
CountingRecord counting_processes(const ChainPath& path, const ValidatedGenerator& gen);

} // namespace rsmv
