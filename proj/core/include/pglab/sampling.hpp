#pragma once

#include "pglab/baseline.hpp"
#include "pglab/critic.hpp"
#include "pglab/mdp.hpp"
#include "pglab/policy.hpp"
#include "pglab/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pglab {

struct TrajectoryStep {
    int state = 0;
    int action = 0;
    double reward = 0.0;
};

/// One sampled episode. Episodes always have at least one step because the
/// initial distribution carries no mass on terminal states.
struct Trajectory {
    std::vector<TrajectoryStep> steps;
    double discounted_return = 0.0;
    bool hit_horizon_cap = false; ///< stopped by the cap, not by a terminal

    int length() const { return static_cast<int>(steps.size()); }
};

/// Episode horizon making the truncated tail numerically irrelevant: the
/// smallest H with gamma^H < 1e-10 and gamma^H * R_max / (1 - gamma) < 1e-9,
/// capped at 100000 (the cap binds only at gamma = 1, where termination is
/// guaranteed by the validation gate instead).
int default_horizon(const Mdp& mdp);

struct SimulationOptions {
    int max_horizon = 0; ///< 0 means default_horizon(mdp)
};

/// S_0 ~ initial, A_t ~ pi(S_t, .), S_{t+1} ~ P(S_t, A_t, .); stops at a
/// terminal state or after max_horizon steps (recorded, not an error).
Trajectory simulate_episode(const Mdp& mdp, const SoftmaxPolicy& policy, RngStream& rng,
                            int max_horizon);

/// The three sampled gradient estimators. All are unbiased for the exact
/// gradient; they differ only in variance.
enum class EstimatorKind {
    Reinforce,              ///< sum_t gamma^t psi(S_t, A_t) G_t
    ReinforceStateBaseline, ///< same with G_t - b(S_t)
    Thm1Critic              ///< per-visit sum_t gamma^t psi (f(S_t,A_t) + b(S_t,A_t))
};

const char* to_string(EstimatorKind kind);

/// An estimator plus the inputs its kind requires. `critic` must be a
/// residual-target fit paired with `baseline` for Thm1Critic;
/// `state_baseline` (empty = zeros) feeds ReinforceStateBaseline.
struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::Reinforce;
    Eigen::VectorXd state_baseline;
    std::optional<CriticFit> critic;
    std::optional<Baseline> baseline;
    std::string label;
};

struct GradientEstimate {
    Eigen::VectorXd mean;
    Eigen::VectorXd per_coordinate_variance; ///< unbiased sample variance
    long num_episodes = 0;
    EstimatorKind estimator_kind = EstimatorKind::Reinforce;
    std::uint64_t seed = 0;

    /// Componentwise sqrt(variance / num_episodes).
    Eigen::VectorXd standard_error() const;
};

/// The estimator's contribution from one finished episode; exposed so tests
/// can enumerate every outcome of a small MDP exactly.
Eigen::VectorXd episode_gradient(const Mdp& mdp, const SoftmaxPolicy& policy,
                                 const Trajectory& trajectory, const EstimatorSpec& spec);

/// Monte Carlo mean and per-coordinate variance over num_episodes episodes.
/// Episode i always consumes the stream derived from (seed, i), so results
/// are independent of evaluation order and common random numbers across
/// estimators come for free by reusing the seed.
GradientEstimate estimate_gradient(const Mdp& mdp, const SoftmaxPolicy& policy,
                                   const EstimatorSpec& spec, long num_episodes,
                                   std::uint64_t seed,
                                   const SimulationOptions& options = {});

/// Side-by-side variance comparison under common random numbers.
struct VarianceReport {
    std::vector<std::string> labels;
    std::vector<GradientEstimate> estimates;
    std::vector<double> variance_trace; ///< sum of per-coordinate variances
};

VarianceReport variance_report(const Mdp& mdp, const SoftmaxPolicy& policy,
                               const std::vector<EstimatorSpec>& specs, long num_episodes,
                               std::uint64_t seed, const SimulationOptions& options = {});

} // namespace pglab
