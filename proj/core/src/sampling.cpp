#include "pglab/sampling.hpp"

#include "pglab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pglab {

namespace {

constexpr int kHorizonCap = 100000;
constexpr double kDiscountFloor = 1e-10;
constexpr double kTruncationBudget = 1e-9;

// Everything the per-episode inner loops need, precomputed once so episode
// simulation allocates nothing.
struct SamplerTables {
    Eigen::MatrixXd probs;                      // pi(s, a)
    std::vector<Eigen::VectorXd> action_dist;   // per state
    std::vector<Eigen::VectorXd> successor_dist; // per (s * A + a)
};

SamplerTables build_tables(const Mdp& mdp, const SoftmaxPolicy& policy) {
    SamplerTables t;
    t.probs = Eigen::MatrixXd::Zero(mdp.num_states(), mdp.num_actions());
    t.action_dist.assign(static_cast<std::size_t>(mdp.num_states()), Eigen::VectorXd());
    t.successor_dist.assign(
        static_cast<std::size_t>(mdp.num_states() * mdp.num_actions()), Eigen::VectorXd());
    for (int s : mdp.nonterminal_states()) {
        const Eigen::VectorXd pi = policy.action_probabilities(s);
        t.probs.row(s) = pi.transpose();
        t.action_dist[static_cast<std::size_t>(s)] = pi;
        for (int a = 0; a < mdp.num_actions(); ++a)
            t.successor_dist[static_cast<std::size_t>(s * mdp.num_actions() + a)] =
                mdp.transition_matrix(a).row(s).transpose();
    }
    return t;
}

void simulate_into(const Mdp& mdp, const SamplerTables& tables, RngStream& rng, int max_horizon,
                   Trajectory& traj) {
    traj.steps.clear();
    traj.discounted_return = 0.0;
    traj.hit_horizon_cap = false;
    int s = rng.sample_categorical(mdp.initial());
    double discount = 1.0;
    while (!mdp.is_terminal(s)) {
        if (traj.length() >= max_horizon) {
            traj.hit_horizon_cap = true;
            break;
        }
        const int a = rng.sample_categorical(tables.action_dist[static_cast<std::size_t>(s)]);
        const double r = mdp.reward(s, a);
        traj.steps.push_back({s, a, r});
        traj.discounted_return += discount * r;
        discount *= mdp.gamma();
        s = rng.sample_categorical(
            tables.successor_dist[static_cast<std::size_t>(s * mdp.num_actions() + a)]);
    }
}

// The per-episode estimator sum; shared by estimate_gradient's hot loop and
// the test-facing episode_gradient so the two agree bit for bit.
void episode_gradient_into(const Mdp& mdp, const SoftmaxPolicy& policy,
                           const SamplerTables& tables, const Trajectory& traj,
                           const EstimatorSpec& spec, std::vector<double>& suffix_returns,
                           Eigen::VectorXd& out) {
    out.setZero();
    const int T = traj.length();
    if (spec.kind != EstimatorKind::Thm1Critic) {
        suffix_returns.assign(static_cast<std::size_t>(T), 0.0);
        double g = 0.0;
        for (int t = T - 1; t >= 0; --t) {
            g = traj.steps[static_cast<std::size_t>(t)].reward + mdp.gamma() * g;
            suffix_returns[static_cast<std::size_t>(t)] = g;
        }
    }
    double discount = 1.0;
    const int na = mdp.num_actions();
    for (int t = 0; t < T; ++t) {
        const TrajectoryStep& step = traj.steps[static_cast<std::size_t>(t)];
        double coefficient = 0.0;
        switch (spec.kind) {
        case EstimatorKind::Reinforce:
            coefficient = suffix_returns[static_cast<std::size_t>(t)];
            break;
        case EstimatorKind::ReinforceStateBaseline:
            coefficient = suffix_returns[static_cast<std::size_t>(t)] -
                          (spec.state_baseline.size() > 0 ? spec.state_baseline(step.state) : 0.0);
            break;
        case EstimatorKind::Thm1Critic:
            coefficient = spec.critic->fitted(step.state, step.action) +
                          spec.baseline->value(step.state, step.action);
            break;
        }
        coefficient *= discount;
        // psi(s, a) = e_a - pi(s, .): one dense block per visited state.
        const int start = policy.block_start(step.state);
        out.segment(start, na).noalias() -=
            coefficient * tables.probs.row(step.state).transpose();
        out(start + step.action) += coefficient;
        discount *= mdp.gamma();
    }
}

void check_spec(const Mdp& mdp, const SoftmaxPolicy& policy, const EstimatorSpec& spec) {
    switch (spec.kind) {
    case EstimatorKind::Reinforce:
        break;
    case EstimatorKind::ReinforceStateBaseline:
        if (spec.state_baseline.size() > 0 && spec.state_baseline.size() != mdp.num_states())
            throw ContractViolation("estimate_gradient: state baseline has wrong length");
        break;
    case EstimatorKind::Thm1Critic: {
        if (!spec.critic || !spec.baseline)
            throw ContractViolation(
                "estimate_gradient: thm1_critic needs a fitted critic and its baseline");
        if (spec.critic->target_kind != CriticTarget::Residual)
            throw ContractViolation(
                "estimate_gradient: thm1_critic needs a residual-target critic");
        if (spec.critic->pairing != critic_pairing_fingerprint(mdp, policy, CriticTarget::Residual,
                                                               &*spec.baseline))
            throw PairingMismatchError(
                "estimate_gradient: critic was fit against a different (mdp, policy, baseline)");
        break;
    }
    }
}

} // namespace

int default_horizon(const Mdp& mdp) {
    const double gamma = mdp.gamma();
    if (gamma >= 1.0) return kHorizonCap;
    const double log_gamma = std::log(gamma);
    double exponent = std::log(kDiscountFloor) / log_gamma;
    const double return_scale = mdp.max_abs_reward() / (1.0 - gamma);
    if (return_scale > 0.0)
        exponent = std::max(exponent, std::log(kTruncationBudget / return_scale) / log_gamma);
    // The log-space estimate can land a step off either way; settle the
    // strict inequalities directly so this really is the smallest such H.
    const auto tail_negligible = [&](long n) {
        const double tail = std::pow(gamma, static_cast<double>(n));
        return tail < kDiscountFloor && tail * return_scale < kTruncationBudget;
    };
    long h = std::lround(std::clamp(std::ceil(exponent), 1.0,
                                    static_cast<double>(kHorizonCap)));
    while (h > 1 && tail_negligible(h - 1)) --h;
    while (h < kHorizonCap && !tail_negligible(h)) ++h;
    return static_cast<int>(h);
}

const char* to_string(EstimatorKind kind) {
    switch (kind) {
    case EstimatorKind::Reinforce: return "reinforce";
    case EstimatorKind::ReinforceStateBaseline: return "reinforce_state_baseline";
    case EstimatorKind::Thm1Critic: return "thm1_critic";
    }
    return "unknown";
}

Trajectory simulate_episode(const Mdp& mdp, const SoftmaxPolicy& policy, RngStream& rng,
                            int max_horizon) {
    check_policy_matches(mdp, policy);
    if (max_horizon < 1) throw ContractViolation("simulate_episode: horizon must be >= 1");
    const SamplerTables tables = build_tables(mdp, policy);
    Trajectory traj;
    simulate_into(mdp, tables, rng, max_horizon, traj);
    return traj;
}

Eigen::VectorXd GradientEstimate::standard_error() const {
    return (per_coordinate_variance / static_cast<double>(std::max<long>(num_episodes, 1)))
        .cwiseSqrt();
}

Eigen::VectorXd episode_gradient(const Mdp& mdp, const SoftmaxPolicy& policy,
                                 const Trajectory& trajectory, const EstimatorSpec& spec) {
    check_policy_matches(mdp, policy);
    check_spec(mdp, policy, spec);
    const SamplerTables tables = build_tables(mdp, policy);
    Eigen::VectorXd out(policy.parameter_count());
    std::vector<double> suffix;
    episode_gradient_into(mdp, policy, tables, trajectory, spec, suffix, out);
    return out;
}

GradientEstimate estimate_gradient(const Mdp& mdp, const SoftmaxPolicy& policy,
                                   const EstimatorSpec& spec, long num_episodes,
                                   std::uint64_t seed, const SimulationOptions& options) {
    check_policy_matches(mdp, policy);
    check_spec(mdp, policy, spec);
    if (num_episodes < 1) throw ContractViolation("estimate_gradient: need at least one episode");
    const int horizon = options.max_horizon > 0 ? options.max_horizon : default_horizon(mdp);
    const SamplerTables tables = build_tables(mdp, policy);

    const int n = policy.parameter_count();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sample(n), delta(n);
    Trajectory traj;
    std::vector<double> suffix;
    for (long episode = 0; episode < num_episodes; ++episode) {
        RngStream rng = derive_stream(seed, static_cast<std::uint64_t>(episode));
        simulate_into(mdp, tables, rng, horizon, traj);
        episode_gradient_into(mdp, policy, tables, traj, spec, suffix, sample);
        // Welford, componentwise.
        delta = sample - mean;
        mean.noalias() += delta / static_cast<double>(episode + 1);
        m2.array() += delta.array() * (sample - mean).array();
    }

    GradientEstimate estimate;
    estimate.mean = mean;
    estimate.per_coordinate_variance =
        num_episodes > 1 ? Eigen::VectorXd(m2 / static_cast<double>(num_episodes - 1))
                         : Eigen::VectorXd(Eigen::VectorXd::Zero(n));
    estimate.num_episodes = num_episodes;
    estimate.estimator_kind = spec.kind;
    estimate.seed = seed;
    return estimate;
}

VarianceReport variance_report(const Mdp& mdp, const SoftmaxPolicy& policy,
                               const std::vector<EstimatorSpec>& specs, long num_episodes,
                               std::uint64_t seed, const SimulationOptions& options) {
    VarianceReport report;
    for (const EstimatorSpec& spec : specs) {
        GradientEstimate estimate =
            estimate_gradient(mdp, policy, spec, num_episodes, seed, options);
        report.labels.push_back(spec.label.empty() ? to_string(spec.kind) : spec.label);
        report.variance_trace.push_back(estimate.per_coordinate_variance.sum());
        report.estimates.push_back(std::move(estimate));
    }
    return report;
}

} // namespace pglab
