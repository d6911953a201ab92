#pragma once

#include "pglab/fingerprint.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace pglab {

/// One invariant violation found by validate_mdp. `index` identifies the
/// offending entry (state, or state-action) and `magnitude` the size of the
/// violation, e.g. |row sum - 1|.
struct ValidationIssue {
    std::string field;
    std::vector<std::int64_t> index;
    double magnitude = 0.0;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool ok() const { return issues.empty(); }
    std::string to_string() const;
};

/// Finite tabular MDP with expected immediate rewards and absorbing,
/// zero-reward terminal states. Construction checks shapes only; value-level
/// invariants (stochasticity, terminal conventions, discount gate) are the
/// job of validate_mdp, so deliberately broken instances can be built for
/// testing the validator itself.
///
/// Immutable after construction.
class Mdp {
public:
    /// `transition[a]` is the num_states x num_states matrix whose row s is
    /// the distribution over successor states for action a.
    Mdp(int num_states, int num_actions, double gamma,
        std::vector<Eigen::MatrixXd> transition,
        Eigen::MatrixXd reward,
        Eigen::VectorXd initial,
        std::vector<bool> terminal);

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    double gamma() const { return gamma_; }

    double transition(int s, int a, int next) const { return transition_[static_cast<std::size_t>(a)](s, next); }
    const Eigen::MatrixXd& transition_matrix(int a) const { return transition_[static_cast<std::size_t>(a)]; }
    double reward(int s, int a) const { return reward_(s, a); }
    const Eigen::MatrixXd& rewards() const { return reward_; }
    const Eigen::VectorXd& initial() const { return initial_; }
    bool is_terminal(int s) const { return terminal_[static_cast<std::size_t>(s)]; }
    const std::vector<bool>& terminal_flags() const { return terminal_; }

    /// Non-terminal state indices in ascending order. This ordering defines
    /// the policy parameter layout shared by every module.
    const std::vector<int>& nonterminal_states() const { return nonterminal_; }
    int num_nonterminal() const { return static_cast<int>(nonterminal_.size()); }

    double max_abs_reward() const;

    std::uint64_t fingerprint() const;

private:
    int num_states_;
    int num_actions_;
    double gamma_;
    std::vector<Eigen::MatrixXd> transition_;
    Eigen::MatrixXd reward_;
    Eigen::VectorXd initial_;
    std::vector<bool> terminal_;
    std::vector<int> nonterminal_;
};

/// Check every Mdp invariant and report all violations; never throws.
/// Row stochasticity and the initial distribution are checked to 1e-12.
/// gamma = 1 is accepted only when a terminal state is reachable from every
/// state under every deterministic policy.
ValidationReport validate_mdp(const Mdp& mdp);

/// True iff from every state a terminal state is reachable no matter which
/// deterministic policy is followed (universal reachability over the support
/// graph of the transition tensor). This is the gate that makes gamma = 1
/// solvable.
bool terminal_reachable_under_all_policies(const Mdp& mdp);

/// Canonical two-state test instance: from the start state, action 0 pays 1
/// and action 1 pays 0; both move to the terminal state. One decision per
/// episode.
Mdp make_two_arm_bandit(double gamma);

/// Seeded random instance: Dirichlet-flat transition rows blended with a
/// guaranteed 0.05 step probability into the designated terminal state
/// (the last state), rewards uniform in [-1, 1], Dirichlet-flat initial
/// distribution over non-terminal states. Pure function of its arguments.
Mdp make_random_mdp(int num_states, int num_actions, double gamma, std::uint64_t seed);

} // namespace pglab
