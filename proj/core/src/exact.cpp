#include "pglab/exact.hpp"

#include "pglab/errors.hpp"

#include <Eigen/LU>

namespace pglab {

namespace {

// Relative residual above which a linear solve is declared singular.
constexpr double kResidualTolerance = 1e-8;

// Policy-averaged transition matrix and reward vector, full state space.
// Terminal rows are left zero; only the non-terminal block is ever read.
struct PolicyDynamics {
    Eigen::MatrixXd transitions; // (s, s') under pi
    Eigen::VectorXd rewards;     // r_pi(s)
};

PolicyDynamics average_dynamics(const Mdp& mdp, const SoftmaxPolicy& policy) {
    PolicyDynamics dyn;
    dyn.transitions = Eigen::MatrixXd::Zero(mdp.num_states(), mdp.num_states());
    dyn.rewards = Eigen::VectorXd::Zero(mdp.num_states());
    for (int s : mdp.nonterminal_states()) {
        const Eigen::VectorXd pi = policy.action_probabilities(s);
        for (int a = 0; a < mdp.num_actions(); ++a) {
            dyn.transitions.row(s) += pi(a) * mdp.transition_matrix(a).row(s);
            dyn.rewards(s) += pi(a) * mdp.reward(s, a);
        }
    }
    return dyn;
}

// Solve M x = b by dense LU with a residual check; M is small and dense.
Eigen::VectorXd solve_checked(const Eigen::MatrixXd& M, const Eigen::VectorXd& b,
                              const char* what) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
    Eigen::VectorXd x = lu.solve(b);
    const double residual = (M * x - b).lpNorm<Eigen::Infinity>();
    const double scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
    if (!x.allFinite() || residual > kResidualTolerance * scale)
        throw SingularSystemError(std::string(what) +
                                  ": linear system is singular or ill-conditioned");
    return x;
}

// Scatter a non-terminal-block vector back to full state indexing.
Eigen::VectorXd scatter(const Mdp& mdp, const Eigen::VectorXd& block) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(mdp.num_states());
    const auto& nt = mdp.nonterminal_states();
    for (std::size_t i = 0; i < nt.size(); ++i) full(nt[i]) = block(static_cast<Eigen::Index>(i));
    return full;
}

// The non-terminal sub-block of a full (s, s') matrix.
Eigen::MatrixXd nonterminal_block(const Mdp& mdp, const Eigen::MatrixXd& full) {
    const auto& nt = mdp.nonterminal_states();
    const int n = mdp.num_nonterminal();
    Eigen::MatrixXd block(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            block(i, j) = full(nt[static_cast<std::size_t>(i)], nt[static_cast<std::size_t>(j)]);
    return block;
}

Eigen::VectorXd gather(const Mdp& mdp, const Eigen::VectorXd& full) {
    const auto& nt = mdp.nonterminal_states();
    Eigen::VectorXd block(mdp.num_nonterminal());
    for (std::size_t i = 0; i < nt.size(); ++i) block(static_cast<Eigen::Index>(i)) = full(nt[i]);
    return block;
}

// v only — the inner loop of finite differencing skips q.
Eigen::VectorXd state_values_only(const Mdp& mdp, const SoftmaxPolicy& policy) {
    if (mdp.num_nonterminal() == 0) return Eigen::VectorXd::Zero(mdp.num_states());
    const PolicyDynamics dyn = average_dynamics(mdp, policy);
    const int n = mdp.num_nonterminal();
    const Eigen::MatrixXd M =
        Eigen::MatrixXd::Identity(n, n) - mdp.gamma() * nonterminal_block(mdp, dyn.transitions);
    return scatter(mdp, solve_checked(M, gather(mdp, dyn.rewards), "solve_values"));
}

Eigen::MatrixXd action_values_from(const Mdp& mdp, const Eigen::VectorXd& state_values) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(mdp.num_states(), mdp.num_actions());
    for (int s : mdp.nonterminal_states())
        for (int a = 0; a < mdp.num_actions(); ++a)
            q(s, a) =
                mdp.reward(s, a) + mdp.gamma() * mdp.transition_matrix(a).row(s).dot(state_values);
    return q;
}

} // namespace

void check_policy_matches(const Mdp& mdp, const SoftmaxPolicy& policy) {
    if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions())
        throw ContractViolation("policy shape does not match the mdp");
    for (int s = 0; s < mdp.num_states(); ++s)
        if (policy.is_terminal(s) != mdp.is_terminal(s))
            throw ContractViolation("policy terminal-state layout does not match the mdp");
}

ValueSolution solve_values(const Mdp& mdp, const SoftmaxPolicy& policy) {
    check_policy_matches(mdp, policy);
    ValueSolution sol;
    sol.state_values = state_values_only(mdp, policy);
    sol.action_values = action_values_from(mdp, sol.state_values);
    sol.objective = mdp.initial().dot(sol.state_values);
    return sol;
}

Eigen::VectorXd solve_occupancy(const Mdp& mdp, const SoftmaxPolicy& policy) {
    check_policy_matches(mdp, policy);
    if (mdp.num_nonterminal() == 0) return Eigen::VectorXd::Zero(mdp.num_states());
    const PolicyDynamics dyn = average_dynamics(mdp, policy);
    const int n = mdp.num_nonterminal();
    const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) -
                              mdp.gamma() * nonterminal_block(mdp, dyn.transitions).transpose();
    return scatter(mdp, solve_checked(M, gather(mdp, mdp.initial()), "solve_occupancy"));
}

ExactSolution solve_exact(const Mdp& mdp, const SoftmaxPolicy& policy) {
    const ValueSolution values = solve_values(mdp, policy);
    ExactSolution sol;
    sol.state_values = values.state_values;
    sol.action_values = values.action_values;
    sol.objective = values.objective;
    sol.occupancy = solve_occupancy(mdp, policy);
    sol.gradient = Eigen::VectorXd::Zero(policy.parameter_count());
    for (int s : mdp.nonterminal_states()) {
        const Eigen::VectorXd pi = policy.action_probabilities(s);
        const Eigen::VectorXd advantage =
            (sol.action_values.row(s).transpose().array() - sol.state_values(s)).matrix();
        sol.gradient.segment(policy.block_start(s), mdp.num_actions()) =
            sol.occupancy(s) * pi.cwiseProduct(advantage);
    }
    return sol;
}

Eigen::VectorXd exact_policy_gradient(const Mdp& mdp, const SoftmaxPolicy& policy) {
    return solve_exact(mdp, policy).gradient;
}

Eigen::VectorXd finite_difference_gradient(const Mdp& mdp, const SoftmaxPolicy& policy,
                                           double step) {
    check_policy_matches(mdp, policy);
    if (!(step > 0.0)) throw ContractViolation("finite_difference_gradient: step must be positive");
    Eigen::VectorXd grad(policy.parameter_count());
    for (int i = 0; i < policy.parameter_count(); ++i) {
        const double rho_up =
            mdp.initial().dot(state_values_only(mdp, policy.perturbed(i, step)));
        const double rho_down =
            mdp.initial().dot(state_values_only(mdp, policy.perturbed(i, -step)));
        grad(i) = (rho_up - rho_down) / (2.0 * step);
    }
    return grad;
}

} // namespace pglab
