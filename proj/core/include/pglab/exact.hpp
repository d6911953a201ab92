#pragma once

#include "pglab/mdp.hpp"
#include "pglab/policy.hpp"

#include <Eigen/Dense>

namespace pglab {

/// State values, action values, and the scalar objective for one
/// (mdp, policy) pair. Vectors indexed by state are zero on terminal states.
struct ValueSolution {
    Eigen::VectorXd state_values;   ///< v(s), discounted return from s.
    Eigen::MatrixXd action_values;  ///< q(s, a) = R(s, a) + gamma * E[v(s')].
    double objective = 0.0;         ///< rho = sum_s initial(s) v(s).
};

/// ValueSolution plus the occupancy measure and the exact policy gradient.
/// `gradient` uses the flat parameter layout of the policy (ascending
/// non-terminal states, actions fastest).
struct ExactSolution {
    Eigen::VectorXd state_values;
    Eigen::MatrixXd action_values;
    Eigen::VectorXd occupancy;  ///< d(s), unnormalized discounted visitation.
    double objective = 0.0;
    Eigen::VectorXd gradient;  ///< d rho / d theta, exact.
};

/// Values under the policy: solves (I - gamma P_pi) v = r_pi on the
/// non-terminal block by dense LU, then derives q and rho. Throws
/// SingularSystemError when the linear system is numerically singular
/// (possible only at gamma = 1 with a non-terminal recurrent class, which
/// validate_mdp's reachability gate excludes).
ValueSolution solve_values(const Mdp& mdp, const SoftmaxPolicy& policy);

/// Unnormalized discounted state occupancy d(s) = sum_t gamma^t P(S_t = s):
/// solves (I - gamma P_pi^T) d = initial on the non-terminal block. Zero on
/// terminal states by convention.
Eigen::VectorXd solve_occupancy(const Mdp& mdp, const SoftmaxPolicy& policy);

/// Full exact solve: values, occupancy, objective, and the exact policy
/// gradient assembled from the per-state blocks
/// d(s) * pi(s, .) .* (q(s, .) - v(s)).
ExactSolution solve_exact(const Mdp& mdp, const SoftmaxPolicy& policy);

/// Convenience: just the exact gradient.
Eigen::VectorXd exact_policy_gradient(const Mdp& mdp, const SoftmaxPolicy& policy);

/// Central finite differences of the exact objective, coordinate by
/// coordinate. The reference everything else is checked against;
/// O(parameter_count) linear solves.
Eigen::VectorXd finite_difference_gradient(const Mdp& mdp, const SoftmaxPolicy& policy,
                                           double step = 1e-5);

/// Throws ContractViolation unless the policy's shape and terminal-state
/// layout agree with the mdp's.
void check_policy_matches(const Mdp& mdp, const SoftmaxPolicy& policy);

} // namespace pglab
