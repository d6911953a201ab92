#include "pglab/critic.hpp"

#include "pglab/errors.hpp"
#include "pglab/linalg.hpp"

namespace pglab {

namespace {

void check_baseline_shape(const Mdp& mdp, const Baseline& baseline, const char* what) {
    if (baseline.table.rows() != mdp.num_states() || baseline.table.cols() != mdp.num_actions())
        throw ContractViolation(std::string(what) + ": baseline table shape does not match the mdp");
}

// The state-s block of sum_a pi(s,a) g(a) psi(s,a) for softmax scores:
// pi .* g - (pi . g) pi.
Eigen::VectorXd weighted_score_sum(const Eigen::VectorXd& pi, const Eigen::VectorXd& g) {
    return pi.cwiseProduct(g) - pi.dot(g) * pi;
}

// f_w(s, .) for the state-s parameter block: w_s - (pi . w_s) 1.
Eigen::VectorXd critic_row(const Eigen::VectorXd& pi, const Eigen::VectorXd& w_block) {
    return (w_block.array() - pi.dot(w_block)).matrix();
}

Eigen::VectorXd w_block_of(const SoftmaxPolicy& policy, const CriticFit& critic, int s) {
    return critic.w.segment(policy.block_start(s), policy.num_actions());
}

CriticFit fit_impl(const Mdp& mdp, const SoftmaxPolicy& policy, const ExactSolution& exact,
                   const Baseline* baseline) {
    check_policy_matches(mdp, policy);
    const NormalEquations eqs = build_normal_equations(mdp, policy, exact, baseline);
    const MinNormSolution sol = min_norm_solve(eqs.gram, eqs.moment);

    CriticFit fit;
    fit.w = sol.x;
    fit.rank = sol.rank;
    fit.normal_residual = sol.residual;
    fit.target_kind = baseline ? CriticTarget::Residual : CriticTarget::QValues;
    fit.pairing = critic_pairing_fingerprint(mdp, policy, fit.target_kind, baseline);
    fit.fitted = Eigen::MatrixXd::Zero(mdp.num_states(), mdp.num_actions());
    fit.loss_value = 0.0;
    for (int s : mdp.nonterminal_states()) {
        const Eigen::VectorXd pi = policy.action_probabilities(s);
        fit.fitted.row(s) = critic_row(pi, w_block_of(policy, fit, s)).transpose();
        for (int a = 0; a < mdp.num_actions(); ++a) {
            const double target =
                exact.action_values(s, a) - (baseline ? baseline->value(s, a) : 0.0);
            const double err = fit.fitted(s, a) - target;
            fit.loss_value += exact.occupancy(s) * pi(a) * err * err;
        }
    }
    return fit;
}

} // namespace

const char* to_string(CriticTarget target) {
    switch (target) {
    case CriticTarget::QValues: return "q_values";
    case CriticTarget::Residual: return "residual";
    }
    return "unknown";
}

std::uint64_t critic_pairing_fingerprint(const Mdp& mdp, const SoftmaxPolicy& policy,
                                         CriticTarget target, const Baseline* baseline) {
    Fingerprint fp;
    fp.add("critic-pairing")
        .add(mdp.fingerprint())
        .add(policy.fingerprint())
        .add(to_string(target));
    if (baseline)
        fp.add(baseline->fingerprint());
    else
        fp.add("no-baseline");
    return fp.digest();
}

NormalEquations build_normal_equations(const Mdp& mdp, const SoftmaxPolicy& policy,
                                       const ExactSolution& exact, const Baseline* baseline) {
    check_policy_matches(mdp, policy);
    if (baseline) check_baseline_shape(mdp, *baseline, "build_normal_equations");
    const int n = policy.parameter_count();
    NormalEquations eqs;
    eqs.gram = Eigen::MatrixXd::Zero(n, n);
    eqs.moment = Eigen::VectorXd::Zero(n);
    // psi(s, a) lives entirely in state s's parameter block, so A is block
    // diagonal and c decomposes blockwise; accumulate in ascending state
    // order for bit-reproducible sums.
    for (int s : mdp.nonterminal_states()) {
        const Eigen::VectorXd pi = policy.action_probabilities(s);
        const int start = policy.block_start(s);
        const int na = mdp.num_actions();
        for (int a = 0; a < na; ++a) {
            const double weight = exact.occupancy(s) * pi(a);
            Eigen::VectorXd psi = -pi;
            psi(a) += 1.0;
            eqs.gram.block(start, start, na, na).noalias() += weight * psi * psi.transpose();
            const double target =
                exact.action_values(s, a) - (baseline ? baseline->value(s, a) : 0.0);
            eqs.moment.segment(start, na).noalias() += weight * target * psi;
        }
    }
    return eqs;
}

CriticFit fit_critic(const Mdp& mdp, const SoftmaxPolicy& policy, const ExactSolution& exact) {
    return fit_impl(mdp, policy, exact, nullptr);
}

CriticFit fit_critic(const Mdp& mdp, const SoftmaxPolicy& policy, const ExactSolution& exact,
                     const Baseline& baseline) {
    return fit_impl(mdp, policy, exact, &baseline);
}

Eigen::VectorXd assemble_gradient_thm1(const Mdp& mdp, const SoftmaxPolicy& policy,
                                       const ExactSolution& exact, const CriticFit& critic,
                                       const Baseline& baseline) {
    check_policy_matches(mdp, policy);
    check_baseline_shape(mdp, baseline, "assemble_gradient_thm1");
    if (critic.target_kind != CriticTarget::Residual)
        throw ContractViolation(
            "assemble_gradient_thm1: critic must be fit on the residual target");
    if (critic.pairing !=
        critic_pairing_fingerprint(mdp, policy, CriticTarget::Residual, &baseline))
        throw PairingMismatchError(
            "assemble_gradient_thm1: critic was fit against a different (mdp, policy, baseline)");
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(policy.parameter_count());
    for (int s : mdp.nonterminal_states()) {
        const Eigen::VectorXd pi = policy.action_probabilities(s);
        const Eigen::VectorXd total = critic_row(pi, w_block_of(policy, critic, s)) +
                                      baseline.table.row(s).transpose();
        grad.segment(policy.block_start(s), mdp.num_actions()) =
            exact.occupancy(s) * weighted_score_sum(pi, total);
    }
    return grad;
}

Eigen::VectorXd assemble_gradient_s2(const Mdp& mdp, const SoftmaxPolicy& policy,
                                     const ExactSolution& exact, const CriticFit& critic,
                                     const Eigen::VectorXd& state_baseline) {
    check_policy_matches(mdp, policy);
    if (state_baseline.size() != mdp.num_states())
        throw ContractViolation("assemble_gradient_s2: state baseline has wrong length");
    if (critic.target_kind != CriticTarget::QValues)
        throw ContractViolation("assemble_gradient_s2: critic must be fit on raw action values");
    if (critic.pairing !=
        critic_pairing_fingerprint(mdp, policy, CriticTarget::QValues, nullptr))
        throw PairingMismatchError(
            "assemble_gradient_s2: critic was fit against a different (mdp, policy)");
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(policy.parameter_count());
    for (int s : mdp.nonterminal_states()) {
        const Eigen::VectorXd pi = policy.action_probabilities(s);
        const Eigen::VectorXd shifted =
            (critic_row(pi, w_block_of(policy, critic, s)).array() - state_baseline(s)).matrix();
        grad.segment(policy.block_start(s), mdp.num_actions()) =
            exact.occupancy(s) * weighted_score_sum(pi, shifted);
    }
    return grad;
}

Eigen::VectorXd baseline_leakage(const Mdp& mdp, const SoftmaxPolicy& policy,
                                 const ExactSolution& exact, const Baseline& baseline) {
    check_policy_matches(mdp, policy);
    check_baseline_shape(mdp, baseline, "baseline_leakage");
    Eigen::VectorXd leakage = Eigen::VectorXd::Zero(policy.parameter_count());
    for (int s : mdp.nonterminal_states()) {
        const Eigen::VectorXd pi = policy.action_probabilities(s);
        leakage.segment(policy.block_start(s), mdp.num_actions()) =
            exact.occupancy(s) * weighted_score_sum(pi, baseline.table.row(s).transpose());
    }
    return leakage;
}

BiasProbeReport bias_probe(const Mdp& mdp, const SoftmaxPolicy& policy,
                           const ExactSolution& exact, const Baseline& baseline) {
    check_policy_matches(mdp, policy);
    check_baseline_shape(mdp, baseline, "bias_probe");
    const CriticFit q_fit = fit_critic(mdp, policy, exact);
    BiasProbeReport report;
    report.naive_gradient = Eigen::VectorXd::Zero(policy.parameter_count());
    for (int s : mdp.nonterminal_states()) {
        const Eigen::VectorXd pi = policy.action_probabilities(s);
        const Eigen::VectorXd shifted = critic_row(pi, w_block_of(policy, q_fit, s)) -
                                        baseline.table.row(s).transpose();
        report.naive_gradient.segment(policy.block_start(s), mdp.num_actions()) =
            exact.occupancy(s) * weighted_score_sum(pi, shifted);
    }
    report.true_gradient = exact.gradient;
    report.leakage = baseline_leakage(mdp, policy, exact, baseline);
    report.bias_norm = (report.naive_gradient - report.true_gradient).norm();
    report.decomposition_residual = (report.naive_gradient + report.leakage -
                                     report.true_gradient)
                                        .lpNorm<Eigen::Infinity>();
    return report;
}

} // namespace pglab
