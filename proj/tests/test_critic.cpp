#include "doctest.h"

#include "pglab/baseline.hpp"
#include "pglab/critic.hpp"
#include "pglab/errors.hpp"
#include "pglab/exact.hpp"
#include "pglab/mdp.hpp"
#include "pglab/policy.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

using namespace pglab;

namespace {

struct Case {
    Mdp mdp;
    SoftmaxPolicy policy;
    ExactSolution exact;
};

Case make_case(int states, int actions, double gamma, std::uint64_t seed) {
    Mdp mdp = make_random_mdp(states, actions, gamma, seed);
    SoftmaxPolicy policy = SoftmaxPolicy::random(mdp, 2.0, seed + 1000);
    ExactSolution exact = solve_exact(mdp, policy);
    return {std::move(mdp), std::move(policy), std::move(exact)};
}

Case make_bandit_case() {
    Mdp mdp = make_two_arm_bandit(1.0);
    SoftmaxPolicy policy = SoftmaxPolicy::zeros(mdp);
    ExactSolution exact = solve_exact(mdp, policy);
    return {std::move(mdp), std::move(policy), std::move(exact)};
}

double rel_max_err(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
    const double abs_err = (got - want).lpNorm<Eigen::Infinity>();
    if (abs_err == 0.0) return 0.0;
    const double scale = std::max(want.lpNorm<Eigen::Infinity>(), 1e-300);
    return abs_err / scale;
}

} // namespace

TEST_CASE("bandit normal equations at zero logits") {
    const Case c = make_bandit_case();
    const NormalEquations eqs = build_normal_equations(c.mdp, c.policy, c.exact);

    // d(s0) = 1, pi = (1/2, 1/2), psi blocks (1/2,-1/2) and (-1/2,1/2):
    // A = 0.25 [[1,-1],[-1,1]], c = (0.25, -0.25).
    Eigen::MatrixXd gram(2, 2);
    gram << 0.25, -0.25, -0.25, 0.25;
    CHECK((eqs.gram - gram).lpNorm<Eigen::Infinity>() <= 1e-14);
    CHECK(eqs.moment(0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(eqs.moment(1) == doctest::Approx(-0.25).epsilon(1e-14));

    // A null baseline pointer and an explicit zero baseline are the same fit.
    const Baseline zero = zero_baseline(c.mdp);
    const NormalEquations with_zero = build_normal_equations(c.mdp, c.policy, c.exact, &zero);
    CHECK((eqs.gram - with_zero.gram).norm() == 0.0);
    CHECK((eqs.moment - with_zero.moment).norm() == 0.0);
}

TEST_CASE("subtracting q itself zeroes the moment vector") {
    const Case c = make_bandit_case();
    const Baseline q_baseline = table_baseline(c.mdp, c.exact.action_values);
    const NormalEquations eqs = build_normal_equations(c.mdp, c.policy, c.exact, &q_baseline);
    CHECK(eqs.moment.lpNorm<Eigen::Infinity>() <= 1e-14);

    // And the minimum-norm critical point of a homogeneous system is zero.
    const CriticFit fit = fit_critic(c.mdp, c.policy, c.exact, q_baseline);
    CHECK(fit.w.lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(fit.fitted.lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(fit.target_kind == CriticTarget::Residual);
}

TEST_CASE("gram matrix is symmetric positive semidefinite and rank deficient") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Case c = make_case(4 + static_cast<int>(seed % 5), 2 + static_cast<int>(seed % 3),
                                 0.9, seed);
        const NormalEquations eqs = build_normal_equations(c.mdp, c.policy, c.exact);
        CHECK((eqs.gram - eqs.gram.transpose()).lpNorm<Eigen::Infinity>() <= 1e-15);

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(eqs.gram);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-12);

        // Each state block of psi vectors sums to zero under pi, so every
        // block loses one direction: rank = nonterminal * (actions - 1).
        const CriticFit fit = fit_critic(c.mdp, c.policy, c.exact);
        CHECK(fit.rank == c.mdp.num_nonterminal() * (c.mdp.num_actions() - 1));
        CHECK(fit.rank < c.policy.parameter_count());
    }
}

TEST_CASE("bandit critic reproduces the advantage") {
    const Case c = make_bandit_case();
    const CriticFit fit = fit_critic(c.mdp, c.policy, c.exact);
    CHECK(fit.target_kind == CriticTarget::QValues);
    CHECK(fit.fitted(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fit.fitted(0, 1) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(fit.rank == 1);
    CHECK(fit.normal_residual <= 1e-8);
}

TEST_CASE("fit invariants hold across an ensemble") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Case c = make_case(5 + static_cast<int>(seed % 6), 2 + static_cast<int>(seed % 4),
                                 0.99, seed + 10);
        const Baseline b = random_baseline(c.mdp, -10.0, 10.0, seed + 20);
        const CriticFit fit = fit_critic(c.mdp, c.policy, c.exact, b);

        // f_w really is w . psi, tabulated.
        for (int s : c.mdp.nonterminal_states()) {
            for (int a = 0; a < c.mdp.num_actions(); ++a) {
                const double dot = fit.w.dot(c.policy.score_features(s, a));
                CHECK(std::abs(fit.fitted(s, a) - dot) <= 1e-12);
            }
        }
        // w is a critical point: the normal equations hold to roundoff.
        CHECK(fit.normal_residual <= 1e-8);
        CHECK(fit.loss_value >= 0.0);
    }
}

TEST_CASE("minimum-norm fit is linear in the regression target") {
    // fit(target q) should equal fit(target b) + fit(target q - b), since
    // the gram matrix is shared and the pseudo-inverse is linear. A fit
    // against baseline (q - b) has target q - (q - b) = b, which lets the
    // residual-fit entry point express an arbitrary-target fit.
    const Case c = make_case(6, 3, 0.9, 77);
    const Baseline b = random_baseline(c.mdp, -5.0, 5.0, 99);

    const Baseline q_minus_b =
        table_baseline(c.mdp, (c.exact.action_values - b.table).eval());
    const CriticFit on_q = fit_critic(c.mdp, c.policy, c.exact);
    const CriticFit on_b = fit_critic(c.mdp, c.policy, c.exact, q_minus_b); // target = b
    const CriticFit on_residual = fit_critic(c.mdp, c.policy, c.exact, b);  // target = q - b

    CHECK((on_q.w - (on_b.w + on_residual.w)).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("the action-dependent baseline identity holds on the bandit") {
    const Case c = make_bandit_case();
    const Baseline b = random_baseline(c.mdp, -10.0, 10.0, 5);
    const CriticFit fit = fit_critic(c.mdp, c.policy, c.exact, b);
    const Eigen::VectorXd grad = assemble_gradient_thm1(c.mdp, c.policy, c.exact, fit, b);
    CHECK(std::abs(grad(0) - 0.25) <= 1e-10);
    CHECK(std::abs(grad(1) + 0.25) <= 1e-10);
}

TEST_CASE("the identity survives extreme and structured baselines") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Case c = make_case(4 + static_cast<int>(seed), 3, 0.9, seed + 30);
        for (const Baseline& b :
             {random_baseline(c.mdp, -10.0, 10.0, seed),
              constant_baseline(c.mdp, 1e3),
              state_value_baseline(c.mdp, c.exact.state_values),
              table_baseline(c.mdp, c.exact.action_values)}) {
            const CriticFit fit = fit_critic(c.mdp, c.policy, c.exact, b);
            const Eigen::VectorXd grad = assemble_gradient_thm1(c.mdp, c.policy, c.exact, fit, b);
            CHECK(rel_max_err(grad, c.exact.gradient) <= 1e-8);
        }
    }
}

TEST_CASE("with b = q the critic is zero and the baseline carries the gradient") {
    const Case c = make_case(7, 3, 0.95, 123);
    const Baseline q_baseline = table_baseline(c.mdp, c.exact.action_values);
    const CriticFit fit = fit_critic(c.mdp, c.policy, c.exact, q_baseline);
    CHECK(fit.w.lpNorm<Eigen::Infinity>() <= 1e-10);
    const Eigen::VectorXd grad =
        assemble_gradient_thm1(c.mdp, c.policy, c.exact, fit, q_baseline);
    CHECK(rel_max_err(grad, c.exact.gradient) <= 1e-8);
}

TEST_CASE("zero baseline reduces the identity to the state-only form") {
    const Case c = make_case(6, 4, 0.9, 55);
    const Baseline zero = zero_baseline(c.mdp);
    const CriticFit residual_fit = fit_critic(c.mdp, c.policy, c.exact, zero);
    const CriticFit q_fit = fit_critic(c.mdp, c.policy, c.exact);

    const Eigen::VectorXd thm1 =
        assemble_gradient_thm1(c.mdp, c.policy, c.exact, residual_fit, zero);
    const Eigen::VectorXd s2 = assemble_gradient_s2(c.mdp, c.policy, c.exact, q_fit,
                                                    Eigen::VectorXd::Zero(c.mdp.num_states()));
    CHECK((thm1 - s2).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("state-only baselines never move the state-only form") {
    const Case c = make_case(6, 3, 0.9, 60);
    const CriticFit q_fit = fit_critic(c.mdp, c.policy, c.exact);
    const Eigen::VectorXd reference = assemble_gradient_s2(
        c.mdp, c.policy, c.exact, q_fit, Eigen::VectorXd::Zero(c.mdp.num_states()));

    const Eigen::VectorXd with_values =
        assemble_gradient_s2(c.mdp, c.policy, c.exact, q_fit, c.exact.state_values);
    CHECK((with_values - reference).lpNorm<Eigen::Infinity>() <= 1e-10);

    // Conditioning probe: a baseline six orders of magnitude above the
    // signal must still cancel to absolute 1e-6.
    const Eigen::VectorXd huge = Eigen::VectorXd::Constant(c.mdp.num_states(), 1e6);
    const Eigen::VectorXd with_huge = assemble_gradient_s2(c.mdp, c.policy, c.exact, q_fit, huge);
    CHECK((with_huge - reference).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("bandit state-value baseline leaves the exact gradient") {
    const Case c = make_bandit_case();
    const CriticFit q_fit = fit_critic(c.mdp, c.policy, c.exact);
    const Eigen::VectorXd grad =
        assemble_gradient_s2(c.mdp, c.policy, c.exact, q_fit, c.exact.state_values);
    CHECK(std::abs(grad(0) - 0.25) <= 1e-12);
    CHECK(std::abs(grad(1) + 0.25) <= 1e-12);
}

TEST_CASE("pairing hashes reject mismatched combinations") {
    const Case c = make_case(5, 3, 0.9, 200);
    const Baseline b1 = random_baseline(c.mdp, -1.0, 1.0, 1);
    const Baseline b2 = random_baseline(c.mdp, -1.0, 1.0, 2);
    const CriticFit fit = fit_critic(c.mdp, c.policy, c.exact, b1);

    // Wrong baseline.
    CHECK_THROWS_AS(assemble_gradient_thm1(c.mdp, c.policy, c.exact, fit, b2),
                    PairingMismatchError);
    // Wrong policy.
    const SoftmaxPolicy other = SoftmaxPolicy::random(c.mdp, 2.0, 999);
    const ExactSolution other_exact = solve_exact(c.mdp, other);
    CHECK_THROWS_AS(assemble_gradient_thm1(c.mdp, other, other_exact, fit, b1),
                    PairingMismatchError);
    // Wrong target kind is a contract violation, not a pairing failure.
    const CriticFit q_fit = fit_critic(c.mdp, c.policy, c.exact);
    CHECK_THROWS_AS(assemble_gradient_thm1(c.mdp, c.policy, c.exact, q_fit, b1),
                    ContractViolation);
    CHECK_THROWS_AS(assemble_gradient_s2(c.mdp, c.policy, c.exact, fit,
                                         Eigen::VectorXd::Zero(c.mdp.num_states())),
                    ContractViolation);
    // State-only form paired against the wrong policy.
    const CriticFit other_q_fit = fit_critic(c.mdp, other, other_exact);
    CHECK_THROWS_AS(assemble_gradient_s2(c.mdp, c.policy, c.exact, other_q_fit,
                                         Eigen::VectorXd::Zero(c.mdp.num_states())),
                    PairingMismatchError);

    // The hash itself distinguishes target kinds and baselines.
    CHECK(critic_pairing_fingerprint(c.mdp, c.policy, CriticTarget::Residual, &b1) !=
          critic_pairing_fingerprint(c.mdp, c.policy, CriticTarget::Residual, &b2));
    CHECK(critic_pairing_fingerprint(c.mdp, c.policy, CriticTarget::Residual, nullptr) !=
          critic_pairing_fingerprint(c.mdp, c.policy, CriticTarget::QValues, nullptr));
}

TEST_CASE("nullspace moves of the critic weights cannot move the gradient") {
    // Directions with A z = 0 change w without changing the assembled
    // gradient: the gradient shift is exactly A z. This is why the
    // minimum-norm choice is a convention, not a correctness requirement.
    const Case c = make_case(6, 3, 0.9, 300);
    const Baseline b = random_baseline(c.mdp, -10.0, 10.0, 301);
    const CriticFit fit = fit_critic(c.mdp, c.policy, c.exact, b);
    const Eigen::VectorXd reference =
        assemble_gradient_thm1(c.mdp, c.policy, c.exact, fit, b);

    const NormalEquations eqs = build_normal_equations(c.mdp, c.policy, c.exact, &b);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(eqs.gram, Eigen::ComputeFullV);
    const double cutoff = 1e-10 * svd.singularValues()(0);
    int checked = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i) {
        if (svd.singularValues()(i) > cutoff) continue;
        CriticFit shifted = fit;
        shifted.w += 10.0 * svd.matrixV().col(i);
        const Eigen::VectorXd grad =
            assemble_gradient_thm1(c.mdp, c.policy, c.exact, shifted, b);
        CHECK((grad - reference).lpNorm<Eigen::Infinity>() <= 1e-8);
        ++checked;
    }
    // One lost direction per non-terminal state block.
    CHECK(checked == c.mdp.num_nonterminal());
}

TEST_CASE("leakage vanishes exactly for state-only baselines") {
    const Case c = make_case(7, 3, 0.9, 400);
    CHECK(baseline_leakage(c.mdp, c.policy, c.exact,
                           state_value_baseline(c.mdp, c.exact.state_values))
              .lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(baseline_leakage(c.mdp, c.policy, c.exact, constant_baseline(c.mdp, 42.0))
              .lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(baseline_leakage(c.mdp, c.policy, c.exact, zero_baseline(c.mdp))
              .lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("bandit leakage at b = q is the full gradient") {
    const Case c = make_bandit_case();
    const Eigen::VectorXd leak =
        baseline_leakage(c.mdp, c.policy, c.exact, table_baseline(c.mdp, c.exact.action_values));
    CHECK(leak(0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(leak(1) == doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("the naive scheme plus its leakage recovers the exact gradient") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Case c = make_case(4 + static_cast<int>(seed % 6), 2 + static_cast<int>(seed % 3),
                                 0.9, seed + 500);
        const Baseline b = random_baseline(c.mdp, -10.0, 10.0, seed + 600);
        const BiasProbeReport probe = bias_probe(c.mdp, c.policy, c.exact, b);
        CHECK((probe.naive_gradient + probe.leakage - probe.true_gradient)
                  .lpNorm<Eigen::Infinity>() <= 1e-10);
        CHECK(probe.decomposition_residual <= 1e-10);
        CHECK(probe.bias_norm ==
              doctest::Approx((probe.naive_gradient - probe.true_gradient).norm())
                  .epsilon(1e-12));
    }
}

TEST_CASE("bandit naive bias at b = q has the closed-form norm") {
    const Case c = make_bandit_case();
    const BiasProbeReport probe =
        bias_probe(c.mdp, c.policy, c.exact, table_baseline(c.mdp, c.exact.action_values));
    // naive = 0 there, so the bias is the whole gradient: sqrt(2)/4.
    CHECK(probe.naive_gradient.lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(probe.bias_norm == doctest::Approx(0.35355339059327373).epsilon(1e-12));
}

TEST_CASE("state-only baselines pass the bias probe silently") {
    const Case c = make_case(6, 3, 0.95, 700);
    const BiasProbeReport probe =
        bias_probe(c.mdp, c.policy, c.exact, state_value_baseline(c.mdp, c.exact.state_values));
    CHECK(probe.bias_norm <= 1e-10);
    CHECK(probe.leakage.lpNorm<Eigen::Infinity>() <= 1e-12);
}
