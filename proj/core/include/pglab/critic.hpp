#pragma once

#include "pglab/baseline.hpp"
#include "pglab/exact.hpp"
#include "pglab/mdp.hpp"
#include "pglab/policy.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace pglab {

/// What the critic was regressed on: raw action values q (loss L) or the
/// residual q - b after a baseline is subtracted (loss L-tilde).
enum class CriticTarget { QValues, Residual };

const char* to_string(CriticTarget target);

/// The stationarity system A w = c of the weighted least-squares critic fit.
struct NormalEquations {
    Eigen::MatrixXd gram;   ///< A = sum_s d(s) sum_a pi(s,a) psi psi^T
    Eigen::VectorXd moment; ///< c = sum_s d(s) sum_a pi(s,a) (q - b) psi
};

/// Assembles A and c in deterministic state-major order; baseline = nullptr
/// means b == 0 (the raw-q loss).
NormalEquations build_normal_equations(const Mdp& mdp, const SoftmaxPolicy& policy,
                                       const ExactSolution& exact,
                                       const Baseline* baseline = nullptr);

/// A fitted compatible critic f_w(s, a) = w . psi(s, a).
struct CriticFit {
    Eigen::VectorXd w;       ///< minimum-norm critical point of the fit loss
    Eigen::MatrixXd fitted;  ///< f_w tabulated over (s, a); zero at terminals
    double loss_value = 0.0; ///< fit loss at w
    CriticTarget target_kind = CriticTarget::QValues;
    int rank = 0;                 ///< numerical rank of A (always deficient here)
    double normal_residual = 0.0; ///< ||A w - c||, ~0: w is a critical point
    std::uint64_t pairing = 0;    ///< content hash binding this fit to its inputs
};

/// Minimum-norm critical point of the raw-q loss L (yields w*).
CriticFit fit_critic(const Mdp& mdp, const SoftmaxPolicy& policy, const ExactSolution& exact);

/// Minimum-norm critical point of the residual loss L-tilde against the
/// given baseline (yields w-tilde*).
CriticFit fit_critic(const Mdp& mdp, const SoftmaxPolicy& policy, const ExactSolution& exact,
                     const Baseline& baseline);

/// The action-dependent-baseline gradient identity:
///   sum_s d(s) sum_a pi(s,a) (f_w(s,a) + b(s,a)) psi(s,a),
/// equal to the exact gradient for ANY baseline when w is a critical point
/// of the residual fit against that same baseline. Requires
/// target_kind == Residual and the critic's pairing hash to match
/// (mdp, policy, baseline); throws PairingMismatchError otherwise.
Eigen::VectorXd assemble_gradient_thm1(const Mdp& mdp, const SoftmaxPolicy& policy,
                                       const ExactSolution& exact, const CriticFit& critic,
                                       const Baseline& baseline);

/// The state-only-baseline gradient form:
///   sum_s d(s) sum_a pi(s,a) (f_w(s,a) - b(s)) psi(s,a)
/// with w fit on raw q. The b(s) term cancels identically because
/// sum_a pi(s,a) psi(s,a) = 0. Requires target_kind == QValues and a
/// matching pairing hash.
Eigen::VectorXd assemble_gradient_s2(const Mdp& mdp, const SoftmaxPolicy& policy,
                                     const ExactSolution& exact, const CriticFit& critic,
                                     const Eigen::VectorXd& state_baseline);

/// sum_s d(s) sum_a pi(s,a) b(s,a) psi(s,a): the term a naive scheme drops
/// when it plugs an action-dependent baseline into the state-only form.
/// Identically zero for state-only baselines; otherwise exactly the bias of
/// the naive scheme.
Eigen::VectorXd baseline_leakage(const Mdp& mdp, const SoftmaxPolicy& policy,
                                 const ExactSolution& exact, const Baseline& baseline);

/// Side-by-side audit of the naive scheme against the exact gradient.
struct BiasProbeReport {
    Eigen::VectorXd naive_gradient; ///< sum d pi (f_{w*} - b) psi, w* fit on raw q
    Eigen::VectorXd true_gradient;  ///< exact gradient
    Eigen::VectorXd leakage;        ///< the dropped term (see baseline_leakage)
    double bias_norm = 0.0;         ///< ||naive - true||_2
    double decomposition_residual = 0.0; ///< ||naive + leakage - true||_inf, ~0
};

BiasProbeReport bias_probe(const Mdp& mdp, const SoftmaxPolicy& policy,
                           const ExactSolution& exact, const Baseline& baseline);

/// The content hash stored in CriticFit::pairing: covers the mdp, the policy
/// parameters, the target kind, and the baseline table (or its absence).
std::uint64_t critic_pairing_fingerprint(const Mdp& mdp, const SoftmaxPolicy& policy,
                                         CriticTarget target, const Baseline* baseline);

} // namespace pglab
