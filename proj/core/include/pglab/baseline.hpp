#pragma once

#include "pglab/exact.hpp"
#include "pglab/mdp.hpp"
#include "pglab/policy.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace pglab {

/// How a baseline table was produced. Carried into reports and into the
/// critic pairing fingerprint.
enum class BaselineKind { Zero, StateValue, Constant, RandomSeeded, ModelBased, Parameterized };

const char* to_string(BaselineKind kind);

/// An action-dependent baseline b : S x A -> R as a dense table. Rows at
/// terminal states are zero and never read.
struct Baseline {
    BaselineKind provenance = BaselineKind::Zero;
    Eigen::MatrixXd table; // (num_states, num_actions)

    double value(int s, int a) const { return table(s, a); }
    std::uint64_t fingerprint() const;
};

/// b == 0.
Baseline zero_baseline(const Mdp& mdp);

/// b(s, a) = c for every non-terminal (s, a).
Baseline constant_baseline(const Mdp& mdp, double c);

/// i.i.d. uniform entries in [lo, hi], deterministic in seed.
Baseline random_baseline(const Mdp& mdp, double lo, double hi, std::uint64_t seed);

/// b(s, a) = v(s): the classic state-value baseline lifted to a table.
Baseline state_value_baseline(const Mdp& mdp, const Eigen::VectorXd& state_values);

/// An explicit table with the given provenance; validates shape and
/// finiteness and zeroes terminal rows. Entry point for tables loaded from
/// files.
Baseline table_baseline(const Mdp& mdp, Eigen::MatrixXd table,
                        BaselineKind provenance = BaselineKind::RandomSeeded);

/// b(s, a) = q(s, a) under an approximate model of the dynamics, evaluated
/// with the same policy. The model must match the true mdp's state/action
/// counts and terminal layout.
Baseline model_based_baseline(const Mdp& true_mdp, const Mdp& approx_mdp,
                              const SoftmaxPolicy& policy);

/// Factory parameters for the four directly-constructible kinds. ModelBased
/// and Parameterized have dedicated entry points and are rejected here.
struct BaselineSpec {
    BaselineKind kind = BaselineKind::Zero;
    double constant = 0.0;                // Constant
    double lo = -1.0;                     // RandomSeeded
    double hi = 1.0;                      // RandomSeeded
    std::uint64_t seed = 0;               // RandomSeeded
};

Baseline make_baseline(const BaselineSpec& spec, const Mdp& mdp, const ExactSolution& exact);

/// Per-(s, a) feature vectors phi(s, a) of fixed length for linear
/// baselines. phi[s] is the (num_actions x num_features) matrix whose row a
/// is phi(s, a); terminal states carry zero matrices.
struct FeatureSet {
    int num_features = 0;
    std::vector<Eigen::MatrixXd> phi;
    std::string label;

    Eigen::VectorXd features(int s, int a) const {
        return phi[static_cast<std::size_t>(s)].row(a).transpose();
    }
    std::uint64_t fingerprint() const;
};

/// One indicator feature per non-terminal (s, a): saturated, interpolates
/// any table.
FeatureSet one_hot_features(const Mdp& mdp);

/// One indicator feature per non-terminal state, shared by all actions:
/// the least-squares fit is the pi-weighted mean over actions.
FeatureSet state_indicator_features(const Mdp& mdp);

/// i.i.d. standard Gaussian entries, deterministic in seed.
FeatureSet random_features(const Mdp& mdp, int num_features, std::uint64_t seed);

/// Wrap externally supplied per-state feature matrices; validates shapes and
/// finiteness and zeroes terminal rows.
FeatureSet features_from_tensor(const Mdp& mdp, std::vector<Eigen::MatrixXd> phi,
                                std::string label = "file");

/// A linear baseline b_x(s, a) = x . phi(s, a) with fitted parameters.
struct ParamBaseline {
    Eigen::VectorXd x;
    FeatureSet features;
    double loss_value = 0.0; ///< weighted squared error of b_x against q at x
    int rank = 0;            ///< rank of the feature normal equations

    double value(int s, int a) const { return features.features(s, a).dot(x); }
    Baseline as_baseline(const Mdp& mdp) const;
};

/// Minimum-norm weighted least-squares fit of x so b_x approximates q, with
/// weights d(s) pi(s, a) — the same weighting and solver contract as the
/// critic fit.
ParamBaseline fit_param_baseline(const Mdp& mdp, const SoftmaxPolicy& policy,
                                 const ExactSolution& exact, const FeatureSet& features);

/// Joint fit of q_hat(s, a) = w . psi(s, a) + x . phi(s, a) to q by
/// minimum-norm weighted least squares on the concatenated features.
struct JointFit {
    Eigen::VectorXd w;          ///< coefficient block on the score features
    Eigen::VectorXd x;          ///< coefficient block on the baseline features
    FeatureSet features;        ///< the phi the x block was fit against
    Eigen::MatrixXd predicted;  ///< q_hat table
    double loss_value = 0.0;
    int rank = 0;

    /// b_x(s, a) = x . phi(s, a) tabulated as a Parameterized baseline,
    /// ready to feed the residual critic refit.
    Baseline baseline(const Mdp& mdp) const;
};

JointFit joint_fit(const Mdp& mdp, const SoftmaxPolicy& policy, const ExactSolution& exact,
                   const FeatureSet& features);

} // namespace pglab
