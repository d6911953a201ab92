#include "pglab/baseline.hpp"

#include "pglab/errors.hpp"
#include "pglab/linalg.hpp"
#include "pglab/rng.hpp"

#include <cmath>
#include <utility>

namespace pglab {

namespace {

Eigen::MatrixXd zero_table(const Mdp& mdp) {
    return Eigen::MatrixXd::Zero(mdp.num_states(), mdp.num_actions());
}

void zero_terminal_rows(const Mdp& mdp, Eigen::MatrixXd& table) {
    for (int s = 0; s < mdp.num_states(); ++s)
        if (mdp.is_terminal(s)) table.row(s).setZero();
}

// Shared weighted least-squares core: fit `target(s, a)` onto per-(s, a)
// feature vectors under weights d(s) pi(s, a), deterministic state-major
// accumulation, minimum-norm solve. `feature_of` must return a vector of
// length `dim`.
template <typename FeatureFn>
MinNormSolution weighted_feature_fit(const Mdp& mdp, const SoftmaxPolicy& policy,
                                     const ExactSolution& exact, const Eigen::MatrixXd& target,
                                     int dim, FeatureFn&& feature_of) {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd moment = Eigen::VectorXd::Zero(dim);
    for (int s : mdp.nonterminal_states()) {
        const Eigen::VectorXd pi = policy.action_probabilities(s);
        for (int a = 0; a < mdp.num_actions(); ++a) {
            const double weight = exact.occupancy(s) * pi(a);
            const Eigen::VectorXd f = feature_of(s, a);
            gram.noalias() += weight * f * f.transpose();
            moment.noalias() += weight * target(s, a) * f;
        }
    }
    return min_norm_solve(gram, moment);
}

template <typename PredictFn>
double weighted_loss(const Mdp& mdp, const SoftmaxPolicy& policy, const ExactSolution& exact,
                     const Eigen::MatrixXd& target, PredictFn&& predict) {
    double loss = 0.0;
    for (int s : mdp.nonterminal_states()) {
        const Eigen::VectorXd pi = policy.action_probabilities(s);
        for (int a = 0; a < mdp.num_actions(); ++a) {
            const double err = predict(s, a) - target(s, a);
            loss += exact.occupancy(s) * pi(a) * err * err;
        }
    }
    return loss;
}

} // namespace

const char* to_string(BaselineKind kind) {
    switch (kind) {
    case BaselineKind::Zero: return "zero";
    case BaselineKind::StateValue: return "state_value";
    case BaselineKind::Constant: return "constant";
    case BaselineKind::RandomSeeded: return "random_seeded";
    case BaselineKind::ModelBased: return "model_based";
    case BaselineKind::Parameterized: return "parameterized";
    }
    return "unknown";
}

std::uint64_t Baseline::fingerprint() const {
    Fingerprint fp;
    fp.add("baseline").add(to_string(provenance)).add(table);
    return fp.digest();
}

Baseline zero_baseline(const Mdp& mdp) {
    return Baseline{BaselineKind::Zero, zero_table(mdp)};
}

Baseline constant_baseline(const Mdp& mdp, double c) {
    if (!std::isfinite(c)) throw ContractViolation("constant_baseline: constant must be finite");
    Eigen::MatrixXd table =
        Eigen::MatrixXd::Constant(mdp.num_states(), mdp.num_actions(), c);
    zero_terminal_rows(mdp, table);
    return Baseline{BaselineKind::Constant, std::move(table)};
}

Baseline random_baseline(const Mdp& mdp, double lo, double hi, std::uint64_t seed) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo <= hi))
        throw ContractViolation("random_baseline: requires finite lo <= hi");
    RngStream rng = derive_stream(seed, 0);
    Eigen::MatrixXd table = zero_table(mdp);
    for (int s : mdp.nonterminal_states())
        for (int a = 0; a < mdp.num_actions(); ++a) table(s, a) = rng.next_uniform(lo, hi);
    return Baseline{BaselineKind::RandomSeeded, std::move(table)};
}

Baseline state_value_baseline(const Mdp& mdp, const Eigen::VectorXd& state_values) {
    if (state_values.size() != mdp.num_states())
        throw ContractViolation("state_value_baseline: state_values has wrong length");
    Eigen::MatrixXd table = zero_table(mdp);
    for (int s : mdp.nonterminal_states()) table.row(s).setConstant(state_values(s));
    return Baseline{BaselineKind::StateValue, std::move(table)};
}

Baseline table_baseline(const Mdp& mdp, Eigen::MatrixXd table, BaselineKind provenance) {
    if (table.rows() != mdp.num_states() || table.cols() != mdp.num_actions())
        throw ContractViolation("table_baseline: table must be num_states x num_actions");
    if (!table.allFinite()) throw ContractViolation("table_baseline: entries must be finite");
    zero_terminal_rows(mdp, table);
    return Baseline{provenance, std::move(table)};
}

Baseline model_based_baseline(const Mdp& true_mdp, const Mdp& approx_mdp,
                              const SoftmaxPolicy& policy) {
    if (approx_mdp.num_states() != true_mdp.num_states() ||
        approx_mdp.num_actions() != true_mdp.num_actions())
        throw ContractViolation("model_based_baseline: model shape does not match the mdp");
    for (int s = 0; s < true_mdp.num_states(); ++s)
        if (approx_mdp.is_terminal(s) != true_mdp.is_terminal(s))
            throw ContractViolation(
                "model_based_baseline: model terminal layout does not match the mdp");
    const ValueSolution model_values = solve_values(approx_mdp, policy);
    return Baseline{BaselineKind::ModelBased, model_values.action_values};
}

Baseline make_baseline(const BaselineSpec& spec, const Mdp& mdp, const ExactSolution& exact) {
    switch (spec.kind) {
    case BaselineKind::Zero: return zero_baseline(mdp);
    case BaselineKind::StateValue: return state_value_baseline(mdp, exact.state_values);
    case BaselineKind::Constant: return constant_baseline(mdp, spec.constant);
    case BaselineKind::RandomSeeded: return random_baseline(mdp, spec.lo, spec.hi, spec.seed);
    case BaselineKind::ModelBased:
    case BaselineKind::Parameterized:
        break;
    }
    throw ContractViolation("make_baseline: kind requires its dedicated constructor");
}

std::uint64_t FeatureSet::fingerprint() const {
    Fingerprint fp;
    fp.add("features").add(label).add(static_cast<std::int64_t>(num_features));
    for (const auto& m : phi) fp.add(m);
    return fp.digest();
}

FeatureSet one_hot_features(const Mdp& mdp) {
    FeatureSet set;
    set.label = "one_hot";
    set.num_features = mdp.num_nonterminal() * mdp.num_actions();
    set.phi.assign(static_cast<std::size_t>(mdp.num_states()),
                   Eigen::MatrixXd::Zero(mdp.num_actions(), set.num_features));
    int next = 0;
    for (int s : mdp.nonterminal_states())
        for (int a = 0; a < mdp.num_actions(); ++a)
            set.phi[static_cast<std::size_t>(s)](a, next++) = 1.0;
    return set;
}

FeatureSet state_indicator_features(const Mdp& mdp) {
    FeatureSet set;
    set.label = "state_indicator";
    set.num_features = mdp.num_nonterminal();
    set.phi.assign(static_cast<std::size_t>(mdp.num_states()),
                   Eigen::MatrixXd::Zero(mdp.num_actions(), set.num_features));
    int next = 0;
    for (int s : mdp.nonterminal_states()) {
        set.phi[static_cast<std::size_t>(s)].col(next).setOnes();
        ++next;
    }
    return set;
}

FeatureSet random_features(const Mdp& mdp, int num_features, std::uint64_t seed) {
    if (num_features <= 0)
        throw ContractViolation("random_features: num_features must be positive");
    FeatureSet set;
    set.label = "random";
    set.num_features = num_features;
    set.phi.assign(static_cast<std::size_t>(mdp.num_states()),
                   Eigen::MatrixXd::Zero(mdp.num_actions(), num_features));
    RngStream rng = derive_stream(seed, 0);
    for (int s : mdp.nonterminal_states())
        for (int a = 0; a < mdp.num_actions(); ++a)
            for (int k = 0; k < num_features; ++k)
                set.phi[static_cast<std::size_t>(s)](a, k) = rng.next_gaussian();
    return set;
}

FeatureSet features_from_tensor(const Mdp& mdp, std::vector<Eigen::MatrixXd> phi,
                                std::string label) {
    if (static_cast<int>(phi.size()) != mdp.num_states())
        throw ContractViolation("features_from_tensor: need one matrix per state");
    const int k = phi.empty() ? 0 : static_cast<int>(phi.front().cols());
    for (auto& m : phi) {
        if (m.rows() != mdp.num_actions() || static_cast<int>(m.cols()) != k)
            throw ContractViolation("features_from_tensor: inconsistent feature matrix shape");
        if (!m.allFinite())
            throw ContractViolation("features_from_tensor: entries must be finite");
    }
    for (int s = 0; s < mdp.num_states(); ++s)
        if (mdp.is_terminal(s)) phi[static_cast<std::size_t>(s)].setZero();
    FeatureSet set;
    set.label = std::move(label);
    set.num_features = k;
    set.phi = std::move(phi);
    return set;
}

Baseline ParamBaseline::as_baseline(const Mdp& mdp) const {
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(mdp.num_states(), mdp.num_actions());
    for (int s : mdp.nonterminal_states())
        for (int a = 0; a < mdp.num_actions(); ++a) table(s, a) = value(s, a);
    return Baseline{BaselineKind::Parameterized, std::move(table)};
}

ParamBaseline fit_param_baseline(const Mdp& mdp, const SoftmaxPolicy& policy,
                                 const ExactSolution& exact, const FeatureSet& features) {
    check_policy_matches(mdp, policy);
    if (static_cast<int>(features.phi.size()) != mdp.num_states())
        throw ContractViolation("fit_param_baseline: features do not match the mdp");
    const MinNormSolution fit = weighted_feature_fit(
        mdp, policy, exact, exact.action_values, features.num_features,
        [&](int s, int a) { return features.features(s, a); });
    ParamBaseline out;
    out.x = fit.x;
    out.features = features;
    out.rank = fit.rank;
    out.loss_value = weighted_loss(mdp, policy, exact, exact.action_values,
                                   [&](int s, int a) { return out.value(s, a); });
    return out;
}

Baseline JointFit::baseline(const Mdp& mdp) const {
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(mdp.num_states(), mdp.num_actions());
    for (int s : mdp.nonterminal_states())
        for (int a = 0; a < mdp.num_actions(); ++a) table(s, a) = features.features(s, a).dot(x);
    return Baseline{BaselineKind::Parameterized, std::move(table)};
}

JointFit joint_fit(const Mdp& mdp, const SoftmaxPolicy& policy, const ExactSolution& exact,
                   const FeatureSet& features) {
    check_policy_matches(mdp, policy);
    if (static_cast<int>(features.phi.size()) != mdp.num_states())
        throw ContractViolation("joint_fit: features do not match the mdp");
    const int n_theta = policy.parameter_count();
    const int dim = n_theta + features.num_features;
    const MinNormSolution fit = weighted_feature_fit(
        mdp, policy, exact, exact.action_values, dim, [&](int s, int a) {
            Eigen::VectorXd stacked = Eigen::VectorXd::Zero(dim);
            stacked.segment(policy.block_start(s), mdp.num_actions()) = policy.score_block(s, a);
            stacked.tail(features.num_features) = features.features(s, a);
            return stacked;
        });
    JointFit out;
    out.w = fit.x.head(n_theta);
    out.x = fit.x.tail(features.num_features);
    out.features = features;
    out.rank = fit.rank;
    out.predicted = Eigen::MatrixXd::Zero(mdp.num_states(), mdp.num_actions());
    for (int s : mdp.nonterminal_states())
        for (int a = 0; a < mdp.num_actions(); ++a)
            out.predicted(s, a) =
                policy.score_block(s, a).dot(out.w.segment(policy.block_start(s),
                                                           mdp.num_actions())) +
                features.features(s, a).dot(out.x);
    out.loss_value = weighted_loss(mdp, policy, exact, exact.action_values,
                                   [&](int s, int a) { return out.predicted(s, a); });
    return out;
}

} // namespace pglab
