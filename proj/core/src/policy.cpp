#include "pglab/policy.hpp"

#include "pglab/errors.hpp"
#include "pglab/rng.hpp"

#include <cmath>

namespace pglab {

namespace {
constexpr double kLogitBound = 50.0;
}

SoftmaxPolicy::SoftmaxPolicy(const Mdp& mdp, Eigen::MatrixXd logits) : logits_(std::move(logits)) {
    if (logits_.rows() != mdp.num_states() || logits_.cols() != mdp.num_actions())
        throw ContractViolation("SoftmaxPolicy: logits must be num_states x num_actions");
    block_start_.assign(static_cast<std::size_t>(mdp.num_states()), -1);
    for (int s : mdp.nonterminal_states()) {
        block_start_[static_cast<std::size_t>(s)] = parameter_count_;
        nonterminal_.push_back(s);
        parameter_count_ += mdp.num_actions();
        for (int a = 0; a < mdp.num_actions(); ++a) {
            const double logit = logits_(s, a);
            if (!std::isfinite(logit) || std::abs(logit) > kLogitBound)
                throw ContractViolation("SoftmaxPolicy: logits must lie in [-50, 50]");
        }
    }
}

SoftmaxPolicy::SoftmaxPolicy(Unchecked, const SoftmaxPolicy& base, Eigen::MatrixXd logits)
    : logits_(std::move(logits)),
      block_start_(base.block_start_),
      nonterminal_(base.nonterminal_),
      parameter_count_(base.parameter_count_) {}

SoftmaxPolicy SoftmaxPolicy::zeros(const Mdp& mdp) {
    return SoftmaxPolicy(mdp, Eigen::MatrixXd::Zero(mdp.num_states(), mdp.num_actions()));
}

SoftmaxPolicy SoftmaxPolicy::random(const Mdp& mdp, double scale, std::uint64_t seed) {
    if (!(scale >= 0.0 && scale <= kLogitBound))
        throw ContractViolation("SoftmaxPolicy::random: scale must lie in [0, 50]");
    RngStream rng = derive_stream(seed, 0);
    Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(mdp.num_states(), mdp.num_actions());
    for (int s : mdp.nonterminal_states())
        for (int a = 0; a < mdp.num_actions(); ++a) logits(s, a) = rng.next_uniform(-scale, scale);
    return SoftmaxPolicy(mdp, std::move(logits));
}

void SoftmaxPolicy::check_state(int s) const {
    if (s < 0 || s >= num_states())
        throw ContractViolation("SoftmaxPolicy: state index out of range");
    if (is_terminal(s))
        throw ContractViolation("SoftmaxPolicy: policy queried on a terminal state");
}

Eigen::VectorXd SoftmaxPolicy::action_probabilities(int s) const {
    check_state(s);
    const Eigen::ArrayXd row = logits_.row(s).transpose().array();
    const Eigen::ArrayXd exps = (row - row.maxCoeff()).exp();
    return (exps / exps.sum()).matrix();
}

Eigen::VectorXd SoftmaxPolicy::score_block(int s, int a) const {
    check_state(s);
    if (a < 0 || a >= num_actions())
        throw ContractViolation("SoftmaxPolicy: action index out of range");
    Eigen::VectorXd block = -action_probabilities(s);
    block(a) += 1.0;
    return block;
}

Eigen::VectorXd SoftmaxPolicy::score_features(int s, int a) const {
    Eigen::VectorXd features = Eigen::VectorXd::Zero(parameter_count_);
    features.segment(block_start(s), num_actions()) = score_block(s, a);
    return features;
}

Eigen::VectorXd SoftmaxPolicy::flat_parameters() const {
    Eigen::VectorXd flat(parameter_count_);
    for (int s : nonterminal_)
        flat.segment(block_start(s), num_actions()) = logits_.row(s).transpose();
    return flat;
}

SoftmaxPolicy SoftmaxPolicy::with_flat_parameters(const Eigen::VectorXd& params) const {
    if (params.size() != parameter_count_)
        throw ContractViolation("SoftmaxPolicy: flat parameter vector has wrong length");
    Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(num_states(), num_actions());
    for (int s : nonterminal_)
        logits.row(s) = params.segment(block_start(s), num_actions()).transpose();
    return SoftmaxPolicy(Unchecked{}, *this, std::move(logits));
}

SoftmaxPolicy SoftmaxPolicy::perturbed(int coordinate, double delta) const {
    if (coordinate < 0 || coordinate >= parameter_count_)
        throw ContractViolation("SoftmaxPolicy: parameter coordinate out of range");
    Eigen::MatrixXd logits = logits_;
    const int block = coordinate / num_actions();
    const int action = coordinate % num_actions();
    logits(nonterminal_[static_cast<std::size_t>(block)], action) += delta;
    return SoftmaxPolicy(Unchecked{}, *this, std::move(logits));
}

std::uint64_t SoftmaxPolicy::fingerprint() const {
    Fingerprint fp;
    fp.add("softmax-policy").add(logits_);
    std::vector<bool> terminal(block_start_.size());
    for (std::size_t s = 0; s < block_start_.size(); ++s) terminal[s] = block_start_[s] < 0;
    fp.add(terminal);
    return fp.digest();
}

} // namespace pglab
