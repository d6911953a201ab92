#pragma once

#include "pglab/mdp.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace pglab {

/// Tabular softmax policy over the non-terminal states of an MDP.
///
/// The parameter vector flattens the logit matrix row-major over
/// non-terminal states in ascending state order; that fixed ordering is part
/// of the external contract, so critic weights and gradient coordinates are
/// comparable across modules. Logits are accepted in [-50, 50] to keep the
/// least-squares systems downstream well scaled.
///
/// Immutable after construction.
class SoftmaxPolicy {
public:
    SoftmaxPolicy(const Mdp& mdp, Eigen::MatrixXd logits);

    static SoftmaxPolicy zeros(const Mdp& mdp);
    static SoftmaxPolicy random(const Mdp& mdp, double scale, std::uint64_t seed);

    int num_states() const { return static_cast<int>(logits_.rows()); }
    int num_actions() const { return static_cast<int>(logits_.cols()); }
    int parameter_count() const { return parameter_count_; }
    bool is_terminal(int s) const { return block_start_[static_cast<std::size_t>(s)] < 0; }
    const std::vector<int>& nonterminal_states() const { return nonterminal_; }
    const Eigen::MatrixXd& logits() const { return logits_; }

    /// pi(s, ., theta), computed with max-subtraction. Rejects terminal s.
    Eigen::VectorXd action_probabilities(int s) const;

    /// Score feature vector psi(s, a) = d/dtheta ln pi(s, a, theta) of length
    /// parameter_count(); zero outside the state-s block.
    Eigen::VectorXd score_features(int s, int a) const;

    /// The state-s block of psi(s, a): e_a - pi(s, .). Length num_actions().
    Eigen::VectorXd score_block(int s, int a) const;

    /// Offset of state s's block in the flat parameter vector; -1 for
    /// terminal states.
    int block_start(int s) const { return block_start_[static_cast<std::size_t>(s)]; }

    Eigen::VectorXd flat_parameters() const;
    SoftmaxPolicy with_flat_parameters(const Eigen::VectorXd& params) const;

    /// Copy with one flat parameter shifted by delta. Used by the
    /// finite-difference probes; skips the range check so differentiation at
    /// the boundary of the accepted logit range stays possible.
    SoftmaxPolicy perturbed(int coordinate, double delta) const;

    std::uint64_t fingerprint() const;

private:
    struct Unchecked {};
    SoftmaxPolicy(Unchecked, const SoftmaxPolicy& base, Eigen::MatrixXd logits);

    void check_state(int s) const;

    Eigen::MatrixXd logits_;
    std::vector<int> block_start_;
    std::vector<int> nonterminal_;
    int parameter_count_ = 0;
};

} // namespace pglab
