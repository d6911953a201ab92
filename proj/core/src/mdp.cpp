#include "pglab/mdp.hpp"

#include "pglab/errors.hpp"
#include "pglab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pglab {

namespace {
constexpr double kStochasticTol = 1e-12;
constexpr double kTerminalEscapeProbability = 0.05;
} // namespace

std::string ValidationReport::to_string() const {
    std::ostringstream out;
    for (const auto& issue : issues) {
        out << issue.field << "[";
        for (std::size_t i = 0; i < issue.index.size(); ++i) {
            if (i) out << ",";
            out << issue.index[i];
        }
        out << "] " << issue.message << " (magnitude " << issue.magnitude << ")\n";
    }
    return out.str();
}

Mdp::Mdp(int num_states, int num_actions, double gamma,
         std::vector<Eigen::MatrixXd> transition,
         Eigen::MatrixXd reward,
         Eigen::VectorXd initial,
         std::vector<bool> terminal)
    : num_states_(num_states),
      num_actions_(num_actions),
      gamma_(gamma),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      initial_(std::move(initial)),
      terminal_(std::move(terminal)) {
    if (num_states_ <= 0 || num_actions_ <= 0)
        throw ContractViolation("Mdp: state and action counts must be positive");
    if (transition_.size() != static_cast<std::size_t>(num_actions_))
        throw ContractViolation("Mdp: transition tensor must have one matrix per action");
    for (const auto& p : transition_)
        if (p.rows() != num_states_ || p.cols() != num_states_)
            throw ContractViolation("Mdp: transition matrices must be num_states x num_states");
    if (reward_.rows() != num_states_ || reward_.cols() != num_actions_)
        throw ContractViolation("Mdp: reward matrix must be num_states x num_actions");
    if (initial_.size() != num_states_)
        throw ContractViolation("Mdp: initial distribution must have num_states entries");
    if (terminal_.size() != static_cast<std::size_t>(num_states_))
        throw ContractViolation("Mdp: terminal flags must have num_states entries");
    for (int s = 0; s < num_states_; ++s)
        if (!terminal_[static_cast<std::size_t>(s)]) nonterminal_.push_back(s);
}

double Mdp::max_abs_reward() const {
    double m = 0.0;
    for (int s : nonterminal_)
        for (int a = 0; a < num_actions_; ++a) m = std::max(m, std::abs(reward_(s, a)));
    return m;
}

std::uint64_t Mdp::fingerprint() const {
    Fingerprint fp;
    fp.add("mdp").add(num_states_).add(num_actions_).add(gamma_);
    for (const auto& p : transition_) fp.add(p);
    fp.add(reward_).add(initial_).add(terminal_);
    return fp.digest();
}

bool terminal_reachable_under_all_policies(const Mdp& mdp) {
    const int n = mdp.num_states();
    std::vector<char> reaches(static_cast<std::size_t>(n), 0);
    for (int s = 0; s < n; ++s)
        if (mdp.is_terminal(s)) reaches[static_cast<std::size_t>(s)] = 1;

    // Least fixpoint: a state joins once EVERY action has some successor
    // already in the set, so no deterministic choice can avoid it.
    bool grew = true;
    while (grew) {
        grew = false;
        for (int s = 0; s < n; ++s) {
            if (reaches[static_cast<std::size_t>(s)]) continue;
            bool all_actions_lead_in = true;
            for (int a = 0; a < mdp.num_actions() && all_actions_lead_in; ++a) {
                bool some_successor_in = false;
                for (int next = 0; next < n; ++next) {
                    if (mdp.transition(s, a, next) > 0.0 && reaches[static_cast<std::size_t>(next)]) {
                        some_successor_in = true;
                        break;
                    }
                }
                all_actions_lead_in = some_successor_in;
            }
            if (all_actions_lead_in) {
                reaches[static_cast<std::size_t>(s)] = 1;
                grew = true;
            }
        }
    }
    return std::all_of(reaches.begin(), reaches.end(), [](char c) { return c != 0; });
}

ValidationReport validate_mdp(const Mdp& mdp) {
    ValidationReport report;
    auto flag = [&report](std::string field, std::vector<std::int64_t> index, double magnitude,
                          std::string message) {
        report.issues.push_back({std::move(field), std::move(index), magnitude, std::move(message)});
    };

    const int S = mdp.num_states();
    const int A = mdp.num_actions();

    bool any_terminal = false;
    for (int s = 0; s < S; ++s) any_terminal = any_terminal || mdp.is_terminal(s);

    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            double row_sum = 0.0;
            for (int next = 0; next < S; ++next) {
                const double p = mdp.transition(s, a, next);
                if (!std::isfinite(p))
                    flag("transition", {s, a, next}, 0.0, "non-finite probability");
                else if (p < 0.0)
                    flag("transition", {s, a, next}, -p, "negative probability");
                row_sum += p;
            }
            if (std::isfinite(row_sum) && std::abs(row_sum - 1.0) > kStochasticTol)
                flag("transition", {s, a}, std::abs(row_sum - 1.0), "row does not sum to 1");
            if (!std::isfinite(mdp.reward(s, a)))
                flag("reward", {s, a}, 0.0, "non-finite reward");
        }
        if (mdp.is_terminal(s)) {
            for (int a = 0; a < A; ++a) {
                const double self = mdp.transition(s, a, s);
                if (std::abs(self - 1.0) > kStochasticTol)
                    flag("transition", {s, a}, std::abs(self - 1.0), "terminal state is not absorbing");
                if (std::abs(mdp.reward(s, a)) > 0.0)
                    flag("reward", {s, a}, std::abs(mdp.reward(s, a)), "terminal state has nonzero reward");
            }
        }
    }

    double initial_sum = 0.0;
    for (int s = 0; s < S; ++s) {
        const double p = mdp.initial()(s);
        if (!std::isfinite(p)) {
            flag("initial", {s}, 0.0, "non-finite initial probability");
            continue;
        }
        if (p < 0.0) flag("initial", {s}, -p, "negative initial probability");
        if (mdp.is_terminal(s) && p > 0.0)
            flag("initial", {s}, p, "initial mass on a terminal state");
        initial_sum += p;
    }
    if (std::isfinite(initial_sum) && std::abs(initial_sum - 1.0) > kStochasticTol)
        flag("initial", {}, std::abs(initial_sum - 1.0), "initial distribution does not sum to 1");

    const double gamma = mdp.gamma();
    if (!std::isfinite(gamma) || gamma <= 0.0 || gamma > 1.0) {
        flag("gamma", {}, gamma, "discount must lie in (0, 1]");
    } else if (gamma == 1.0) {
        if (!any_terminal || !terminal_reachable_under_all_policies(mdp))
            flag("gamma", {}, 1.0,
                 "gamma = 1 requires a terminal state reachable from every state under every "
                 "deterministic policy");
    }

    return report;
}

Mdp make_two_arm_bandit(double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw ContractViolation("make_two_arm_bandit: gamma must lie in (0, 1]");
    const int S = 2;
    std::vector<Eigen::MatrixXd> transition(2, Eigen::MatrixXd::Zero(S, S));
    transition[0](0, 1) = 1.0;
    transition[1](0, 1) = 1.0;
    transition[0](1, 1) = 1.0;
    transition[1](1, 1) = 1.0;
    Eigen::MatrixXd reward = Eigen::MatrixXd::Zero(S, 2);
    reward(0, 0) = 1.0;
    Eigen::VectorXd initial(S);
    initial << 1.0, 0.0;
    return Mdp(S, 2, gamma, std::move(transition), std::move(reward), std::move(initial),
               {false, true});
}

Mdp make_random_mdp(int num_states, int num_actions, double gamma, std::uint64_t seed) {
    if (num_states < 2 || num_actions < 2)
        throw ContractViolation("make_random_mdp: need at least 2 states and 2 actions");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw ContractViolation("make_random_mdp: gamma must lie in (0, 1)");

    const int S = num_states;
    const int A = num_actions;
    const int terminal_state = S - 1;
    RngStream rng = derive_stream(seed, 0);

    auto dirichlet_flat = [&rng](int n) {
        Eigen::VectorXd draws(n);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            draws(i) = -std::log(1.0 - rng.next_unit());
            total += draws(i);
        }
        return Eigen::VectorXd(draws / total);
    };

    std::vector<Eigen::MatrixXd> transition(static_cast<std::size_t>(A), Eigen::MatrixXd::Zero(S, S));
    for (int s = 0; s < S - 1; ++s) {
        for (int a = 0; a < A; ++a) {
            const Eigen::VectorXd row = dirichlet_flat(S);
            for (int next = 0; next < S; ++next)
                transition[static_cast<std::size_t>(a)](s, next) = (1.0 - kTerminalEscapeProbability) * row(next);
            transition[static_cast<std::size_t>(a)](s, terminal_state) += kTerminalEscapeProbability;
        }
    }
    for (int a = 0; a < A; ++a) transition[static_cast<std::size_t>(a)](terminal_state, terminal_state) = 1.0;

    Eigen::MatrixXd reward = Eigen::MatrixXd::Zero(S, A);
    for (int s = 0; s < S - 1; ++s)
        for (int a = 0; a < A; ++a) reward(s, a) = rng.next_uniform(-1.0, 1.0);

    Eigen::VectorXd initial = Eigen::VectorXd::Zero(S);
    initial.head(S - 1) = dirichlet_flat(S - 1);

    std::vector<bool> terminal(static_cast<std::size_t>(S), false);
    terminal[static_cast<std::size_t>(terminal_state)] = true;

    return Mdp(S, A, gamma, std::move(transition), std::move(reward), std::move(initial),
               std::move(terminal));
}

} // namespace pglab
