// pglab: exact and sampled policy-gradient verification for tabular MDPs.
//
// Verbs: verify-thm1, bias-probe, fit-critic, grad-check, sample-grad,
// gen-mdp. Every command is a pure function of its flags (seeds included):
// rerunning with the same configuration produces byte-identical reports.
// Exit codes: 0 = pass, 1 = numerical/identity failure, 2 = input or usage
// error.

#include "pglab/baseline.hpp"
#include "pglab/critic.hpp"
#include "pglab/errors.hpp"
#include "pglab/exact.hpp"
#include "pglab/fingerprint.hpp"
#include "pglab/io.hpp"
#include "pglab/mdp.hpp"
#include "pglab/policy.hpp"
#include "pglab/sampling.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

struct Options {
    std::string mdp_path;
    std::string generate;
    std::string theta = "zeros";
    std::string baseline = "zero";
    long episodes = 10000;
    std::uint64_t seed = 0;
    double tol_identity = 1e-8;
    double tol_fd = 1e-5;
    std::string out_path;
    std::string format = "json";
    bool naive = false;
};

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::size_t begin = 0;
    while (true) {
        const std::size_t end = text.find(sep, begin);
        parts.push_back(text.substr(begin, end - begin));
        if (end == std::string::npos) break;
        begin = end + 1;
    }
    return parts;
}

double parse_double(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double value = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw pglab::ParseError(what + ": '" + text + "' is not a number");
    }
}

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const unsigned long long value = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return static_cast<std::uint64_t>(value);
    } catch (const std::exception&) {
        throw pglab::ParseError(what + ": '" + text + "' is not a non-negative integer");
    }
}

int parse_int(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const long value = std::stol(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return static_cast<int>(value);
    } catch (const std::exception&) {
        throw pglab::ParseError(what + ": '" + text + "' is not an integer");
    }
}

std::string hex64(std::uint64_t value) {
    static const char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

pglab::Mdp resolve_mdp(const Options& opt) {
    const bool have_file = !opt.mdp_path.empty();
    const bool have_generate = !opt.generate.empty();
    if (have_file == have_generate)
        throw pglab::ParseError("exactly one of --mdp and --generate is required");
    if (have_file) return pglab::load_mdp(opt.mdp_path);
    const std::vector<std::string> parts = split(opt.generate, ',');
    if (parts.size() != 4)
        throw pglab::ParseError("--generate expects states,actions,gamma,seed");
    return pglab::make_random_mdp(parse_int(parts[0], "--generate states"),
                                  parse_int(parts[1], "--generate actions"),
                                  parse_double(parts[2], "--generate gamma"),
                                  parse_seed(parts[3], "--generate seed"));
}

pglab::SoftmaxPolicy resolve_policy(const Options& opt, const pglab::Mdp& mdp) {
    if (opt.theta == "zeros") return pglab::SoftmaxPolicy::zeros(mdp);
    if (opt.theta.rfind("random:", 0) == 0) {
        const std::vector<std::string> parts = split(opt.theta, ':');
        if (parts.size() != 3) throw pglab::ParseError("--theta random expects random:scale:seed");
        return pglab::SoftmaxPolicy::random(mdp, parse_double(parts[1], "--theta scale"),
                                            parse_seed(parts[2], "--theta seed"));
    }
    return pglab::SoftmaxPolicy(mdp, pglab::load_table(opt.theta, "theta"));
}

pglab::Baseline resolve_baseline(const Options& opt, const pglab::Mdp& mdp,
                                 const pglab::SoftmaxPolicy& policy,
                                 const pglab::ExactSolution& exact) {
    const std::vector<std::string> parts = split(opt.baseline, ':');
    const std::string& kind = parts[0];
    if (kind == "zero" && parts.size() == 1) return pglab::zero_baseline(mdp);
    if (kind == "state-value" && parts.size() == 1)
        return pglab::state_value_baseline(mdp, exact.state_values);
    if (kind == "constant" && parts.size() == 2)
        return pglab::constant_baseline(mdp, parse_double(parts[1], "--baseline constant"));
    if (kind == "random" && parts.size() == 4)
        return pglab::random_baseline(mdp, parse_double(parts[1], "--baseline lo"),
                                      parse_double(parts[2], "--baseline hi"),
                                      parse_seed(parts[3], "--baseline seed"));
    if (kind == "model" && parts.size() == 2)
        return pglab::model_based_baseline(mdp, pglab::load_mdp(parts[1]), policy);
    if (kind == "param" && parts.size() == 2) {
        const pglab::FeatureSet features =
            pglab::features_from_tensor(mdp, pglab::load_feature_tensor(parts[1]));
        return pglab::fit_param_baseline(mdp, policy, exact, features).as_baseline(mdp);
    }
    throw pglab::ParseError(
        "--baseline must be zero|state-value|constant:c|random:lo:hi:seed|model:path|param:path");
}

std::string run_id_for(const std::string& command, const Options& opt) {
    pglab::Fingerprint fp;
    fp.add("run").add(command).add(opt.mdp_path).add(opt.generate).add(opt.theta)
        .add(opt.baseline).add(static_cast<std::int64_t>(opt.episodes)).add(opt.seed)
        .add(opt.tol_identity).add(opt.tol_fd).add(opt.format)
        .add(static_cast<std::uint64_t>(opt.naive ? 1 : 0));
    return hex64(fp.digest());
}

json config_json(const Options& opt) {
    json config;
    config["mdp"] = opt.mdp_path.empty() ? "generate:" + opt.generate : opt.mdp_path;
    config["theta"] = opt.theta;
    config["baseline"] = opt.baseline;
    config["episodes"] = opt.episodes;
    config["seed"] = opt.seed;
    config["tol_identity"] = opt.tol_identity;
    config["tol_fd"] = opt.tol_fd;
    config["naive"] = opt.naive;
    return config;
}

json report_header(const std::string& command, const std::string& run_id, const Options& opt) {
    json report;
    report["schema_version"] = 1;
    report["command"] = command;
    report["run_id"] = run_id;
    report["config"] = config_json(opt);
    return report;
}

void emit(const json& report, const Options& opt, const std::string& run_id) {
    const std::string text = opt.format == "csv" ? pglab::csv_dump(report, run_id)
                                                 : pglab::canonical_dump(report) + "\n";
    if (opt.out_path.empty())
        std::cout << text;
    else
        pglab::write_text_file(opt.out_path, text);
}

double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).lpNorm<Eigen::Infinity>();
}

// Relative max-norm error with a both-zero escape hatch.
double rel_max_err(const Eigen::VectorXd& candidate, const Eigen::VectorXd& reference) {
    const double abs_err = max_abs_diff(candidate, reference);
    if (abs_err == 0.0) return 0.0;
    return abs_err / std::max(reference.lpNorm<Eigen::Infinity>(),
                              std::numeric_limits<double>::min());
}

// Finite differencing is exact only to O(h^2); accept
// ||exact - fd||_inf <= max(tol * ||exact||_2, tol / 10).
double fd_tolerance(double tol, const Eigen::VectorXd& exact_gradient) {
    return std::max(tol * exact_gradient.norm(), tol / 10.0);
}

int cmd_verify_thm1(const Options& opt) {
    const pglab::Mdp mdp = resolve_mdp(opt);
    const pglab::SoftmaxPolicy policy = resolve_policy(opt, mdp);
    const pglab::ExactSolution exact = pglab::solve_exact(mdp, policy);
    const pglab::Baseline baseline = resolve_baseline(opt, mdp, policy, exact);

    const std::string run_id = run_id_for("verify-thm1", opt);
    json report = report_header("verify-thm1", run_id, opt);
    report["baseline_provenance"] = pglab::to_string(baseline.provenance);

    Eigen::VectorXd candidate;
    if (opt.naive) {
        const pglab::BiasProbeReport probe = pglab::bias_probe(mdp, policy, exact, baseline);
        candidate = probe.naive_gradient;
        report["bias_norm"] = probe.bias_norm;
        report["leakage"] = pglab::vector_to_json(probe.leakage);
        report["gradient_naive"] = pglab::vector_to_json(candidate);
    } else {
        const pglab::CriticFit critic = pglab::fit_critic(mdp, policy, exact, baseline);
        candidate = pglab::assemble_gradient_thm1(mdp, policy, exact, critic, baseline);
        report["gradient_thm1"] = pglab::vector_to_json(candidate);
        json critic_json;
        critic_json["rank"] = critic.rank;
        critic_json["normal_residual"] = critic.normal_residual;
        critic_json["loss_value"] = critic.loss_value;
        critic_json["target_kind"] = pglab::to_string(critic.target_kind);
        report["critic"] = std::move(critic_json);
    }

    const Eigen::VectorXd fd = pglab::finite_difference_gradient(mdp, policy);
    report["gradient_exact"] = pglab::vector_to_json(exact.gradient);
    report["gradient_fd"] = pglab::vector_to_json(fd);

    const double identity_err = rel_max_err(candidate, exact.gradient);
    const bool identity_pass = identity_err <= opt.tol_identity;
    const double fd_err = max_abs_diff(exact.gradient, fd);
    const double fd_tol = fd_tolerance(opt.tol_fd, exact.gradient);
    const bool fd_pass = fd_err <= fd_tol;
    report["identity_rel_err"] = identity_err;
    report["identity_pass"] = identity_pass;
    report["fd_abs_err"] = fd_err;
    report["fd_tol"] = fd_tol;
    report["fd_pass"] = fd_pass;
    report["pass"] = identity_pass && fd_pass;

    emit(report, opt, run_id);
    return identity_pass && fd_pass ? 0 : 1;
}

int cmd_bias_probe(const Options& opt) {
    const pglab::Mdp mdp = resolve_mdp(opt);
    const pglab::SoftmaxPolicy policy = resolve_policy(opt, mdp);
    const pglab::ExactSolution exact = pglab::solve_exact(mdp, policy);
    const pglab::Baseline baseline = resolve_baseline(opt, mdp, policy, exact);
    const pglab::BiasProbeReport probe = pglab::bias_probe(mdp, policy, exact, baseline);

    const std::string run_id = run_id_for("bias-probe", opt);
    json report = report_header("bias-probe", run_id, opt);
    report["baseline_provenance"] = pglab::to_string(baseline.provenance);
    report["naive_gradient"] = pglab::vector_to_json(probe.naive_gradient);
    report["true_gradient"] = pglab::vector_to_json(probe.true_gradient);
    report["leakage"] = pglab::vector_to_json(probe.leakage);
    report["bias_norm"] = probe.bias_norm;
    report["leakage_max_norm"] = probe.leakage.lpNorm<Eigen::Infinity>();
    report["decomposition_residual"] = probe.decomposition_residual;

    emit(report, opt, run_id);
    return 0; // measures, does not judge
}

int cmd_fit_critic(const Options& opt) {
    const pglab::Mdp mdp = resolve_mdp(opt);
    const pglab::SoftmaxPolicy policy = resolve_policy(opt, mdp);
    const pglab::ExactSolution exact = pglab::solve_exact(mdp, policy);

    // --baseline zero means the raw-q loss L; anything else fits the
    // residual loss against that baseline.
    std::optional<pglab::Baseline> baseline;
    if (opt.baseline != "zero") baseline = resolve_baseline(opt, mdp, policy, exact);
    const pglab::CriticFit critic = baseline
                                        ? pglab::fit_critic(mdp, policy, exact, *baseline)
                                        : pglab::fit_critic(mdp, policy, exact);

    const std::string run_id = run_id_for("fit-critic", opt);
    json report = report_header("fit-critic", run_id, opt);
    report["target_kind"] = pglab::to_string(critic.target_kind);
    report["w"] = pglab::vector_to_json(critic.w);
    report["fitted"] = pglab::matrix_to_json(critic.fitted);
    report["loss_value"] = critic.loss_value;
    report["rank"] = critic.rank;
    report["normal_residual"] = critic.normal_residual;
    report["pairing"] = hex64(critic.pairing);
    if (baseline) report["baseline_provenance"] = pglab::to_string(baseline->provenance);

    emit(report, opt, run_id);
    return 0;
}

int cmd_grad_check(const Options& opt) {
    const pglab::Mdp mdp = resolve_mdp(opt);
    const pglab::SoftmaxPolicy policy = resolve_policy(opt, mdp);
    const pglab::ExactSolution exact = pglab::solve_exact(mdp, policy);
    const Eigen::VectorXd fd = pglab::finite_difference_gradient(mdp, policy);

    const double abs_err = max_abs_diff(exact.gradient, fd);
    const double tol = fd_tolerance(opt.tol_fd, exact.gradient);
    const bool pass = abs_err <= tol;

    const std::string run_id = run_id_for("grad-check", opt);
    json report = report_header("grad-check", run_id, opt);
    report["objective"] = exact.objective;
    report["gradient_exact"] = pglab::vector_to_json(exact.gradient);
    report["gradient_fd"] = pglab::vector_to_json(fd);
    report["max_abs_err"] = abs_err;
    report["max_rel_err"] = rel_max_err(fd, exact.gradient);
    report["tolerance"] = tol;
    report["pass"] = pass;

    emit(report, opt, run_id);
    return pass ? 0 : 1;
}

int cmd_sample_grad(const Options& opt) {
    if (opt.episodes < 1)
        throw pglab::ParseError("--episodes must be >= 1 for sample-grad");
    const pglab::Mdp mdp = resolve_mdp(opt);
    const pglab::SoftmaxPolicy policy = resolve_policy(opt, mdp);
    const pglab::ExactSolution exact = pglab::solve_exact(mdp, policy);
    const pglab::Baseline baseline = resolve_baseline(opt, mdp, policy, exact);

    // The baseline family picks the estimator: no baseline -> plain
    // REINFORCE; state-only baselines subtract b(s) from the return;
    // action-dependent baselines require the residual critic and use the
    // per-visit critic-plus-baseline estimator.
    pglab::EstimatorSpec spec;
    switch (baseline.provenance) {
    case pglab::BaselineKind::Zero:
        spec.kind = pglab::EstimatorKind::Reinforce;
        break;
    case pglab::BaselineKind::StateValue:
    case pglab::BaselineKind::Constant:
        spec.kind = pglab::EstimatorKind::ReinforceStateBaseline;
        spec.state_baseline = baseline.table.col(0);
        break;
    case pglab::BaselineKind::RandomSeeded:
    case pglab::BaselineKind::ModelBased:
    case pglab::BaselineKind::Parameterized:
        spec.kind = pglab::EstimatorKind::Thm1Critic;
        spec.critic = pglab::fit_critic(mdp, policy, exact, baseline);
        spec.baseline = baseline;
        break;
    }

    const pglab::GradientEstimate estimate =
        pglab::estimate_gradient(mdp, policy, spec, opt.episodes, opt.seed);
    const Eigen::VectorXd se = estimate.standard_error();
    int within = 0;
    for (Eigen::Index i = 0; i < estimate.mean.size(); ++i)
        if (std::abs(estimate.mean(i) - exact.gradient(i)) <= 3.0 * se(i)) ++within;

    const std::string run_id = run_id_for("sample-grad", opt);
    json report = report_header("sample-grad", run_id, opt);
    report["estimator"] = pglab::to_string(estimate.estimator_kind);
    report["baseline_provenance"] = pglab::to_string(baseline.provenance);
    report["num_episodes"] = estimate.num_episodes;
    report["horizon"] = pglab::default_horizon(mdp);
    report["mean"] = pglab::vector_to_json(estimate.mean);
    report["per_coordinate_variance"] = pglab::vector_to_json(estimate.per_coordinate_variance);
    report["standard_error"] = pglab::vector_to_json(se);
    report["variance_trace"] = estimate.per_coordinate_variance.sum();
    report["gradient_exact"] = pglab::vector_to_json(exact.gradient);
    report["max_abs_err"] = max_abs_diff(estimate.mean, exact.gradient);
    report["coords_within_3se"] = within;
    report["coords_total"] = static_cast<long>(estimate.mean.size());

    emit(report, opt, run_id);
    return 0;
}

int cmd_gen_mdp(const Options& opt) {
    if (opt.generate.empty()) throw pglab::ParseError("gen-mdp requires --generate");
    if (!opt.mdp_path.empty()) throw pglab::ParseError("gen-mdp takes --generate, not --mdp");
    if (opt.out_path.empty()) throw pglab::ParseError("gen-mdp requires --out");
    const pglab::Mdp mdp = resolve_mdp(opt);
    pglab::write_mdp(mdp, opt.out_path);

    const std::string run_id = run_id_for("gen-mdp", opt);
    json report = report_header("gen-mdp", run_id, opt);
    report["path"] = opt.out_path;
    report["num_states"] = mdp.num_states();
    report["num_actions"] = mdp.num_actions();
    report["gamma"] = mdp.gamma();
    report["mdp_fingerprint"] = hex64(mdp.fingerprint());

    const std::string text = pglab::canonical_dump(report) + "\n";
    std::cout << text;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact and sampled policy-gradient verification for tabular MDPs"};
    app.require_subcommand(1);

    Options opt;
    const auto add_common = [&](CLI::App* sub, bool with_out = true) {
        sub->add_option("--mdp", opt.mdp_path, "MDP JSON file");
        sub->add_option("--generate", opt.generate,
                        "Generate a random MDP: states,actions,gamma,seed");
        sub->add_option("--theta", opt.theta, "Policy logits: zeros|random:scale:seed|path");
        sub->add_option("--baseline", opt.baseline,
                        "zero|state-value|constant:c|random:lo:hi:seed|model:path|param:path");
        sub->add_option("--episodes", opt.episodes, "Number of sampled episodes");
        sub->add_option("--seed", opt.seed, "Root RNG seed");
        sub->add_option("--tol-identity", opt.tol_identity,
                        "Relative tolerance for the gradient identity");
        sub->add_option("--tol-fd", opt.tol_fd,
                        "Relative tolerance for the finite-difference check");
        if (with_out) sub->add_option("--out", opt.out_path, "Write the report here");
        sub->add_option("--format", opt.format, "Report format")
            ->check(CLI::IsMember({"json", "csv"}));
        return sub;
    };

    CLI::App* verify = add_common(app.add_subcommand(
        "verify-thm1", "Check the action-dependent-baseline gradient identity"));
    verify->add_flag("--naive", opt.naive,
                     "Demonstrate the bias of plugging the baseline into the state-only form");
    CLI::App* bias = add_common(app.add_subcommand(
        "bias-probe", "Measure the naive scheme's bias and its leakage decomposition"));
    CLI::App* fit = add_common(
        app.add_subcommand("fit-critic", "Fit the compatible critic and report the solution"));
    CLI::App* grad = add_common(app.add_subcommand(
        "grad-check", "Exact gradient vs central finite differences"));
    CLI::App* sample = add_common(app.add_subcommand(
        "sample-grad", "Monte Carlo gradient estimate vs the exact gradient"));
    CLI::App* gen = app.add_subcommand("gen-mdp", "Generate a random MDP file");
    gen->add_option("--generate", opt.generate,
                    "Generate a random MDP: states,actions,gamma,seed");
    gen->add_option("--mdp", opt.mdp_path, "(rejected; gen-mdp only generates)");
    gen->add_option("--out", opt.out_path, "Target MDP JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // usage errors are exit 2; --help stays 0
    }

    try {
        if (verify->parsed()) return cmd_verify_thm1(opt);
        if (bias->parsed()) return cmd_bias_probe(opt);
        if (fit->parsed()) return cmd_fit_critic(opt);
        if (grad->parsed()) return cmd_grad_check(opt);
        if (sample->parsed()) return cmd_sample_grad(opt);
        if (gen->parsed()) return cmd_gen_mdp(opt);
    } catch (const pglab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
