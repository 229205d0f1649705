// mumab: oracle diagnostics, experiment runs and config validation.
//
// Exit codes: 0 success, 1 usage error, 2 config or validation error,
// 3 runtime failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mumab/mumab.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kInvalid = 2, kRuntime = 3 };

std::string num(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void print_diagnostics(const std::string& file, const std::vector<mumab::Diagnostic>& diags)
{
    for (const auto& d : diags) {
        std::cerr << file;
        if (d.line > 0)
            std::cerr << ':' << d.line;
        std::cerr << (d.severity == mumab::Diagnostic::Severity::Error ? ": error: " : ": warning: ") << d.message
                  << '\n';
    }
}

int cmd_oracle(const std::string& model_path, int users, std::uint64_t brute_force_cap)
{
    const mumab::RewardModel model = mumab::load_model(model_path);
    const auto& means = model.means();
    const mumab::OptimalConfig best = mumab::optimal_config(means, users);
    std::optional<mumab::GapParams> gap;
    try {
        gap = mumab::gap_params(means, users);
    } catch (const mumab::DegenerateGapError&) {
    }

    std::cout << "k*=" << best.k.to_string() << " J1=" << num(best.value);
    if (gap)
        std::cout << " J2=" << num(gap->second) << " Δ=" << num(gap->delta) << '\n';
    else
        std::cout << " J2=none Δ=undefined\n"
                  << "degenerate gap: every feasible configuration has system value " << num(best.value) << '\n';

    const std::uint64_t count = mumab::count_configurations(model.channels(), model.max_occupancy(), users);
    if (count > brute_force_cap) {
        std::cout << "brute-force check: skipped (" << count << " configurations > cap " << brute_force_cap << ")\n";
        return kOk;
    }
    const mumab::OracleResult oracle = mumab::brute_force_oracle(means, users, brute_force_cap);
    bool agree = oracle.k == best.k && std::abs(oracle.values.front() - best.value) <= mumab::kValueTolerance;
    if (gap)
        agree = agree && oracle.values.size() >= 2
                && std::abs(oracle.values[1] - gap->second) <= mumab::kValueTolerance;
    else
        agree = agree && oracle.values.size() == 1;
    std::cout << "brute-force check: " << (agree ? "agree" : "MISMATCH") << " (" << count << " configurations)\n";
    return agree ? kOk : kRuntime;
}

int cmd_validate(const std::string& path)
{
    const mumab::ParsedConfig parsed = mumab::load_config(path);
    const auto diags = mumab::validate(parsed.config, parsed.lines);
    print_diagnostics(path, diags);
    if (mumab::has_errors(diags))
        return kInvalid;
    const auto& m = *parsed.config.model;
    std::cout << "ok: K=" << parsed.config.users << " M=" << m.channels() << " N=" << m.max_occupancy();
    if (const auto d = mumab::resolve_delta(parsed.config))
        std::cout << " delta_lb=" << num(*d) << " T0=" << mumab::samples_per_cell(*d);
    std::cout << '\n';
    return kOk;
}

struct RunFlags {
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
    std::optional<std::string> out;
    std::optional<std::int64_t> log_every;
    bool log_geometric = false;
    bool full_log = false;
    unsigned jobs = 0;
};

int cmd_run(const std::string& path, const RunFlags& flags)
{
    mumab::ParsedConfig parsed = mumab::load_config(path);
    mumab::ExperimentConfig& cfg = parsed.config;
    if (flags.seed)
        cfg.seed = *flags.seed;
    if (flags.runs)
        cfg.runs = *flags.runs;
    if (flags.log_every) {
        cfg.logging.kind = mumab::LogSpacing::Kind::Linear;
        cfg.logging.stride = *flags.log_every;
    }
    if (flags.log_geometric)
        cfg.logging.kind = mumab::LogSpacing::Kind::Geometric;
    if (flags.full_log)
        cfg.full_log = true;

    const auto diags = mumab::validate(cfg, parsed.lines);
    print_diagnostics(path, diags);
    if (mumab::has_errors(diags))
        return kInvalid;

    mumab::RunOptions options;
    options.jobs = flags.jobs;
    if (flags.out)
        options.output_dir = *flags.out;
    const mumab::ExperimentReport report = mumab::run_experiment(cfg, options);

    std::cout << cfg.name << ": k*=" << report.optimum.to_string();
    if (report.delta_lb)
        std::cout << " delta_lb=" << num(*report.delta_lb) << " T0=" << report.samples_per_cell;
    std::cout << '\n';
    for (const auto& p : report.policies) {
        std::cout << "  " << mumab::to_string(p.policy) << ": R(T) mean=" << num(p.final_mean)
                  << " std=" << num(p.final_std);
        if (p.bound_checked)
            std::cout << " static-bound=" << (p.bound_holds ? "holds" : "VIOLATED");
        std::cout << '\n';
    }
    std::cout << "  wrote " << report.files.size() << " files under "
              << options.output_dir.value_or(cfg.output_dir).string() << '\n';
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Decentralized multi-user channel allocation simulator"};
    app.require_subcommand(1);

    std::string model_path;
    int users = 0;
    std::uint64_t cap = 10'000'000;
    auto* oracle = app.add_subcommand("oracle", "Print k*, J1, J2 and the gap for a model file");
    oracle->add_option("--model", model_path, "Model YAML file")->required();
    oracle->add_option("--users,-K", users, "Number of users K")->required()->check(CLI::NonNegativeNumber);
    oracle->add_option("--brute-force-cap", cap, "Skip the brute-force cross-check above this many configurations");

    std::string config_path;
    RunFlags flags;
    auto* run = app.add_subcommand("run", "Run an experiment config");
    run->add_option("config", config_path, "Experiment YAML file")->required();
    run->add_option("--seed", flags.seed, "Override the base seed");
    run->add_option("--runs", flags.runs, "Override the number of runs")->check(CLI::PositiveNumber);
    run->add_option("--out", flags.out, "Override the output directory");
    run->add_option("--log-every", flags.log_every, "Log every N slots (0 = horizon/1000)")
        ->check(CLI::NonNegativeNumber);
    run->add_flag("--log-geometric", flags.log_geometric, "Log at powers of two");
    run->add_flag("--full-log", flags.full_log, "Write per-slot logs (large)");
    run->add_option("--jobs,-j", flags.jobs, "Worker threads (0 = all cores)");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check an experiment config");
    validate->add_option("config", validate_path, "Experiment YAML file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*oracle)
            return cmd_oracle(model_path, users, cap);
        if (*validate)
            return cmd_validate(validate_path);
        return cmd_run(config_path, flags);
    } catch (const mumab::ConfigError& e) {
        std::cerr << (*oracle ? model_path : *validate ? validate_path : config_path) << ": error: " << e.what()
                  << '\n';
        return kInvalid;
    } catch (const mumab::ModelError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const mumab::InfeasibleError& e) {
        std::cerr << "error: infeasible: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
}
