#include "greybox/cli.hpp"

#include "greybox/experiment.hpp"
#include "greybox/random.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace greybox::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::size_t jobs = 1;
};

fs::path resolve_output(const ExperimentConfig& cfg, const Options& opt) {
    if (opt.out) return *opt.out;
    if (const char* dir = std::getenv("GREYBOX_OUTPUT_DIR"); dir && *dir)
        return fs::path(dir) / fs::path(cfg.output).filename();
    return cfg.output;
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

ExperimentConfig load(const Options& opt) {
    ExperimentConfig cfg = load_config(opt.config);
    if (opt.seed) cfg.seeds = {*opt.seed};
    return cfg;
}

int cmd_run(const Options& opt, std::ostream& out) {
    const ExperimentConfig cfg = load(opt);
    const Environment env(cfg);
    const auto rows = run_experiment(cfg, env, opt.jobs);
    const fs::path path = resolve_output(cfg, opt);
    auto file = open_output(path);
    write_csv(file, rows);
    file.close();
    if (!file) throw std::runtime_error("failed writing '" + path.string() + "'");
    out << "wrote " << rows.size() << " rows to " << path.string() << "\n";
    return 0;
}

int cmd_bounds(const Options& opt, std::ostream& out) {
    const ExperimentConfig cfg = load(opt);
    const Environment env(cfg);
    if (opt.out) {
        auto file = open_output(*opt.out);
        write_bounds_report(file, cfg, env);
    } else {
        write_bounds_report(out, cfg, env);
    }
    return 0;
}

int cmd_dump(const Options& opt, std::ostream& out) {
    const ExperimentConfig cfg = load(opt);
    const FiniteMdp mdp = cfg.environment == EnvironmentKind::queue ? QueueModel(cfg.queue).true_mdp()
                                                                    : GridWorld(cfg.grid).true_mdp();
    if (opt.out) {
        auto file = open_output(*opt.out);
        write_mdp(file, mdp);
    } else {
        write_mdp(out, mdp);
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Grey-box model estimation and planning for finite MDPs", "greybox"};
    app.require_subcommand(1);
    Options opt;
    std::uint64_t seed = 0;

    const auto add_common = [&](CLI::App* sub, bool with_jobs) {
        sub->add_option("config", opt.config, "experiment config (INI)")->required();
        sub->add_option("--seed", seed, "run a single seed instead of the configured list");
        sub->add_option("--out", opt.out, "output path");
        if (with_jobs) sub->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
    };
    CLI::App* run_cmd = app.add_subcommand("run", "run the configured experiment and write the CSV");
    add_common(run_cmd, true);
    CLI::App* bounds_cmd = app.add_subcommand("bounds", "print the bound report");
    add_common(bounds_cmd, false);
    CLI::App* env_cmd = app.add_subcommand("env", "environment utilities");
    env_cmd->require_subcommand(1);
    CLI::App* dump_cmd = env_cmd->add_subcommand("dump", "serialize the true MDP");
    add_common(dump_cmd, false);
    CLI::App* self_cmd = app.add_subcommand("selftest", "run the invariant self-checks");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    for (CLI::App* sub : {run_cmd, bounds_cmd, dump_cmd}) {
        if (sub->parsed() && sub->count("--seed")) opt.seed = seed;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(opt, out);
        if (bounds_cmd->parsed()) return cmd_bounds(opt, out);
        if (dump_cmd->parsed()) return cmd_dump(opt, out);
        if (self_cmd->parsed()) return selftest(out) ? 0 : 1;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

bool selftest(std::ostream& out) {
    bool all = true;
    const auto report = [&](const std::string& name, bool ok, const std::string& detail = {}) {
        out << (ok ? "ok   " : "FAIL ") << name << (detail.empty() ? "" : "  " + detail) << "\n";
        all = all && ok;
    };
    const auto stochastic = [](const StructuralModel& model, Rng& rng, int draws) {
        std::vector<double> mu;
        for (int t = 0; t < draws; ++t) {
            mu = model.default_parameters();
            for (std::size_t i = 0; i < model.num_params(); ++i) {
                if (model.params()[i].kind == ParameterKind::bernoulli) mu[model.slot_offset(i)] = rng.uniform();
            }
            if (!validate_mdp(reconstruct(model, mu)).ok()) return false;
        }
        return true;
    };

    Rng rng(0);
    const QueueModel queue{QueueConfig{}};
    const StructuralModel qmodel = queue.structural_model();
    report("queue reconstruction is stochastic", stochastic(qmodel, rng, 50));
    const GridWorld grid{GridConfig{}};
    for (TyingMode mode : {TyingMode::more_info, TyingMode::least_info})
        report("gridworld " + to_string(mode) + " reconstruction is stochastic", stochastic(grid.model(mode), rng, 50));

    for (const auto& [name, mdp] : {std::pair<std::string, FiniteMdp>{"queue", queue.true_mdp()},
                                    std::pair<std::string, FiniteMdp>{"gridworld", grid.true_mdp()}}) {
        const double gap = sup_norm_diff(value_iteration(mdp), policy_iteration(mdp).q);
        report(name + " value and policy iteration agree", gap <= 1e-8, "gap " + std::to_string(gap));
    }

    const QueueSimulator qsim(queue, queue.true_parameters());
    bool decoded = true;
    for (int t = 0; t < 10000 && decoded; ++t) {
        const StateIndex s = StateIndex(rng.index(qsim.num_states()));
        const ActionIndex a = ActionIndex(rng.index(qsim.num_actions()));
        const TransitionRecord rec = qsim.sample(s, a, rng);
        decoded = qmodel.extract(rec, Extraction::strict) == rec.latent;
    }
    report("queue strict decode matches latent draws", decoded);

    const GridSimulator gsim(grid);
    const StructuralModel native = grid.native_model();
    bool strict_ok = true;
    for (int t = 0; t < 10000 && strict_ok; ++t) {
        StateIndex s = StateIndex(rng.index(gsim.num_states()));
        if (gsim.terminal(s)) continue;
        const ActionIndex a = ActionIndex(rng.index(4));
        const TransitionRecord rec = gsim.sample(s, a, rng);
        const std::size_t z = std::size_t(s) * 4 + a;
        for (const Observation& o : native.extract(rec, Extraction::strict)) {
            if (!native.strict_sets().contains(o.param, z)) strict_ok = false;
            const auto it = std::find_if(rec.latent.begin(), rec.latent.end(),
                                         [&](const Observation& l) { return l.param == o.param; });
            if (it == rec.latent.end() || it->value != o.value) strict_ok = false;
        }
    }
    report("gridworld strict decode matches latent draws", strict_ok);
    return all;
}

}  // namespace greybox::cli
