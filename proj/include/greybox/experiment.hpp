#pragma once

#include "greybox/bounds.hpp"
#include "greybox/explore.hpp"
#include "greybox/gridworld.hpp"
#include "greybox/mdp.hpp"
#include "greybox/planning.hpp"
#include "greybox/queue.hpp"
#include "greybox/structure.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace greybox {

/// Malformed or inconsistent configuration; what() starts with the key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(key + ": " + message), key(std::move(key)) {}
    std::string key;
};

enum class EnvironmentKind { queue, gridworld };
enum class PlannerKind { policy_iteration, value_iteration };

struct BoundsConfig {
    double delta = 0.1;
    double target_epsilon = 0.1;
    std::uint64_t n_k = 10000;
    std::size_t lipschitz_pairs = 10000;
    bool plugin_sigma = false;  // default: worst case 1/2 per parameter
};

struct ExperimentConfig {
    EnvironmentKind environment = EnvironmentKind::queue;
    QueueConfig queue;
    GridConfig grid;
    std::vector<std::string> methods;
    Extraction extraction = Extraction::oracle;

    CollectionMode collection = CollectionMode::generative;
    std::uint64_t budget = 100000;
    std::uint64_t horizon = 0;
    double epsilon = 0.1;
    double lr_exponent = 0.8;

    std::vector<std::uint64_t> checkpoints;
    std::vector<std::uint64_t> seeds;
    PlannerKind planner = PlannerKind::policy_iteration;
    PlannerConfig planner_cfg;
    std::string output = "results.csv";
    bool inject_true_parameters = false;
    bool record_wall_time = false;

    BoundsConfig bounds;
};

/// 20 log-spaced integers from 10^3 (or 1 for small budgets) to the budget.
std::vector<std::uint64_t> default_checkpoints(std::uint64_t budget);

/// Parses the INI-style config. Throws ConfigError naming the offending key.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
/// Cross-field checks (methods valid for the environment, checkpoints, seeds).
void validate_config(const ExperimentConfig& cfg);

/// Methods understood for an environment, in canonical order.
std::vector<std::string> known_methods(EnvironmentKind kind);

/// Ground truth plus samplers for one configured environment. Immutable.
class Environment {
public:
    explicit Environment(const ExperimentConfig& cfg);

    EnvironmentKind kind() const { return kind_; }
    const Simulator& simulator() const { return *simulator_; }
    const FiniteMdp& true_mdp() const { return *true_mdp_; }
    const QTable& q_star() const { return q_star_; }
    /// ||Q*_PI - Q*_VI|| from the construction-time cross-check.
    double planner_gap() const { return planner_gap_; }

    StructuralModel model_for(const std::string& method) const;
    std::vector<double> true_parameters(const std::string& method) const;
    std::vector<std::string> parameter_names(const std::string& method) const;

private:
    EnvironmentKind kind_;
    std::shared_ptr<const QueueModel> queue_;
    std::shared_ptr<const GridWorld> grid_;
    TyingMode structural_tying_ = TyingMode::more_info;
    std::shared_ptr<const Simulator> simulator_;
    std::shared_ptr<const FiniteMdp> true_mdp_;
    QTable q_star_;
    double planner_gap_ = 0.0;
};

/// Row probabilities of `mdp` laid out as the entrywise parameter vector of `model`.
std::vector<double> entrywise_parameters(const StructuralModel& model, const FiniteMdp& mdp);

struct MetricsRow {
    std::string method;
    std::uint64_t seed = 0;
    std::uint64_t k = 0;
    std::uint64_t n_k = 0;
    double q_error = 0.0;
    double wall_time_s = 0.0;
};

QTable plan(const FiniteMdp& mdp, const ExperimentConfig& cfg);

/// One (method, seed) cell: streams samples and records a row per checkpoint.
std::vector<MetricsRow> run_cell(const ExperimentConfig& cfg, const Environment& env, const std::string& method,
                                 std::uint64_t seed);

/// Every cell, merged in (config method order, seed order, k) order.
/// `jobs` worker threads share the cells.
std::vector<MetricsRow> run_experiment(const ExperimentConfig& cfg, const Environment& env, std::size_t jobs = 1);

inline constexpr const char* kCsvHeader = "method,seed,k,n_k,q_error,wall_time_s";
void write_csv(std::ostream& out, const std::vector<MetricsRow>& rows);

struct BoundSetup {
    StructuralModel model;
    std::vector<double> truth;
    std::size_t active = 0;  // parameters counted for the regime
    LipschitzEstimate lipschitz;
    BoundInputs inputs;
};

/// Bound inputs for the configured structural model: estimated L (fixed
/// stream), sigma per the bounds config, n_k from the config.
BoundSetup bound_setup(const ExperimentConfig& cfg, const Environment& env);

/// Human-readable bound report for the configured structural model.
void write_bounds_report(std::ostream& out, const ExperimentConfig& cfg, const Environment& env);

}  // namespace greybox
