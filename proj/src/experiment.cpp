#include "greybox/experiment.hpp"

#include "greybox/bounds.hpp"

#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <exception>
#include <ostream>
#include <thread>

namespace greybox {

namespace {

TyingMode tying_for(const std::string& method, TyingMode structural) {
    if (method == "structural") return structural;
    return parse_tying_mode(method);
}

}  // namespace

Environment::Environment(const ExperimentConfig& cfg) : kind_(cfg.environment) {
    if (kind_ == EnvironmentKind::queue) {
        queue_ = std::make_shared<const QueueModel>(cfg.queue);
        simulator_ = std::make_shared<const QueueSimulator>(*queue_, queue_->true_parameters());
        true_mdp_ = std::make_shared<const FiniteMdp>(queue_->true_mdp());
    } else {
        grid_ = std::make_shared<const GridWorld>(cfg.grid);
        structural_tying_ = cfg.grid.tying;
        simulator_ = std::make_shared<const GridSimulator>(*grid_);
        true_mdp_ = std::make_shared<const FiniteMdp>(grid_->true_mdp());
        for (const auto& m : cfg.methods) {
            if (m == "qlearning") continue;
            try {
                (void)grid_->true_parameters(tying_for(m, structural_tying_));
            } catch (const std::invalid_argument& e) {
                throw ConfigError("wind_probs", std::string(e.what()).substr(std::string("wind_probs: ").size()));
            }
        }
    }
    const auto report = validate_mdp(*true_mdp_);
    if (!report.ok()) throw ModelError("true model is not a valid MDP: " + report.summary());
    q_star_ = policy_iteration(*true_mdp_).q;
    const QTable q_vi = value_iteration(*true_mdp_, cfg.planner_cfg);
    planner_gap_ = sup_norm_diff(q_star_, q_vi);
    if (planner_gap_ > 10.0 * cfg.planner_cfg.residual_tolerance + 1e-12)
        throw ModelError("policy and value iteration disagree on the true model by " + std::to_string(planner_gap_));
}

StructuralModel Environment::model_for(const std::string& method) const {
    if (kind_ == EnvironmentKind::queue) {
        const StructuralModel model = queue_->structural_model();
        if (method == "structural") return model;
        if (method == "entrywise") return entrywise_spec(model);
    } else if (method != "qlearning") {
        return grid_->model(tying_for(method, structural_tying_));
    }
    throw std::invalid_argument("no structural model for method '" + method + "'");
}

std::vector<double> entrywise_parameters(const StructuralModel& model, const FiniteMdp& mdp) {
    std::vector<double> mu;
    mu.reserve(model.num_slots());
    for (std::size_t z = 0; z < model.num_pairs(); ++z) {
        for (StateIndex n : model.support(z)) mu.push_back(mdp.probability(z, n));
    }
    return mu;
}

std::vector<double> Environment::true_parameters(const std::string& method) const {
    if (kind_ == EnvironmentKind::queue) {
        if (method == "structural") return queue_->true_parameters();
        return entrywise_parameters(model_for(method), *true_mdp_);
    }
    return grid_->true_parameters(tying_for(method, structural_tying_));
}

std::vector<std::string> Environment::parameter_names(const std::string& method) const {
    std::vector<std::string> names;
    if (kind_ == EnvironmentKind::gridworld && method != "entrywise" && method != "qlearning")
        return grid_->parameter_names(tying_for(method, structural_tying_));
    for (const auto& p : model_for(method).params()) names.push_back(p.name);
    return names;
}

QTable plan(const FiniteMdp& mdp, const ExperimentConfig& cfg) {
    if (cfg.planner == PlannerKind::value_iteration) return value_iteration(mdp, cfg.planner_cfg);
    return policy_iteration(mdp).q;
}

std::vector<MetricsRow> run_cell(const ExperimentConfig& cfg, const Environment& env, const std::string& method,
                                 std::uint64_t seed) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const auto elapsed = [&] {
        return cfg.record_wall_time ? std::chrono::duration<double>(clock::now() - t0).count() : 0.0;
    };
    std::vector<MetricsRow> rows;

    if (method == "qlearning") {
        QLearningConfig qc;
        qc.steps = cfg.checkpoints.back();
        qc.epsilon = cfg.epsilon;
        qc.lr_exponent = cfg.lr_exponent;
        qc.horizon = cfg.horizon;
        qc.checkpoints = cfg.checkpoints;
        Rng rng(seed, 1);
        const auto res = q_learning(env.simulator(), env.true_mdp().rewards(), env.true_mdp().gamma(), qc, rng,
                                    &env.q_star());
        for (const auto& c : res.trace) rows.push_back({method, seed, c.step, c.min_visits, c.error, elapsed()});
        return rows;
    }

    const StructuralModel model = env.model_for(method);
    const std::vector<double> defaults = model.default_parameters();
    const std::vector<double> truth = cfg.inject_true_parameters ? env.true_parameters(method) : std::vector<double>{};
    const auto active = model.active_params(cfg.extraction);
    EstimatorState est(model.params());

    Rng rng(seed, 0);
    SampleStream stream(env.simulator(), {cfg.collection, cfg.budget, cfg.horizon, {}}, rng);
    for (const std::uint64_t k : cfg.checkpoints) {
        while (stream.produced() < k) {
            const TransitionRecord rec = stream.next();
            const ObservationList info = model.extract(rec, cfg.extraction);
            est.record({info.data(), info.size()});
        }
        const std::vector<double> mu = cfg.inject_true_parameters ? truth : estimates(est, defaults);
        const FiniteMdp mdp_k = reconstruct(model, mu);
        const QTable q_k = plan(mdp_k, cfg);
        const std::uint64_t n_k = active.empty() ? 0 : min_info_count(est, active);
        rows.push_back({method, seed, k, n_k, sup_norm_diff(q_k, env.q_star()), elapsed()});
    }
    return rows;
}

std::vector<MetricsRow> run_experiment(const ExperimentConfig& cfg, const Environment& env, std::size_t jobs) {
    struct Cell {
        std::string method;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (const auto& m : cfg.methods) {
        for (const auto seed : cfg.seeds) cells.push_back({m, seed});
    }
    std::vector<std::vector<MetricsRow>> results(cells.size());
    std::vector<std::exception_ptr> errors(cells.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                results[i] = run_cell(cfg, env, cells[i].method, cells[i].seed);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    jobs = std::max<std::size_t>(1, std::min(jobs, cells.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<MetricsRow> rows;
    for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
    return rows;
}

void write_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
    out << kCsvHeader << "\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%" PRIu64 ",%" PRIu64 ",%" PRIu64 ",%.17g,%.6f\n", r.method.c_str(), r.seed,
                      r.k, r.n_k, r.q_error, r.wall_time_s);
        out << buf;
    }
}

BoundSetup bound_setup(const ExperimentConfig& cfg, const Environment& env) {
    const std::string method = "structural";
    BoundSetup b{env.model_for(method), env.true_parameters(method), 0, {}, {}};
    b.active = b.model.active_params(cfg.extraction).size();

    Rng rng(0, 7);
    b.lipschitz = estimate_lipschitz(b.model, b.truth, cfg.bounds.lipschitz_pairs, rng);

    BoundInputs& in = b.inputs;
    in.gamma = b.model.gamma();
    in.num_pairs = b.model.num_pairs();
    in.delta = cfg.bounds.delta;
    in.lipschitz = b.lipschitz.value;
    in.sigma_mu = cfg.bounds.plugin_sigma ? plugin_sigma(b.truth) : worst_case_sigma(b.model.num_params());
    in.n_k = cfg.bounds.n_k;
    return b;
}

void write_bounds_report(std::ostream& out, const ExperimentConfig& cfg, const Environment& env) {
    const BoundSetup setup = bound_setup(cfg, env);
    const StructuralModel& model = setup.model;
    const BoundInputs& in = setup.inputs;
    const LipschitzEstimate& lip = setup.lipschitz;
    const std::size_t m = setup.active;

    const auto l2 = lemma2_constants(in);
    const double eps = theorem1_epsilon(in);

    char buf[512];
    const auto line = [&](const char* fmt, auto... args) {
        std::snprintf(buf, sizeof buf, fmt, args...);
        out << buf << "\n";
    };
    line("environment      %s", env.kind() == EnvironmentKind::queue ? "queue" : "gridworld");
    if (env.kind() == EnvironmentKind::gridworld) line("tying_mode       %s", to_string(cfg.grid.tying).c_str());
    line("states           %zu", model.num_states());
    line("actions          %zu", model.num_actions());
    line("N                %" PRIu64, in.num_pairs);
    line("parameters       %zu (active %zu)", model.num_params(), m);
    line("gamma            %.6g", in.gamma);
    line("beta             %.6g", in.beta());
    line("delta            %.6g", in.delta);
    line("sigma_mu         %.6g (%s)", in.sigma_mu, cfg.bounds.plugin_sigma ? "plugin" : "worst");
    line("lipschitz        %.6g (lower estimate, %zu pairs)", lip.value, lip.pairs);
    line("n_k              %" PRIu64, in.n_k);
    line("lemma1           %.6g", lemma1_bound(in.sigma_mu, in.n_k));
    line("c_pv             %.6g", l2.c_pv);
    line("b_pv             %.6g", l2.b_pv);
    line("epsilon          %.6g", eps);
    try {
        const auto req = samples_for_accuracy(cfg.bounds.target_epsilon, in, m);
        line("target_epsilon   %.6g", cfg.bounds.target_epsilon);
        line("required_n_k     %" PRIu64, req.n_k);
        line("regime           %s (log N = %.4g)", to_string(req.regime).c_str(), std::log(double(in.num_pairs)));
        line("rate_sqrt_log    %.6g", req.rate_sqrt_log);
        line("rate_log         %.6g", req.rate_log);
    } catch (const std::domain_error& e) {
        line("required_n_k     unreachable (%s)", e.what());
    }
}

}  // namespace greybox
