#include "greybox/explore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace greybox {

CollectionMode parse_collection_mode(const std::string& name) {
    if (name == "generative") return CollectionMode::generative;
    if (name == "rollout") return CollectionMode::rollout;
    throw std::invalid_argument("mode: expected generative or rollout, got '" + name + "'");
}

std::string to_string(CollectionMode mode) { return mode == CollectionMode::generative ? "generative" : "rollout"; }

SampleStream::SampleStream(const Simulator& sim, CollectionPlan plan, Rng& rng)
    : sim_(sim), plan_(std::move(plan)), rng_(rng) {}

TransitionRecord SampleStream::next() {
    if (plan_.mode == CollectionMode::generative) {
        const std::size_t z = std::size_t(produced_ % sim_.num_pairs());
        ++produced_;
        const auto A = sim_.num_actions();
        return sim_.sample(StateIndex(z / A), ActionIndex(z % A), rng_);
    }
    if (!started_ || sim_.terminal(state_) || (plan_.horizon > 0 && episode_steps_ >= plan_.horizon)) {
        state_ = sim_.reset_state(rng_);
        episode_steps_ = 0;
        started_ = true;
    }
    const ActionIndex a = plan_.policy ? plan_.policy(state_, rng_) : ActionIndex(rng_.index(sim_.num_actions()));
    TransitionRecord rec = sim_.sample(state_, a, rng_);
    state_ = rec.s_next;
    ++episode_steps_;
    ++produced_;
    return rec;
}

std::vector<TransitionRecord> generative_collect(const Simulator& sim, std::uint64_t k, Rng& rng) {
    SampleStream stream(sim, {CollectionMode::generative, k, 0, {}}, rng);
    std::vector<TransitionRecord> out;
    out.reserve(k);
    for (std::uint64_t t = 0; t < k; ++t) out.push_back(stream.next());
    return out;
}

std::vector<TransitionRecord> rollout_collect(const Simulator& sim, const CollectionPlan& plan, Rng& rng) {
    CollectionPlan p = plan;
    p.mode = CollectionMode::rollout;
    SampleStream stream(sim, p, rng);
    std::vector<TransitionRecord> out;
    out.reserve(plan.budget);
    for (std::uint64_t t = 0; t < plan.budget; ++t) out.push_back(stream.next());
    return out;
}

QLearningResult q_learning(const Simulator& sim, std::span<const double> reward, double gamma,
                           const QLearningConfig& cfg, Rng& rng, const QTable* reference) {
    const std::size_t S = sim.num_states(), A = sim.num_actions();
    if (reward.size() != S * A) throw std::invalid_argument("q_learning: reward table size mismatch");
    if (!std::is_sorted(cfg.checkpoints.begin(), cfg.checkpoints.end()))
        throw std::invalid_argument("q_learning: checkpoints must be increasing");

    QLearningResult res;
    res.q = QTable(S, A);
    res.visits.assign(S * A, 0);
    std::vector<bool> terminal(S);
    for (StateIndex s = 0; s < S; ++s) terminal[s] = sim.terminal(s);

    const auto min_visits = [&] {
        std::uint64_t m = std::numeric_limits<std::uint64_t>::max();
        for (std::size_t z = 0; z < S * A; ++z) {
            if (!terminal[z / A]) m = std::min(m, res.visits[z]);
        }
        return m == std::numeric_limits<std::uint64_t>::max() ? 0 : m;
    };
    const auto snapshot = [&](std::uint64_t step) {
        QLearningCheckpoint c{step, min_visits(), std::numeric_limits<double>::quiet_NaN()};
        if (reference) c.error = sup_norm_diff(res.q, *reference);
        res.trace.push_back(c);
    };

    auto next_cp = cfg.checkpoints.begin();
    while (next_cp != cfg.checkpoints.end() && *next_cp == 0) {
        snapshot(0);
        ++next_cp;
    }

    StateIndex s = sim.reset_state(rng);
    std::uint64_t episode = 0;
    for (std::uint64_t t = 1; t <= cfg.steps; ++t) {
        if (terminal[s] || (cfg.horizon > 0 && episode >= cfg.horizon)) {
            s = sim.reset_state(rng);
            episode = 0;
        }
        ActionIndex a;
        if (rng.bernoulli(cfg.epsilon)) {
            a = ActionIndex(rng.index(A));
        } else {
            const auto row = res.q.state_values(s);
            a = ActionIndex(std::max_element(row.begin(), row.end()) - row.begin());
        }
        const TransitionRecord rec = sim.sample(s, a, rng);
        const std::size_t z = std::size_t(s) * A + a;
        const double lr = std::pow(double(++res.visits[z]), -cfg.lr_exponent);
        const double target = reward[z] + gamma * res.q.max_value(rec.s_next);
        res.q[z] += lr * (target - res.q[z]);
        s = rec.s_next;
        ++episode;
        while (next_cp != cfg.checkpoints.end() && *next_cp == t) {
            snapshot(t);
            ++next_cp;
        }
    }
    return res;
}

}  // namespace greybox
