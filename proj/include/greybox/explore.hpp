#pragma once

#include "greybox/mdp.hpp"
#include "greybox/random.hpp"
#include "greybox/simulator.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace greybox {

enum class CollectionMode { generative, rollout };

CollectionMode parse_collection_mode(const std::string& name);
std::string to_string(CollectionMode mode);

/// Behaviour policy for rollouts; the default draws actions uniformly.
using BehaviourPolicy = std::function<ActionIndex(StateIndex, Rng&)>;

struct CollectionPlan {
    CollectionMode mode = CollectionMode::generative;
    std::uint64_t budget = 0;
    std::uint64_t horizon = 0;  // rollout episode cap; 0 = reset only at terminal states
    BehaviourPolicy policy;     // empty = uniform random
};

/**
 * Endless transition stream. Generative mode visits pairs round-robin
 * (z = t mod N); rollout mode follows the behaviour policy from
 * reset_state(), restarting at terminal states and after `horizon` steps.
 * The budget of the plan is not enforced here.
 */
class SampleStream {
public:
    SampleStream(const Simulator& sim, CollectionPlan plan, Rng& rng);

    TransitionRecord next();
    std::uint64_t produced() const { return produced_; }

private:
    const Simulator& sim_;
    CollectionPlan plan_;
    Rng& rng_;
    std::uint64_t produced_ = 0;
    StateIndex state_ = 0;
    std::uint64_t episode_steps_ = 0;
    bool started_ = false;
};

/// Exactly k records, pair visit counts floor(k/N) or floor(k/N) + 1.
std::vector<TransitionRecord> generative_collect(const Simulator& sim, std::uint64_t k, Rng& rng);
/// Exactly plan.budget records from rollouts.
std::vector<TransitionRecord> rollout_collect(const Simulator& sim, const CollectionPlan& plan, Rng& rng);

struct QLearningConfig {
    std::uint64_t steps = 0;
    double epsilon = 0.1;
    double lr_exponent = 0.8;  // lr(s, a) = visits(s, a)^-lr_exponent
    std::uint64_t horizon = 0;
    std::vector<std::uint64_t> checkpoints;  // steps at which the error trace is sampled
};

struct QLearningCheckpoint {
    std::uint64_t step = 0;
    std::uint64_t min_visits = 0;  // over non-terminal pairs
    double error = 0.0;            // ||Q - reference||, NaN without a reference
};

struct QLearningResult {
    QTable q;
    std::vector<std::uint64_t> visits;
    std::vector<QLearningCheckpoint> trace;
};

/// Tabular epsilon-greedy Q-learning on the simulator's rollouts; greedy ties
/// go to the lowest action. Terminal states keep Q = 0 (episodes restart there).
QLearningResult q_learning(const Simulator& sim, std::span<const double> reward, double gamma,
                           const QLearningConfig& cfg, Rng& rng, const QTable* reference = nullptr);

}  // namespace greybox
