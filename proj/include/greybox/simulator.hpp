#pragma once

#include "greybox/random.hpp"
#include "greybox/structure.hpp"

namespace greybox {

/// Sampling access to an environment. Implementations are immutable; all
/// randomness comes from the caller-owned Rng.
class Simulator {
public:
    virtual ~Simulator() = default;

    virtual std::size_t num_states() const = 0;
    virtual std::size_t num_actions() const = 0;
    std::size_t num_pairs() const { return num_states() * num_actions(); }

    /// Draws s' ~ P(. | s, a) with latent annotations. Terminal states self-loop.
    virtual TransitionRecord sample(StateIndex s, ActionIndex a, Rng& rng) const = 0;

    /// State a rollout restarts from.
    virtual StateIndex reset_state(Rng& rng) const = 0;

    virtual bool terminal(StateIndex s) const = 0;
};

}  // namespace greybox
