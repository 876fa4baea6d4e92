#pragma once

#include "greybox/mdp.hpp"
#include "greybox/simulator.hpp"
#include "greybox/structure.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace greybox {

/// Discrete-time Geo/Geo/G queue with a finite buffer and heterogeneous servers.
struct QueueConfig {
    std::size_t buffer = 8;
    std::size_t servers = 3;
    double injection_rate = 0.85;
    std::vector<double> exit_probabilities{0.9, 0.01, 0.04};
    double gamma = 0.9;
};

/// Queue length plus busy flags; bit i of `busy` is server i+1.
struct QueueState {
    std::size_t length = 0;
    std::uint32_t busy = 0;

    bool operator==(const QueueState&) const = default;
};

/// Latent draws of one step: the arrival bit and one departure bit per server.
struct QueueLatent {
    bool arrival = false;
    std::uint32_t departures = 0;
};

/**
 * Step order: queued jobs move to the requested free servers (lowest index
 * first, at most `length` of them); every busy server then finishes with its
 * exit probability; finally a job arrives with the injection rate unless the
 * pre-step queue was full. An arriving job waits at least one step.
 *
 * Parameter layout: (I, mu_1, ..., mu_G).
 */
class QueueModel {
public:
    explicit QueueModel(QueueConfig cfg);

    const QueueConfig& config() const { return cfg_; }
    std::size_t num_states() const { return (cfg_.buffer + 1) << cfg_.servers; }
    std::size_t num_actions() const { return std::size_t(1) << cfg_.servers; }
    std::size_t num_params() const { return cfg_.servers + 1; }
    static constexpr std::uint32_t arrival_param = 0;
    static std::uint32_t server_param(std::size_t server) { return std::uint32_t(server + 1); }

    StateIndex index(QueueState s) const { return StateIndex((s.length << cfg_.servers) | s.busy); }
    QueueState state(StateIndex s) const { return {std::size_t(s) >> cfg_.servers, s & std::uint32_t(num_actions() - 1)}; }

    struct Assignment {
        std::uint32_t busy = 0;     // busy flags after assignment
        std::size_t length = 0;     // queue length after assignment
        std::size_t assigned = 0;
    };
    Assignment assign(QueueState s, ActionIndex a) const;

    QueueState step(QueueState s, ActionIndex a, QueueLatent latent) const;
    double reward(QueueState s) const;

    std::vector<double> true_parameters() const;

    /// Exact row P(. | s, a) at `params`, sorted by next state.
    std::vector<std::pair<StateIndex, double>> transition_row(QueueState s, ActionIndex a,
                                                              std::span<const double> params) const;

    /// Samples one step; annotations cover exactly the parameters informative at (s, a).
    TransitionRecord sample_step(QueueState s, ActionIndex a, std::span<const double> params, Rng& rng) const;

    /// Recovers the latent bits from an observed transition. Throws ModelError
    /// for transitions of probability zero.
    ObservationList decode(QueueState s, ActionIndex a, QueueState s_next) const;

    /// U_0 = {l < B}; U_i = {server i busy after assignment}, with decode tables.
    InfoSets informative_sets() const;

    StructuralModel structural_model() const;
    FiniteMdp true_mdp() const;

private:
    QueueConfig cfg_;
};

std::pair<StructuralModel, FiniteMdp> build_queue(const QueueConfig& cfg);

/// Queue sampler at fixed parameters; rollouts restart from a uniformly random state.
class QueueSimulator final : public Simulator {
public:
    QueueSimulator(QueueModel model, std::vector<double> params);

    std::size_t num_states() const override { return model_.num_states(); }
    std::size_t num_actions() const override { return model_.num_actions(); }
    TransitionRecord sample(StateIndex s, ActionIndex a, Rng& rng) const override;
    StateIndex reset_state(Rng& rng) const override;
    bool terminal(StateIndex) const override { return false; }

    const QueueModel& model() const { return model_; }

private:
    QueueModel model_;
    std::vector<double> params_;
};

}  // namespace greybox
