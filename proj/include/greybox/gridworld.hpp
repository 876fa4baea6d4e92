#pragma once

#include "greybox/mdp.hpp"
#include "greybox/simulator.hpp"
#include "greybox/structure.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace greybox {

enum class TyingMode { more_info, least_info, entrywise };

TyingMode parse_tying_mode(const std::string& name);
std::string to_string(TyingMode mode);

struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell&) const = default;
};

enum Direction : ActionIndex { up = 0, down = 1, left = 2, right = 3 };

struct GridConfig {
    int width = 10;
    int height = 7;
    std::vector<int> wind_strength{0, 0, 0, 1, 1, 1, 2, 2, 1, 0};
    std::vector<double> wind_prob = std::vector<double>(10, 0.5);
    double slip_prob = 0.4;
    Cell start{0, 3};
    Cell goal{7, 3};
    double gamma = 0.9;
    TyingMode tying = TyingMode::more_info;
};

/// Latent draws of one step; `direction` only matters when `slip` is set.
struct GridLatent {
    bool slip = false;
    Direction direction = up;
    bool wind = false;
};

/**
 * Stochastic windy gridworld. One step: with probability alpha the move
 * direction is uniform over the four directions (otherwise the chosen
 * action); the move is clipped at the border; then, with the origin
 * column's probability, the wind pushes the agent up by that column's
 * strength, clipped at the top. The goal absorbs with reward 0; every other
 * step costs 1.
 *
 * Native parameter layout (the finest one): beta_0 .. beta_{W-1}, alpha.
 * States are indexed x * height + y.
 */
class GridWorld {
public:
    explicit GridWorld(GridConfig cfg);

    const GridConfig& config() const { return cfg_; }
    std::size_t num_states() const { return std::size_t(cfg_.width * cfg_.height); }
    static constexpr std::size_t num_actions() { return 4; }

    StateIndex index(Cell c) const { return StateIndex(c.x * cfg_.height + c.y); }
    Cell cell(StateIndex s) const { return {int(s) / cfg_.height, int(s) % cfg_.height}; }
    bool is_goal(StateIndex s) const { return cell(s) == cfg_.goal; }

    Cell move(Cell c, Direction d) const;
    Cell step(Cell c, ActionIndex a, GridLatent latent) const;

    std::size_t num_native_params() const { return std::size_t(cfg_.width) + 1; }
    std::uint32_t alpha_param() const { return std::uint32_t(cfg_.width); }
    std::vector<double> native_parameters() const;

    /// Structural model under a parameter-tying mode (entrywise delegates to entrywise_spec).
    StructuralModel model(TyingMode mode) const;
    /// Ground-truth parameter vector in that mode's layout.
    std::vector<double> true_parameters(TyingMode mode) const;
    /// Parameter names in that mode's layout.
    std::vector<std::string> parameter_names(TyingMode mode) const;

    /// Exact row at native parameters, sorted by next state.
    std::vector<std::pair<StateIndex, double>> transition_row(StateIndex s, ActionIndex a,
                                                              std::span<const double> native) const;
    FiniteMdp true_mdp() const;

    /// One step from a non-goal state. Oracle mode annotates the slip bit and
    /// the origin column's wind bit (when that column has wind); strict mode
    /// keeps only bits decodable from (s, a, s'). Native layout. Throws
    /// std::logic_error from the goal.
    TransitionRecord sample_step(StateIndex s, ActionIndex a, Rng& rng, Extraction mode = Extraction::oracle) const;
    TransitionRecord apply(StateIndex s, ActionIndex a, GridLatent latent, Extraction mode = Extraction::oracle) const;

    /// Native (least-info) model, built once.
    const StructuralModel& native_model() const { return *native_; }

private:
    std::vector<std::vector<LatentOutcome>> latent_tables(const std::vector<int>& wind_param,
                                                          std::uint32_t alpha) const;
    std::vector<int> strength_groups() const;  // distinct nonzero strengths, ascending

    GridConfig cfg_;
    std::shared_ptr<const StructuralModel> native_;
};

std::pair<StructuralModel, FiniteMdp> build_gridworld(const GridConfig& cfg);

/// Gridworld sampler with oracle annotations; rollouts restart at the start cell.
class GridSimulator final : public Simulator {
public:
    explicit GridSimulator(GridWorld world) : world_(std::move(world)) {}

    std::size_t num_states() const override { return world_.num_states(); }
    std::size_t num_actions() const override { return GridWorld::num_actions(); }
    TransitionRecord sample(StateIndex s, ActionIndex a, Rng& rng) const override;
    StateIndex reset_state(Rng&) const override { return world_.index(world_.config().start); }
    bool terminal(StateIndex s) const override { return world_.is_goal(s); }

    const GridWorld& world() const { return world_; }

private:
    GridWorld world_;
};

}  // namespace greybox
