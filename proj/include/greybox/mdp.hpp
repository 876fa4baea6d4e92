#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace greybox {

using StateIndex = std::uint32_t;
using ActionIndex = std::uint32_t;

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Closed interval of admissible rewards.
struct RewardRange {
    double lower = 0.0;
    double upper = 1.0;
};

/// Read-only view of one transition row P(. | s, a).
struct RowView {
    std::span<const StateIndex> next;
    std::span<const double> prob;

    std::size_t size() const { return next.size(); }
};

/**
 * Finite discounted MDP with deterministic rewards R(s, a) and sparse
 * transition rows. State-action pairs are flattened as z = s * |A| + a.
 *
 * The constructor checks shapes and index ranges only; stochasticity, reward
 * bounds and the discount are reported by validate_mdp().
 */
class FiniteMdp {
public:
    FiniteMdp(std::size_t num_states, std::size_t num_actions,
              std::vector<std::size_t> row_offsets, std::vector<StateIndex> next,
              std::vector<double> prob, std::vector<double> reward, double gamma,
              RewardRange reward_range);

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    std::size_t num_pairs() const { return num_states_ * num_actions_; }
    double gamma() const { return gamma_; }
    double horizon() const { return 1.0 / (1.0 - gamma_); }
    RewardRange reward_range() const { return reward_range_; }

    std::size_t pair(StateIndex s, ActionIndex a) const { return std::size_t(s) * num_actions_ + a; }
    double reward(StateIndex s, ActionIndex a) const { return reward_[pair(s, a)]; }
    double reward(std::size_t z) const { return reward_[z]; }
    std::span<const double> rewards() const { return reward_; }

    RowView row(std::size_t z) const;
    RowView row(StateIndex s, ActionIndex a) const { return row(pair(s, a)); }

    /// Probability of s_next from z; zero when s_next is outside the row's support.
    double probability(std::size_t z, StateIndex s_next) const;

    std::size_t num_entries() const { return next_.size(); }

private:
    std::size_t num_states_;
    std::size_t num_actions_;
    std::vector<std::size_t> row_offsets_;
    std::vector<StateIndex> next_;
    std::vector<double> prob_;
    std::vector<double> reward_;
    double gamma_;
    RewardRange reward_range_;
};

/// Incremental builder; rows must be appended in z order.
class MdpBuilder {
public:
    MdpBuilder(std::size_t num_states, std::size_t num_actions, double gamma, RewardRange range);

    /// Appends row z = (number of rows so far). Entries must have distinct next states.
    void add_row(double reward, std::span<const StateIndex> next, std::span<const double> prob);

    FiniteMdp build() &&;

private:
    std::size_t num_states_;
    std::size_t num_actions_;
    double gamma_;
    RewardRange range_;
    std::vector<std::size_t> offsets_{0};
    std::vector<StateIndex> next_;
    std::vector<double> prob_;
    std::vector<double> reward_;
};

/// Action values Q(s, a), dense, row-major by state.
class QTable {
public:
    QTable() = default;
    QTable(std::size_t num_states, std::size_t num_actions, double init = 0.0)
        : num_states_(num_states), num_actions_(num_actions), values_(num_states * num_actions, init) {}

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }

    double& operator()(StateIndex s, ActionIndex a) { return values_[std::size_t(s) * num_actions_ + a]; }
    double operator()(StateIndex s, ActionIndex a) const { return values_[std::size_t(s) * num_actions_ + a]; }
    double& operator[](std::size_t z) { return values_[z]; }
    double operator[](std::size_t z) const { return values_[z]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::span<const double> state_values(StateIndex s) const {
        return std::span<const double>(values_).subspan(std::size_t(s) * num_actions_, num_actions_);
    }

    /// max_a Q(s, a)
    double max_value(StateIndex s) const;

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<double> values_;
};

/// Deterministic stationary policy: one action per state.
struct PolicyVector {
    std::vector<ActionIndex> action;

    std::size_t size() const { return action.size(); }
    ActionIndex operator[](StateIndex s) const { return action[s]; }
    bool operator==(const PolicyVector&) const = default;
};

struct Violation {
    std::size_t pair;          // z, or npos for MDP-wide issues
    std::string what;
    double value;              // offending sum / entry / reward / gamma
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

inline constexpr double kRowSumTolerance = 1e-9;

ValidationReport validate_mdp(const FiniteMdp& mdp);

/// max over (s, a) of |q1 - q2|. Throws std::invalid_argument on shape mismatch.
double sup_norm_diff(const QTable& q1, const QTable& q2);

// Plain-text format:
//   finite-mdp 1
//   states <|S|>
//   actions <|A|>
//   gamma <gamma>
//   rewards <r_min> <r_max>
//   then one line per z = s*|A|+a:  <reward> <k> <s'_1> <p_1> ... <s'_k> <p_k>
void write_mdp(std::ostream& out, const FiniteMdp& mdp);
FiniteMdp read_mdp(std::istream& in);

}  // namespace greybox
