#pragma once

#include "greybox/mdp.hpp"

#include <boost/container/small_vector.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace greybox {

/// One unit of information about a structural parameter: a Bernoulli bit,
/// or the observed category index for a categorical block.
struct Observation {
    std::uint32_t param;
    std::uint32_t value;

    bool operator==(const Observation&) const = default;
};

using ObservationList = boost::container::small_vector<Observation, 8>;

/// One sampled transition (s, a, s') plus the simulator's latent draws,
/// expressed in the simulator's native parameter layout.
struct TransitionRecord {
    StateIndex s = 0;
    ActionIndex a = 0;
    StateIndex s_next = 0;
    ObservationList latent;
};

enum class ParameterKind { bernoulli, categorical };

struct ParameterInfo {
    std::string name;
    ParameterKind kind = ParameterKind::bernoulli;
    std::size_t arity = 1;  // slots in the flat parameter vector (category count for blocks)
    double lower = 0.0;
    double upper = 1.0;

    bool operator==(const ParameterInfo&) const = default;
};

/// One latent-event combination of a state-action pair: it leads to `next`
/// with probability weight * prod_{(p,b) in bits} (b ? mu_p : 1 - mu_p).
struct LatentOutcome {
    StateIndex next;
    double weight;
    ObservationList bits;
};

/// Informative sets U_i and, for strict sets, the per-(z, s') decode table.
struct InfoSets {
    std::vector<std::vector<std::size_t>> pairs;       // U_i, sorted pair indices
    std::vector<std::vector<ObservationList>> decode;  // [z][support index]; empty when not tabulated

    std::size_t size(std::size_t param) const { return pairs[param].size(); }
    bool contains(std::size_t param, std::size_t z) const;
};

enum class Extraction { oracle, strict };

/**
 * Grey-box transition model: known reward, discount and support, and a
 * reconstruction map from a flat parameter vector to every transition row.
 *
 * Bernoulli parameters occupy one slot of the flat vector; a categorical
 * block of arity K occupies K consecutive slots.
 */
class StructuralModel {
public:
    using RowMap = std::function<void(std::size_t z, std::span<const double> mu, std::span<double> row)>;

    struct Definition {
        std::size_t num_states = 0;
        std::size_t num_actions = 0;
        double gamma = 0.9;
        std::vector<double> reward;
        RewardRange reward_range;
        std::vector<ParameterInfo> params;
        std::vector<std::vector<StateIndex>> support;  // per z, sorted, structurally nonzero next states
        RowMap row_map;                                // writes probabilities aligned with support[z]
        std::vector<std::vector<LatentOutcome>> latent;  // optional latent-event generator
        std::optional<InfoSets> oracle_sets;  // default: pairs whose latent outcomes all draw the bit
        std::optional<InfoSets> strict_sets;  // default: compute_informative_sets()
        std::vector<int> native_map;          // simulator param -> own param (-1 drops); empty = identity
    };

    explicit StructuralModel(Definition def);

    std::size_t num_states() const { return def_.num_states; }
    std::size_t num_actions() const { return def_.num_actions; }
    std::size_t num_pairs() const { return def_.num_states * def_.num_actions; }
    double gamma() const { return def_.gamma; }
    std::span<const double> rewards() const { return def_.reward; }
    RewardRange reward_range() const { return def_.reward_range; }

    std::size_t num_params() const { return def_.params.size(); }
    const std::vector<ParameterInfo>& params() const { return def_.params; }
    std::size_t num_slots() const { return slot_offset_.back(); }
    std::size_t slot_offset(std::size_t param) const { return slot_offset_[param]; }

    std::span<const StateIndex> support(std::size_t z) const { return def_.support[z]; }
    /// Index of s_next within support(z), or nullopt if structurally zero.
    std::optional<std::size_t> support_index(std::size_t z, StateIndex s_next) const;

    bool has_latent() const { return !def_.latent.empty(); }
    std::span<const LatentOutcome> latent(std::size_t z) const { return def_.latent[z]; }

    const InfoSets& oracle_sets() const { return oracle_; }
    const InfoSets& strict_sets() const { return strict_; }
    const InfoSets& sets(Extraction mode) const { return mode == Extraction::oracle ? oracle_ : strict_; }

    /// Parameters whose value can change some transition probability.
    bool influential(std::size_t param) const { return influential_[param]; }
    /// Influential parameters with a non-empty informative set under `mode`.
    std::vector<std::size_t> active_params(Extraction mode) const;

    /// Zero-sample estimates: 0.5 per Bernoulli parameter, uniform per categorical block.
    std::vector<double> default_parameters() const;
    bool in_bounds(std::span<const double> mu) const;

    /// Fills `row` (aligned with support(z)) with f_z(mu).
    void row(std::size_t z, std::span<const double> mu, std::span<double> out) const;

    /// Strict decode of an observed transition. Throws ModelError when s_next
    /// is structurally impossible from z.
    const ObservationList& decode(std::size_t z, StateIndex s_next) const;

    /// Observations fed to the estimator for one record: simulator latents
    /// mapped to this model's layout (oracle), or the strict decode.
    ObservationList extract(const TransitionRecord& record, Extraction mode) const;

private:
    Definition def_;
    std::vector<std::size_t> slot_offset_;
    std::vector<bool> influential_;
    InfoSets oracle_;
    InfoSets strict_;
};

/// Strict informative sets from the latent-event tables: parameter p is
/// informative at z iff every latent outcome of z draws p and, grouping the
/// outcomes by next state, p's bit is constant within each group.
InfoSets compute_informative_sets(const StructuralModel& model);

/// Pairs whose every latent outcome draws the parameter's bit.
InfoSets latent_involvement_sets(const StructuralModel& model);

/// Reconstruction map shared by latent-table models: sums outcome probabilities per next state.
StructuralModel::RowMap latent_row_map(std::shared_ptr<const std::vector<std::vector<LatentOutcome>>> latent,
                                       std::shared_ptr<const std::vector<std::vector<StateIndex>>> support);

/// Support of every row (sorted next states with nonzero latent weight).
std::vector<std::vector<StateIndex>> latent_support(const std::vector<std::vector<LatentOutcome>>& latent);

/**
 * Per-parameter counts n_{k,i} and integer sums; categorical blocks keep one
 * count per category. Counts only ever grow.
 */
class EstimatorState {
public:
    EstimatorState() = default;
    explicit EstimatorState(std::vector<ParameterInfo> params);

    std::size_t num_params() const { return params_.size(); }
    const std::vector<ParameterInfo>& params() const { return params_; }
    std::uint64_t total_samples() const { return k_; }
    std::uint64_t count(std::size_t param) const { return counts_[param]; }
    /// Number of 1-bits for a Bernoulli parameter; count of category `slot` for a block.
    std::uint64_t sum(std::size_t param, std::size_t slot = 0) const { return sums_[offsets_[param] + slot]; }

    /// Adds one transition's worth of information and increments k.
    void record(std::span<const Observation> info);

    bool operator==(const EstimatorState&) const = default;

private:
    friend EstimatorState read_estimator(std::istream&, std::vector<ParameterInfo>);

    std::vector<ParameterInfo> params_;
    std::vector<std::size_t> offsets_;
    std::vector<std::uint64_t> counts_;
    std::vector<std::uint64_t> sums_;
    std::uint64_t k_ = 0;
};

inline EstimatorState& record_transition(EstimatorState& est, std::span<const Observation> info) {
    est.record(info);
    return est;
}
inline EstimatorState& record_transition(EstimatorState& est, const ObservationList& info) {
    est.record({info.data(), info.size()});
    return est;
}

/// mu_hat_i = sum_i / n_i (defaults[i] when n_i = 0), clamped to the parameter bounds.
std::vector<double> estimates(const EstimatorState& est, std::span<const double> defaults);

/// n_k = min over `active` of n_{k,i}. Throws std::invalid_argument if active is empty.
std::uint64_t min_info_count(const EstimatorState& est, std::span<const std::size_t> active);

/// FiniteMdp with rows f_z(mu). Throws ModelError if mu is outside the bounds.
FiniteMdp reconstruct(const StructuralModel& model, std::span<const double> mu);

/// Entry-wise baseline: one categorical block per state-action row. The
/// estimate of a row is its empirical next-state distribution; unvisited
/// rows fall back to uniform over the support.
StructuralModel entrywise_spec(std::size_t num_states, std::size_t num_actions,
                               std::vector<std::vector<StateIndex>> support, std::vector<double> reward,
                               double gamma, RewardRange reward_range);
StructuralModel entrywise_spec(const StructuralModel& base);

// Snapshot format:
//   estimator 1
//   k <k>
//   params <m>
//   <i> <count> <sum_0> ... <sum_{arity-1}>
void write_estimator(std::ostream& out, const EstimatorState& est);
EstimatorState read_estimator(std::istream& in, std::vector<ParameterInfo> params);

}  // namespace greybox
