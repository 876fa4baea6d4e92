#include "greybox/structure.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <stdexcept>

namespace greybox {

bool InfoSets::contains(std::size_t param, std::size_t z) const {
    const auto& u = pairs[param];
    return std::binary_search(u.begin(), u.end(), z);
}

namespace {

double bit_probability(std::span<const double> mu, const ObservationList& bits) {
    double p = 1.0;
    for (const Observation& o : bits) p *= o.value ? mu[o.param] : 1.0 - mu[o.param];
    return p;
}

std::optional<std::uint32_t> bit_of(const ObservationList& bits, std::uint32_t param) {
    for (const Observation& o : bits) {
        if (o.param == param) return o.value;
    }
    return std::nullopt;
}

}  // namespace

std::vector<std::vector<StateIndex>> latent_support(const std::vector<std::vector<LatentOutcome>>& latent) {
    std::vector<std::vector<StateIndex>> support(latent.size());
    for (std::size_t z = 0; z < latent.size(); ++z) {
        for (const LatentOutcome& o : latent[z]) {
            if (o.weight > 0.0) support[z].push_back(o.next);
        }
        std::sort(support[z].begin(), support[z].end());
        support[z].erase(std::unique(support[z].begin(), support[z].end()), support[z].end());
    }
    return support;
}

StructuralModel::RowMap latent_row_map(std::shared_ptr<const std::vector<std::vector<LatentOutcome>>> latent,
                                       std::shared_ptr<const std::vector<std::vector<StateIndex>>> support) {
    return [latent = std::move(latent), support = std::move(support)](std::size_t z, std::span<const double> mu,
                                                                       std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        const auto& sup = (*support)[z];
        for (const LatentOutcome& o : (*latent)[z]) {
            if (!(o.weight > 0.0)) continue;
            const auto j = std::size_t(std::lower_bound(sup.begin(), sup.end(), o.next) - sup.begin());
            out[j] += o.weight * bit_probability(mu, o.bits);
        }
    };
}

StructuralModel::StructuralModel(Definition def) : def_(std::move(def)) {
    const std::size_t n = num_pairs();
    if (n == 0) throw ModelError("structural model needs states and actions");
    if (def_.reward.size() != n) throw ModelError("structural model: reward size mismatch");
    if (def_.params.empty()) throw ModelError("structural model needs at least one parameter");
    if (!def_.latent.empty() && def_.latent.size() != n) throw ModelError("latent table size mismatch");
    if (def_.support.empty() && !def_.latent.empty()) def_.support = latent_support(def_.latent);
    if (def_.support.size() != n) throw ModelError("support table size mismatch");
    for (std::size_t z = 0; z < n; ++z) {
        auto& sup = def_.support[z];
        if (sup.empty()) throw ModelError("empty support at pair " + std::to_string(z));
        if (!std::is_sorted(sup.begin(), sup.end()) || std::adjacent_find(sup.begin(), sup.end()) != sup.end())
            throw ModelError("support must be sorted and duplicate-free at pair " + std::to_string(z));
        if (sup.back() >= def_.num_states) throw ModelError("support index out of range");
    }
    if (!def_.row_map) {
        if (def_.latent.empty()) throw ModelError("structural model needs a row map or latent tables");
        def_.row_map = latent_row_map(std::make_shared<const std::vector<std::vector<LatentOutcome>>>(def_.latent),
                                      std::make_shared<const std::vector<std::vector<StateIndex>>>(def_.support));
    }

    slot_offset_.assign(1, 0);
    for (const auto& p : def_.params) {
        if (p.kind == ParameterKind::bernoulli && p.arity != 1)
            throw ModelError("Bernoulli parameter '" + p.name + "' must have arity 1");
        if (p.arity == 0) throw ModelError("parameter '" + p.name + "' has zero arity");
        if (!(p.lower <= p.upper)) throw ModelError("parameter '" + p.name + "' has an empty interval");
        slot_offset_.push_back(slot_offset_.back() + p.arity);
    }

    influential_.assign(num_params(), false);
    for (std::size_t i = 0; i < num_params(); ++i) {
        if (def_.params[i].kind == ParameterKind::categorical) influential_[i] = def_.params[i].arity > 1;
    }
    // latent bits index the flat vector directly, which needs an all-Bernoulli layout
    if (has_latent() && num_slots() != num_params()) throw ModelError("latent tables require Bernoulli parameters");
    for (const auto& outcomes : def_.latent) {
        for (const LatentOutcome& o : outcomes) {
            for (const Observation& b : o.bits) {
                if (b.param >= num_params()) throw ModelError("latent bit references unknown parameter");
                influential_[b.param] = true;
            }
        }
    }

    if (def_.oracle_sets) {
        oracle_ = std::move(*def_.oracle_sets);
        def_.oracle_sets.reset();
    } else if (has_latent()) {
        oracle_ = latent_involvement_sets(*this);
    } else {
        throw ModelError("model without latent tables must supply oracle informative sets");
    }
    if (def_.strict_sets) {
        strict_ = std::move(*def_.strict_sets);
        def_.strict_sets.reset();
    } else if (has_latent()) {
        strict_ = compute_informative_sets(*this);
    } else {
        throw ModelError("model without latent tables must supply strict informative sets");
    }
    if (oracle_.pairs.size() != num_params() || strict_.pairs.size() != num_params())
        throw ModelError("informative sets must have one entry per parameter");
    if (strict_.decode.size() != n) throw ModelError("strict decode table size mismatch");

    // Every parameter that shapes P must be observable somewhere.
    for (std::size_t i = 0; i < num_params(); ++i) {
        if (influential_[i] && oracle_.pairs[i].empty())
            throw ModelError("parameter '" + def_.params[i].name + "' has an empty informative set");
    }
    if (!def_.native_map.empty()) {
        for (int m : def_.native_map) {
            if (m >= int(num_params())) throw ModelError("native parameter map out of range");
        }
    }
}

std::optional<std::size_t> StructuralModel::support_index(std::size_t z, StateIndex s_next) const {
    const auto& sup = def_.support[z];
    const auto it = std::lower_bound(sup.begin(), sup.end(), s_next);
    if (it == sup.end() || *it != s_next) return std::nullopt;
    return std::size_t(it - sup.begin());
}

std::vector<std::size_t> StructuralModel::active_params(Extraction mode) const {
    const InfoSets& s = sets(mode);
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < num_params(); ++i) {
        if (influential_[i] && !s.pairs[i].empty()) active.push_back(i);
    }
    return active;
}

std::vector<double> StructuralModel::default_parameters() const {
    std::vector<double> mu(num_slots());
    for (std::size_t i = 0; i < num_params(); ++i) {
        const auto& p = def_.params[i];
        const double v = p.kind == ParameterKind::bernoulli ? 0.5 : 1.0 / double(p.arity);
        std::fill_n(mu.begin() + std::ptrdiff_t(slot_offset_[i]), p.arity, std::clamp(v, p.lower, p.upper));
    }
    return mu;
}

bool StructuralModel::in_bounds(std::span<const double> mu) const {
    if (mu.size() != num_slots()) return false;
    for (std::size_t i = 0; i < num_params(); ++i) {
        const auto& p = def_.params[i];
        for (std::size_t j = 0; j < p.arity; ++j) {
            const double v = mu[slot_offset_[i] + j];
            if (!(v >= p.lower && v <= p.upper)) return false;
        }
    }
    return true;
}

void StructuralModel::row(std::size_t z, std::span<const double> mu, std::span<double> out) const {
    def_.row_map(z, mu, out.subspan(0, def_.support[z].size()));
}

const ObservationList& StructuralModel::decode(std::size_t z, StateIndex s_next) const {
    const auto j = support_index(z, s_next);
    if (!j) throw ModelError("impossible transition: pair " + std::to_string(z) + " -> state " + std::to_string(s_next));
    return strict_.decode[z][*j];
}

ObservationList StructuralModel::extract(const TransitionRecord& record, Extraction mode) const {
    const std::size_t z = std::size_t(record.s) * num_actions() + record.a;
    if (mode == Extraction::strict || !has_latent()) return decode(z, record.s_next);
    if (def_.native_map.empty()) return record.latent;
    ObservationList out;
    for (const Observation& o : record.latent) {
        const int mapped = def_.native_map.at(o.param);
        if (mapped >= 0) out.push_back({std::uint32_t(mapped), o.value});
    }
    return out;
}

InfoSets latent_involvement_sets(const StructuralModel& model) {
    InfoSets sets;
    sets.pairs.resize(model.num_params());
    for (std::size_t z = 0; z < model.num_pairs(); ++z) {
        const auto outcomes = model.latent(z);
        if (outcomes.empty()) continue;
        for (const Observation& b : outcomes.front().bits) {
            const bool everywhere = std::all_of(outcomes.begin(), outcomes.end(), [&](const LatentOutcome& o) {
                return bit_of(o.bits, b.param).has_value();
            });
            if (everywhere) sets.pairs[b.param].push_back(z);
        }
    }
    for (auto& u : sets.pairs) {
        std::sort(u.begin(), u.end());
        u.erase(std::unique(u.begin(), u.end()), u.end());
    }
    return sets;
}

InfoSets compute_informative_sets(const StructuralModel& model) {
    if (!model.has_latent()) throw ModelError("compute_informative_sets needs latent-event tables");
    InfoSets sets;
    sets.pairs.resize(model.num_params());
    sets.decode.resize(model.num_pairs());
    for (std::size_t z = 0; z < model.num_pairs(); ++z) {
        const auto outcomes = model.latent(z);
        const auto sup = model.support(z);
        sets.decode[z].resize(sup.size());
        if (outcomes.empty()) continue;

        for (const Observation& candidate : outcomes.front().bits) {
            const std::uint32_t p = candidate.param;
            // per support entry: the bit seen so far (-1 = none yet)
            std::vector<int> group_bit(sup.size(), -1);
            bool decodable = true;
            for (const LatentOutcome& o : outcomes) {
                if (!(o.weight > 0.0)) continue;
                const auto bit = bit_of(o.bits, p);
                if (!bit) {
                    decodable = false;
                    break;
                }
                const auto j = *model.support_index(z, o.next);
                if (group_bit[j] < 0) {
                    group_bit[j] = int(*bit);
                } else if (group_bit[j] != int(*bit)) {
                    decodable = false;
                    break;
                }
            }
            if (!decodable) continue;
            sets.pairs[p].push_back(z);
            for (std::size_t j = 0; j < sup.size(); ++j) {
                if (group_bit[j] >= 0) sets.decode[z][j].push_back({p, std::uint32_t(group_bit[j])});
            }
        }
        for (auto& list : sets.decode[z]) {
            std::sort(list.begin(), list.end(), [](const Observation& a, const Observation& b) { return a.param < b.param; });
        }
    }
    return sets;
}

EstimatorState::EstimatorState(std::vector<ParameterInfo> params) : params_(std::move(params)) {
    offsets_.assign(1, 0);
    for (const auto& p : params_) offsets_.push_back(offsets_.back() + p.arity);
    counts_.assign(params_.size(), 0);
    sums_.assign(offsets_.back(), 0);
}

void EstimatorState::record(std::span<const Observation> info) {
    for (const Observation& o : info) {
        if (o.param >= params_.size())
            throw std::out_of_range("record_transition: parameter index " + std::to_string(o.param) + " out of range");
        const auto& p = params_[o.param];
        if (p.kind == ParameterKind::bernoulli) {
            if (o.value > 1) throw std::invalid_argument("record_transition: Bernoulli observation must be 0 or 1");
            sums_[offsets_[o.param]] += o.value;
        } else {
            if (o.value >= p.arity) throw std::invalid_argument("record_transition: category index out of range");
            sums_[offsets_[o.param] + o.value] += 1;
        }
        counts_[o.param] += 1;
    }
    k_ += 1;
}

std::vector<double> estimates(const EstimatorState& est, std::span<const double> defaults) {
    const auto& params = est.params();
    std::vector<double> mu(defaults.begin(), defaults.end());
    std::size_t offset = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        const std::uint64_t n = est.count(i);
        for (std::size_t j = 0; j < p.arity; ++j) {
            double v = mu.at(offset + j);
            if (n > 0) {
                v = p.kind == ParameterKind::bernoulli ? double(est.sum(i)) / double(n)
                                                       : double(est.sum(i, j)) / double(n);
            }
            mu[offset + j] = std::clamp(v, p.lower, p.upper);
        }
        offset += p.arity;
    }
    if (offset != mu.size()) throw std::invalid_argument("estimates: defaults do not match the parameter layout");
    return mu;
}

std::uint64_t min_info_count(const EstimatorState& est, std::span<const std::size_t> active) {
    if (active.empty()) throw std::invalid_argument("min_info_count: empty active set");
    std::uint64_t n = std::numeric_limits<std::uint64_t>::max();
    for (std::size_t i : active) n = std::min(n, est.count(i));
    return n;
}

FiniteMdp reconstruct(const StructuralModel& model, std::span<const double> mu) {
    if (!model.in_bounds(mu)) throw ModelError("reconstruct: parameter vector outside its bounds");
    MdpBuilder builder(model.num_states(), model.num_actions(), model.gamma(), model.reward_range());
    std::vector<double> row;
    for (std::size_t z = 0; z < model.num_pairs(); ++z) {
        const auto sup = model.support(z);
        row.assign(sup.size(), 0.0);
        model.row(z, mu, row);
        builder.add_row(model.rewards()[z], sup, row);
    }
    return std::move(builder).build();
}

StructuralModel entrywise_spec(std::size_t num_states, std::size_t num_actions,
                               std::vector<std::vector<StateIndex>> support, std::vector<double> reward,
                               double gamma, RewardRange reward_range) {
    const std::size_t n = num_states * num_actions;
    if (support.size() != n) throw ModelError("entrywise_spec: support size mismatch");

    StructuralModel::Definition def;
    def.num_states = num_states;
    def.num_actions = num_actions;
    def.gamma = gamma;
    def.reward = std::move(reward);
    def.reward_range = reward_range;

    InfoSets sets;
    sets.pairs.resize(n);
    sets.decode.resize(n);
    std::vector<std::size_t> offsets(n + 1, 0);
    def.params.reserve(n);
    for (std::size_t z = 0; z < n; ++z) {
        if (support[z].empty()) throw ModelError("entrywise_spec: empty support row");
        const std::size_t k = support[z].size();
        def.params.push_back({"row" + std::to_string(z), ParameterKind::categorical, k, 0.0, 1.0});
        offsets[z + 1] = offsets[z] + k;
        sets.pairs[z] = {z};
        sets.decode[z].resize(k);
        for (std::size_t j = 0; j < k; ++j) sets.decode[z][j].push_back({std::uint32_t(z), std::uint32_t(j)});
    }
    def.support = std::move(support);
    def.row_map = [offsets = std::move(offsets)](std::size_t z, std::span<const double> mu, std::span<double> out) {
        std::copy_n(mu.begin() + std::ptrdiff_t(offsets[z]), out.size(), out.begin());
    };
    def.oracle_sets = sets;
    def.strict_sets = std::move(sets);
    return StructuralModel(std::move(def));
}

StructuralModel entrywise_spec(const StructuralModel& base) {
    std::vector<std::vector<StateIndex>> support(base.num_pairs());
    for (std::size_t z = 0; z < base.num_pairs(); ++z) {
        const auto s = base.support(z);
        support[z].assign(s.begin(), s.end());
    }
    return entrywise_spec(base.num_states(), base.num_actions(), std::move(support),
                          std::vector<double>(base.rewards().begin(), base.rewards().end()), base.gamma(),
                          base.reward_range());
}

void write_estimator(std::ostream& out, const EstimatorState& est) {
    out << "estimator 1\n";
    out << "k " << est.total_samples() << "\n";
    out << "params " << est.num_params() << "\n";
    for (std::size_t i = 0; i < est.num_params(); ++i) {
        out << i << " " << est.count(i);
        for (std::size_t j = 0; j < est.params()[i].arity; ++j) out << " " << est.sum(i, j);
        out << "\n";
    }
}

EstimatorState read_estimator(std::istream& in, std::vector<ParameterInfo> params) {
    std::string word;
    int version = 0;
    if (!(in >> word >> version) || word != "estimator" || version != 1)
        throw ModelError("malformed estimator snapshot header");
    EstimatorState est(std::move(params));
    std::size_t m = 0;
    if (!(in >> word >> est.k_) || word != "k") throw ModelError("malformed estimator snapshot: k");
    if (!(in >> word >> m) || word != "params") throw ModelError("malformed estimator snapshot: params");
    if (m != est.num_params()) throw ModelError("estimator snapshot has a different parameter count");
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t index = 0;
        if (!(in >> index >> est.counts_[i]) || index != i)
            throw ModelError("malformed estimator snapshot: parameter " + std::to_string(i));
        std::uint64_t total = 0;
        for (std::size_t j = 0; j < est.params_[i].arity; ++j) {
            if (!(in >> est.sums_[est.offsets_[i] + j]))
                throw ModelError("malformed estimator snapshot: parameter " + std::to_string(i));
            total += est.sums_[est.offsets_[i] + j];
        }
        const bool categorical = est.params_[i].kind == ParameterKind::categorical;
        if (categorical ? total != est.counts_[i] : total > est.counts_[i])
            throw ModelError("estimator snapshot: sums inconsistent with count for parameter " + std::to_string(i));
    }
    return est;
}

}  // namespace greybox
