#include "greybox/queue.hpp"

#include <algorithm>
#include <bit>
#include <memory>
#include <stdexcept>

namespace greybox {

namespace {

bool in_unit(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

QueueModel::QueueModel(QueueConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.buffer < 1) throw std::invalid_argument("buffer: must be a positive integer");
    if (cfg_.servers < 1 || cfg_.servers > 12) throw std::invalid_argument("servers: must be in 1..12");
    if (!in_unit(cfg_.injection_rate)) throw std::invalid_argument("injection_rate: must lie in [0,1]");
    if (cfg_.exit_probabilities.size() != cfg_.servers)
        throw std::invalid_argument("exit_probabilities: need one value per server");
    for (double p : cfg_.exit_probabilities) {
        if (!in_unit(p)) throw std::invalid_argument("exit_probabilities: values must lie in [0,1]");
    }
    if (!(cfg_.gamma > 0.0 && cfg_.gamma < 1.0)) throw std::invalid_argument("gamma: must lie in (0,1)");
}

QueueModel::Assignment QueueModel::assign(QueueState s, ActionIndex a) const {
    Assignment out{s.busy, s.length, 0};
    for (std::size_t i = 0; i < cfg_.servers && out.length > 0; ++i) {
        const std::uint32_t bit = 1u << i;
        if ((a & bit) && !(out.busy & bit)) {
            out.busy |= bit;
            --out.length;
            ++out.assigned;
        }
    }
    return out;
}

QueueState QueueModel::step(QueueState s, ActionIndex a, QueueLatent latent) const {
    const Assignment as = assign(s, a);
    QueueState next;
    next.busy = as.busy & ~latent.departures;
    next.length = as.length + ((latent.arrival && s.length < cfg_.buffer) ? 1 : 0);
    return next;
}

double QueueModel::reward(QueueState s) const { return -double(s.length + std::size_t(std::popcount(s.busy))); }

std::vector<double> QueueModel::true_parameters() const {
    std::vector<double> mu{cfg_.injection_rate};
    mu.insert(mu.end(), cfg_.exit_probabilities.begin(), cfg_.exit_probabilities.end());
    return mu;
}

std::vector<std::pair<StateIndex, double>> QueueModel::transition_row(QueueState s, ActionIndex a,
                                                                      std::span<const double> params) const {
    const Assignment as = assign(s, a);
    const bool can_arrive = s.length < cfg_.buffer;
    const double inject = params[arrival_param];

    // Each next state corresponds to exactly one (arrival, departure subset) pair.
    std::vector<std::pair<StateIndex, double>> row;
    const std::uint32_t busy = as.busy;
    for (int arrival = 0; arrival <= (can_arrive ? 1 : 0); ++arrival) {
        const double p_arrival = can_arrive ? (arrival ? inject : 1.0 - inject) : 1.0;
        // iterate over all subsets of the busy set
        std::uint32_t departed = 0;
        while (true) {
            double p = p_arrival;
            for (std::size_t i = 0; i < cfg_.servers; ++i) {
                const std::uint32_t bit = 1u << i;
                if (!(busy & bit)) continue;
                const double mu = params[server_param(i)];
                p *= (departed & bit) ? mu : 1.0 - mu;
            }
            row.emplace_back(index({as.length + std::size_t(arrival), busy & ~departed}), p);
            if (departed == busy) break;
            departed = (departed - busy) & busy;
        }
    }
    std::sort(row.begin(), row.end());
    return row;
}

TransitionRecord QueueModel::sample_step(QueueState s, ActionIndex a, std::span<const double> params,
                                         Rng& rng) const {
    const Assignment as = assign(s, a);
    TransitionRecord rec;
    rec.s = index(s);
    rec.a = a;
    QueueLatent latent;
    if (s.length < cfg_.buffer) {
        latent.arrival = rng.bernoulli(params[arrival_param]);
        rec.latent.push_back({arrival_param, latent.arrival ? 1u : 0u});
    }
    for (std::size_t i = 0; i < cfg_.servers; ++i) {
        const std::uint32_t bit = 1u << i;
        if (!(as.busy & bit)) continue;
        const bool departs = rng.bernoulli(params[server_param(i)]);
        if (departs) latent.departures |= bit;
        rec.latent.push_back({server_param(i), departs ? 1u : 0u});
    }
    rec.s_next = index(step(s, a, latent));
    return rec;
}

ObservationList QueueModel::decode(QueueState s, ActionIndex a, QueueState s_next) const {
    const Assignment as = assign(s, a);
    const auto impossible = [] { return ModelError("decode_queue: transition has probability zero"); };
    // servers idle after assignment cannot become busy, and the queue cannot shrink further
    if ((s_next.busy & ~as.busy) != 0) throw impossible();
    ObservationList out;
    if (s.length < cfg_.buffer) {
        if (s_next.length < as.length || s_next.length > as.length + 1) throw impossible();
        out.push_back({arrival_param, std::uint32_t(s_next.length - as.length)});
    } else if (s_next.length != as.length) {
        throw impossible();
    }
    for (std::size_t i = 0; i < cfg_.servers; ++i) {
        const std::uint32_t bit = 1u << i;
        if (as.busy & bit) out.push_back({server_param(i), (s_next.busy & bit) ? 0u : 1u});
    }
    return out;
}

InfoSets QueueModel::informative_sets() const {
    InfoSets sets;
    sets.pairs.resize(num_params());
    sets.decode.resize(num_states() * num_actions());
    const std::vector<double> half(num_params(), 0.5);
    for (StateIndex si = 0; si < num_states(); ++si) {
        const QueueState s = state(si);
        for (ActionIndex a = 0; a < num_actions(); ++a) {
            const std::size_t z = std::size_t(si) * num_actions() + a;
            const Assignment as = assign(s, a);
            if (s.length < cfg_.buffer) sets.pairs[arrival_param].push_back(z);
            for (std::size_t i = 0; i < cfg_.servers; ++i) {
                if (as.busy & (1u << i)) sets.pairs[server_param(i)].push_back(z);
            }
            for (const auto& [next, p] : transition_row(s, a, half)) sets.decode[z].push_back(decode(s, a, state(next)));
        }
    }
    return sets;
}

StructuralModel QueueModel::structural_model() const {
    StructuralModel::Definition def;
    def.num_states = num_states();
    def.num_actions = num_actions();
    def.gamma = cfg_.gamma;
    def.reward_range = {-double(cfg_.buffer + cfg_.servers), 0.0};
    for (std::size_t i = 0; i < num_params(); ++i)
        def.params.push_back({i == 0 ? "injection_rate" : "exit_probability_" + std::to_string(i)});

    const std::vector<double> half(num_params(), 0.5);
    def.support.resize(num_states() * num_actions());
    def.latent.resize(num_states() * num_actions());
    def.reward.resize(num_states() * num_actions());
    for (StateIndex si = 0; si < num_states(); ++si) {
        const QueueState s = state(si);
        for (ActionIndex a = 0; a < num_actions(); ++a) {
            const std::size_t z = std::size_t(si) * num_actions() + a;
            def.reward[z] = reward(s);
            for (const auto& [next, p] : transition_row(s, a, half)) {
                def.support[z].push_back(next);
                LatentOutcome outcome{next, 1.0, decode(s, a, state(next))};
                def.latent[z].push_back(std::move(outcome));
            }
        }
    }

    auto self = std::make_shared<const QueueModel>(*this);
    def.row_map = [self](std::size_t z, std::span<const double> mu, std::span<double> out) {
        const auto A = self->num_actions();
        const auto row = self->transition_row(self->state(StateIndex(z / A)), ActionIndex(z % A), mu);
        for (std::size_t j = 0; j < row.size(); ++j) out[j] = row[j].second;
    };
    def.oracle_sets = informative_sets();
    def.strict_sets = def.oracle_sets;
    return StructuralModel(std::move(def));
}

FiniteMdp QueueModel::true_mdp() const {
    MdpBuilder builder(num_states(), num_actions(), cfg_.gamma, {-double(cfg_.buffer + cfg_.servers), 0.0});
    const std::vector<double> mu = true_parameters();
    std::vector<StateIndex> next;
    std::vector<double> prob;
    for (StateIndex si = 0; si < num_states(); ++si) {
        const QueueState s = state(si);
        for (ActionIndex a = 0; a < num_actions(); ++a) {
            next.clear();
            prob.clear();
            for (const auto& [n, p] : transition_row(s, a, mu)) {
                next.push_back(n);
                prob.push_back(p);
            }
            builder.add_row(reward(s), next, prob);
        }
    }
    return std::move(builder).build();
}

std::pair<StructuralModel, FiniteMdp> build_queue(const QueueConfig& cfg) {
    const QueueModel model(cfg);
    return {model.structural_model(), model.true_mdp()};
}

QueueSimulator::QueueSimulator(QueueModel model, std::vector<double> params)
    : model_(std::move(model)), params_(std::move(params)) {
    if (params_.size() != model_.num_params()) throw std::invalid_argument("queue simulator: parameter count");
}

TransitionRecord QueueSimulator::sample(StateIndex s, ActionIndex a, Rng& rng) const {
    return model_.sample_step(model_.state(s), a, params_, rng);
}

StateIndex QueueSimulator::reset_state(Rng& rng) const { return StateIndex(rng.index(model_.num_states())); }

}  // namespace greybox
