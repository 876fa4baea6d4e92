#include "greybox/gridworld.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace greybox {

TyingMode parse_tying_mode(const std::string& name) {
    if (name == "more-info") return TyingMode::more_info;
    if (name == "least-info") return TyingMode::least_info;
    if (name == "entrywise") return TyingMode::entrywise;
    throw std::invalid_argument("tying_mode: expected more-info, least-info or entrywise, got '" + name + "'");
}

std::string to_string(TyingMode mode) {
    switch (mode) {
        case TyingMode::more_info: return "more-info";
        case TyingMode::least_info: return "least-info";
        case TyingMode::entrywise: return "entrywise";
    }
    return "?";
}

namespace {

bool inside(const GridConfig& cfg, Cell c) { return c.x >= 0 && c.x < cfg.width && c.y >= 0 && c.y < cfg.height; }

constexpr int dx[4] = {0, 0, -1, 1};
constexpr int dy[4] = {1, -1, 0, 0};

}  // namespace

GridWorld::GridWorld(GridConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.width < 1) throw std::invalid_argument("width: must be positive");
    if (cfg_.height < 1) throw std::invalid_argument("height: must be positive");
    if (cfg_.wind_strength.size() != std::size_t(cfg_.width))
        throw std::invalid_argument("wind_strengths: need one value per column");
    if (cfg_.wind_prob.size() != std::size_t(cfg_.width))
        throw std::invalid_argument("wind_probs: need one value per column");
    for (int s : cfg_.wind_strength) {
        if (s < 0) throw std::invalid_argument("wind_strengths: must be nonnegative");
    }
    for (double p : cfg_.wind_prob) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("wind_probs: values must lie in [0,1]");
    }
    if (!(cfg_.slip_prob >= 0.0 && cfg_.slip_prob <= 1.0)) throw std::invalid_argument("slip_prob: must lie in [0,1]");
    if (!inside(cfg_, cfg_.start)) throw std::invalid_argument("start: outside the grid");
    if (!inside(cfg_, cfg_.goal)) throw std::invalid_argument("goal: outside the grid");
    if (cfg_.start == cfg_.goal) throw std::invalid_argument("start: must differ from goal");
    if (!(cfg_.gamma > 0.0 && cfg_.gamma < 1.0)) throw std::invalid_argument("gamma: must lie in (0,1)");

    std::vector<int> wind_param(std::size_t(cfg_.width));
    for (int x = 0; x < cfg_.width; ++x) wind_param[std::size_t(x)] = cfg_.wind_strength[std::size_t(x)] > 0 ? x : -1;

    StructuralModel::Definition def;
    def.num_states = num_states();
    def.num_actions = num_actions();
    def.gamma = cfg_.gamma;
    def.reward_range = {-1.0, 0.0};
    for (int x = 0; x < cfg_.width; ++x) def.params.push_back({"wind_prob_" + std::to_string(x)});
    def.params.push_back({"slip_prob"});
    def.latent = latent_tables(wind_param, alpha_param());
    def.reward.resize(num_states() * num_actions());
    for (StateIndex s = 0; s < num_states(); ++s) {
        for (ActionIndex a = 0; a < num_actions(); ++a) def.reward[s * num_actions() + a] = is_goal(s) ? 0.0 : -1.0;
    }
    native_ = std::make_shared<const StructuralModel>(std::move(def));
}

Cell GridWorld::move(Cell c, Direction d) const {
    Cell n{c.x + dx[d], c.y + dy[d]};
    n.x = std::clamp(n.x, 0, cfg_.width - 1);
    n.y = std::clamp(n.y, 0, cfg_.height - 1);
    return n;
}

Cell GridWorld::step(Cell c, ActionIndex a, GridLatent latent) const {
    if (c == cfg_.goal) return c;
    Cell n = move(c, latent.slip ? latent.direction : Direction(a));
    if (latent.wind) n.y = std::min(n.y + cfg_.wind_strength[std::size_t(c.x)], cfg_.height - 1);
    return n;
}

std::vector<double> GridWorld::native_parameters() const {
    std::vector<double> mu(cfg_.wind_prob.begin(), cfg_.wind_prob.end());
    mu.push_back(cfg_.slip_prob);
    return mu;
}

std::vector<int> GridWorld::strength_groups() const {
    std::vector<int> groups;
    for (int s : cfg_.wind_strength) {
        if (s > 0) groups.push_back(s);
    }
    std::sort(groups.begin(), groups.end());
    groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
    return groups;
}

std::vector<std::vector<LatentOutcome>> GridWorld::latent_tables(const std::vector<int>& wind_param,
                                                                 std::uint32_t alpha) const {
    std::vector<std::vector<LatentOutcome>> tables(num_states() * num_actions());
    for (StateIndex s = 0; s < num_states(); ++s) {
        const Cell c = cell(s);
        for (ActionIndex a = 0; a < num_actions(); ++a) {
            auto& table = tables[s * num_actions() + a];
            if (is_goal(s)) {
                table.push_back({s, 1.0, {}});
                continue;
            }
            const int wp = wind_param[std::size_t(c.x)];
            for (int slip = 0; slip <= 1; ++slip) {
                for (ActionIndex d = 0; d < 4; ++d) {
                    if (!slip && d != a) continue;
                    const double weight = slip ? 0.25 : 1.0;
                    for (int wind = 0; wind <= (wp >= 0 ? 1 : 0); ++wind) {
                        const GridLatent latent{slip == 1, Direction(d), wind == 1};
                        LatentOutcome o{index(step(c, a, latent)), weight, {}};
                        if (wp >= 0) o.bits.push_back({std::uint32_t(wp), std::uint32_t(wind)});
                        o.bits.push_back({alpha, std::uint32_t(slip)});
                        std::sort(o.bits.begin(), o.bits.end(),
                                  [](const Observation& l, const Observation& r) { return l.param < r.param; });
                        table.push_back(std::move(o));
                    }
                }
            }
        }
    }
    return tables;
}

std::vector<std::string> GridWorld::parameter_names(TyingMode mode) const {
    std::vector<std::string> names;
    switch (mode) {
        case TyingMode::least_info:
            for (const auto& p : native_->params()) names.push_back(p.name);
            break;
        case TyingMode::more_info:
            for (int g : strength_groups()) names.push_back("wind_prob_strength_" + std::to_string(g));
            names.push_back("slip_prob");
            break;
        case TyingMode::entrywise:
            for (std::size_t z = 0; z < num_states() * num_actions(); ++z) names.push_back("row" + std::to_string(z));
            break;
    }
    return names;
}

StructuralModel GridWorld::model(TyingMode mode) const {
    switch (mode) {
        case TyingMode::least_info: return *native_;
        case TyingMode::entrywise: return entrywise_spec(*native_);
        case TyingMode::more_info: break;
    }
    const std::vector<int> groups = strength_groups();
    std::vector<int> wind_param(std::size_t(cfg_.width), -1);
    std::vector<int> native_map(num_native_params(), -1);
    for (int x = 0; x < cfg_.width; ++x) {
        const int s = cfg_.wind_strength[std::size_t(x)];
        if (s == 0) continue;
        const int g = int(std::lower_bound(groups.begin(), groups.end(), s) - groups.begin());
        wind_param[std::size_t(x)] = g;
        native_map[std::size_t(x)] = g;
    }
    const auto alpha = std::uint32_t(groups.size());
    native_map[alpha_param()] = int(alpha);

    StructuralModel::Definition def;
    def.num_states = num_states();
    def.num_actions = num_actions();
    def.gamma = cfg_.gamma;
    def.reward_range = {-1.0, 0.0};
    def.reward.assign(native_->rewards().begin(), native_->rewards().end());
    for (const auto& name : parameter_names(TyingMode::more_info)) def.params.push_back({name});
    def.latent = latent_tables(wind_param, alpha);
    def.native_map = std::move(native_map);
    return StructuralModel(std::move(def));
}

std::vector<double> GridWorld::true_parameters(TyingMode mode) const {
    switch (mode) {
        case TyingMode::least_info: return native_parameters();
        case TyingMode::entrywise: {
            const FiniteMdp mdp = true_mdp();
            std::vector<double> mu;
            for (std::size_t z = 0; z < mdp.num_pairs(); ++z) {
                const auto sup = native_->support(z);
                for (StateIndex n : sup) mu.push_back(mdp.probability(z, n));
            }
            return mu;
        }
        case TyingMode::more_info: break;
    }
    const std::vector<int> groups = strength_groups();
    std::vector<double> mu(groups.size() + 1, -1.0);
    for (int x = 0; x < cfg_.width; ++x) {
        const int s = cfg_.wind_strength[std::size_t(x)];
        if (s == 0) continue;
        const auto g = std::size_t(std::lower_bound(groups.begin(), groups.end(), s) - groups.begin());
        const double p = cfg_.wind_prob[std::size_t(x)];
        if (mu[g] >= 0.0 && mu[g] != p)
            throw std::invalid_argument("wind_probs: more-info tying needs equal probabilities for equal strengths");
        mu[g] = p;
    }
    mu.back() = cfg_.slip_prob;
    return mu;
}

std::vector<std::pair<StateIndex, double>> GridWorld::transition_row(StateIndex s, ActionIndex a,
                                                                     std::span<const double> native) const {
    if (is_goal(s)) return {{s, 1.0}};
    const Cell c = cell(s);
    const double alpha = native[alpha_param()];
    const int strength = cfg_.wind_strength[std::size_t(c.x)];
    const double beta = strength > 0 ? native[std::size_t(c.x)] : 0.0;
    std::map<StateIndex, double> row;
    for (ActionIndex d = 0; d < 4; ++d) {
        const double p_dir = (d == a ? 1.0 - alpha : 0.0) + alpha / 4.0;
        const Cell moved = move(c, Direction(d));
        Cell blown = moved;
        blown.y = std::min(moved.y + strength, cfg_.height - 1);
        row[index(moved)] += p_dir * (1.0 - beta);
        if (strength > 0) row[index(blown)] += p_dir * beta;
    }
    return {row.begin(), row.end()};
}

FiniteMdp GridWorld::true_mdp() const {
    MdpBuilder builder(num_states(), num_actions(), cfg_.gamma, {-1.0, 0.0});
    const std::vector<double> mu = native_parameters();
    std::vector<StateIndex> next;
    std::vector<double> prob;
    for (StateIndex s = 0; s < num_states(); ++s) {
        for (ActionIndex a = 0; a < num_actions(); ++a) {
            next.clear();
            prob.clear();
            // keep the structural support even where a true probability is exactly zero
            const auto row = transition_row(s, a, mu);
            for (StateIndex n : native_->support(std::size_t(s) * num_actions() + a)) {
                next.push_back(n);
                const auto it = std::find_if(row.begin(), row.end(), [n](const auto& e) { return e.first == n; });
                prob.push_back(it == row.end() ? 0.0 : it->second);
            }
            builder.add_row(is_goal(s) ? 0.0 : -1.0, next, prob);
        }
    }
    return std::move(builder).build();
}

TransitionRecord GridWorld::apply(StateIndex s, ActionIndex a, GridLatent latent, Extraction mode) const {
    if (is_goal(s)) throw std::logic_error("sample_grid_step: the goal is absorbing; reset instead of stepping");
    const Cell c = cell(s);
    TransitionRecord rec;
    rec.s = s;
    rec.a = a;
    rec.s_next = index(step(c, a, latent));
    if (mode == Extraction::strict) {
        rec.latent = native_->decode(std::size_t(s) * num_actions() + a, rec.s_next);
        return rec;
    }
    if (cfg_.wind_strength[std::size_t(c.x)] > 0) rec.latent.push_back({std::uint32_t(c.x), latent.wind ? 1u : 0u});
    rec.latent.push_back({alpha_param(), latent.slip ? 1u : 0u});
    return rec;
}

TransitionRecord GridWorld::sample_step(StateIndex s, ActionIndex a, Rng& rng, Extraction mode) const {
    if (is_goal(s)) throw std::logic_error("sample_grid_step: the goal is absorbing; reset instead of stepping");
    const Cell c = cell(s);
    GridLatent latent;
    latent.slip = rng.bernoulli(cfg_.slip_prob);
    if (latent.slip) latent.direction = Direction(rng.index(4));
    if (cfg_.wind_strength[std::size_t(c.x)] > 0) latent.wind = rng.bernoulli(cfg_.wind_prob[std::size_t(c.x)]);
    return apply(s, a, latent, mode);
}

std::pair<StructuralModel, FiniteMdp> build_gridworld(const GridConfig& cfg) {
    const GridWorld world(cfg);
    return {world.model(cfg.tying), world.true_mdp()};
}

TransitionRecord GridSimulator::sample(StateIndex s, ActionIndex a, Rng& rng) const {
    if (world_.is_goal(s)) return {s, a, s, {}};
    return world_.sample_step(s, a, rng);
}

}  // namespace greybox
