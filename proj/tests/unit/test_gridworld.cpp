#include "greybox/gridworld.hpp"
#include "greybox/planning.hpp"
#include "greybox/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

using namespace greybox;

namespace {

std::size_t pair_of(const GridWorld& g, Cell c, ActionIndex a) { return std::size_t(g.index(c)) * 4 + a; }

}  // namespace

TEST_CASE("gridworld sizes and tying layouts") {
    const GridWorld g(GridConfig{});
    CHECK(g.num_states() == 70);
    CHECK(GridWorld::num_actions() == 4);
    CHECK(g.model(TyingMode::more_info).num_params() == 3);
    CHECK(g.model(TyingMode::least_info).num_params() == 11);
    CHECK(g.model(TyingMode::entrywise).num_params() == 280);
    CHECK(g.true_parameters(TyingMode::more_info) == std::vector<double>{0.5, 0.5, 0.4});
    CHECK(g.parameter_names(TyingMode::more_info) ==
          std::vector<std::string>{"wind_prob_strength_1", "wind_prob_strength_2", "slip_prob"});
}

TEST_CASE("config validation") {
    GridConfig cfg;
    cfg.goal = cfg.start;
    CHECK_THROWS_AS(GridWorld{cfg}, std::invalid_argument);
    cfg = {};
    cfg.start = {10, 0};
    CHECK_THROWS_AS(GridWorld{cfg}, std::invalid_argument);
    cfg = {};
    cfg.wind_prob.pop_back();
    CHECK_THROWS_AS(GridWorld{cfg}, std::invalid_argument);
    CHECK_THROWS_AS(parse_tying_mode("most-info"), std::invalid_argument);
}

TEST_CASE("more-info tying needs equal wind probabilities within a strength class") {
    GridConfig cfg;
    cfg.wind_prob[3] = 0.2;
    const GridWorld g(cfg);
    CHECK_THROWS_AS(g.true_parameters(TyingMode::more_info), std::invalid_argument);
    CHECK(g.true_parameters(TyingMode::least_info)[3] == 0.2);
}

TEST_CASE("row at (3,2) moving right, enumerated by hand") {
    const GridWorld g(GridConfig{});
    const auto row = g.transition_row(g.index({3, 2}), right, g.native_parameters());
    // directions: right with 0.6 + 0.1, each other direction 0.1; wind lifts one cell with 0.5
    const std::map<std::pair<int, int>, double> hand{
        {{4, 3}, 0.7 * 0.5}, {{4, 2}, 0.7 * 0.5},  // right
        {{3, 4}, 0.1 * 0.5}, {{3, 3}, 0.1 * 0.5}, {{3, 2}, 0.1 * 0.5},  // up (3,3)/(3,4), down (3,1)/(3,2)
        {{3, 1}, 0.1 * 0.5},
        {{2, 3}, 0.1 * 0.5}, {{2, 2}, 0.1 * 0.5},  // left
    };
    std::map<StateIndex, double> expected;
    for (const auto& [c, p] : hand) expected[g.index({c.first, c.second})] += p;
    REQUIRE(row.size() == expected.size());
    for (const auto& [n, p] : row) CHECK(p == doctest::Approx(expected[n]).epsilon(1e-15));
    CHECK(g.true_mdp().probability(pair_of(g, {3, 2}, right), g.index({4, 3})) == doctest::Approx(0.35));

    // the latent-table reconstruction agrees with the direct row
    const auto model = g.model(TyingMode::least_info);
    const std::size_t z = pair_of(g, {3, 2}, right);
    std::vector<double> out(model.support(z).size());
    model.row(z, g.native_parameters(), out);
    for (std::size_t j = 0; j < out.size(); ++j) CHECK(out[j] == doctest::Approx(expected[model.support(z)[j]]).epsilon(1e-15));
}

TEST_CASE("all tying modes reconstruct the same true model") {
    const GridWorld g(GridConfig{});
    const auto ref = g.true_mdp();
    for (TyingMode mode : {TyingMode::more_info, TyingMode::least_info, TyingMode::entrywise}) {
        const auto rec = reconstruct(g.model(mode), g.true_parameters(mode));
        for (std::size_t z = 0; z < ref.num_pairs(); ++z) {
            const auto r = ref.row(z);
            for (std::size_t j = 0; j < r.size(); ++j) CHECK(std::abs(rec.probability(z, r.next[j]) - r.prob[j]) < 1e-14);
        }
    }
}

TEST_CASE("goal is absorbing with zero value") {
    const GridWorld g(GridConfig{});
    const auto mdp = g.true_mdp();
    const StateIndex goal = g.index({7, 3});
    for (ActionIndex a = 0; a < 4; ++a) {
        CHECK(mdp.probability(pair_of(g, {7, 3}, a), goal) == 1.0);
        CHECK(mdp.reward(goal, a) == 0.0);
    }
    const auto q = policy_iteration(mdp).q;
    for (ActionIndex a = 0; a < 4; ++a) CHECK(q(goal, a) == doctest::Approx(0.0).epsilon(1e-12));
    Rng rng(0);
    CHECK_THROWS_AS(g.sample_step(goal, 0, rng), std::logic_error);
}

TEST_CASE("wind probability of a windless column has no informative pairs") {
    const GridWorld g(GridConfig{});
    const auto& m = g.native_model();
    for (std::size_t x : {0u, 1u, 2u, 9u}) {
        CHECK_FALSE(m.influential(x));
        CHECK(m.strict_sets().pairs[x].empty());
        CHECK(m.oracle_sets().pairs[x].empty());
    }
    const auto least = m.active_params(Extraction::oracle);
    CHECK(least == std::vector<std::size_t>{3, 4, 5, 6, 7, 8, 10});
}

TEST_CASE("without slip, the strict set of column 3 matches the listed pairs") {
    // keep only the no-slip latent outcomes and hand the tables to the generic routine
    const GridWorld g(GridConfig{});
    const auto& native = g.native_model();
    StructuralModel::Definition def;
    def.num_states = g.num_states();
    def.num_actions = 4;
    def.reward.assign(native.rewards().begin(), native.rewards().end());
    def.reward_range = {-1, 0};
    def.params = native.params();
    for (std::size_t z = 0; z < native.num_pairs(); ++z) {
        std::vector<LatentOutcome> kept;
        for (LatentOutcome o : native.latent(z)) {
            const auto slip = std::find_if(o.bits.begin(), o.bits.end(), [&](const Observation& b) { return b.param == g.alpha_param(); });
            if (slip != o.bits.end()) {
                if (slip->value == 1) continue;
                o.bits.erase(slip);
            }
            kept.push_back(o);
        }
        def.latent.push_back(kept);
    }
    // the slip probability no longer appears in any outcome, so it is inert here
    const StructuralModel model(std::move(def));
    std::vector<std::size_t> listed;
    for (int y = 0; y <= 4; ++y) {
        for (ActionIndex a = 0; a < 4; ++a) listed.push_back(pair_of(g, {3, y}, a));
    }
    for (ActionIndex a : {down, left, right}) listed.push_back(pair_of(g, {3, 5}, a));
    listed.push_back(pair_of(g, {3, 6}, down));
    std::sort(listed.begin(), listed.end());
    CHECK(model.strict_sets().pairs[3] == listed);
}

TEST_CASE("with slip, strict sets drop pairs where slip collides with the top border") {
    const GridWorld g(GridConfig{});
    const auto& sets = g.native_model().strict_sets();
    CHECK_FALSE(sets.contains(3, pair_of(g, {3, 6}, down)));
    CHECK(sets.pairs[g.alpha_param()].size() < g.native_model().oracle_sets().pairs[g.alpha_param()].size());
    // oracle annotations reach every non-goal pair for slip
    CHECK(g.native_model().oracle_sets().pairs[g.alpha_param()].size() == 276);
}

TEST_CASE("wind sets under slip") {
    // strength 1: rows 1..4 separate the two wind outcomes for every action;
    // strength 2: a lift of two collides with a slip up except on the bottom row
    const GridWorld g(GridConfig{});
    const auto& m = g.native_model();
    for (int x = 3; x <= 8; ++x) {
        const int strength = g.config().wind_strength[std::size_t(x)];
        std::vector<std::size_t> expected;
        for (int y = 0; y < 7; ++y) {
            if ((strength == 1 && y >= 1 && y <= 4) || (strength == 2 && y == 0)) {
                for (ActionIndex a = 0; a < 4; ++a) expected.push_back(pair_of(g, {x, y}, a));
            }
        }
        CHECK(m.strict_sets().pairs[std::size_t(x)] == expected);
        CHECK(m.oracle_sets().pairs[std::size_t(x)].size() == (x == 7 ? 24u : 28u));
    }
}

TEST_CASE("sampled step from (3,2) right without slip and with wind") {
    const GridWorld g(GridConfig{});
    const auto rec = g.apply(g.index({3, 2}), right, {false, up, true});
    CHECK(rec.s_next == g.index({4, 3}));
    const ObservationList want{{3, 1}, {10, 0}};
    CHECK(rec.latent == want);
    const auto mapped = g.model(TyingMode::more_info).extract(rec, Extraction::oracle);
    const ObservationList tied{{0, 1}, {2, 0}};
    CHECK(mapped == tied);
}

TEST_CASE("border clipping in a windless column") {
    const GridWorld g(GridConfig{});
    const auto rec = g.apply(g.index({0, 0}), left, {false, up, true});
    CHECK(rec.s_next == g.index({0, 0}));
    CHECK(rec.latent == ObservationList{{10, 0}});
}

TEST_CASE("strength two wind is clipped at the top") {
    const GridWorld g(GridConfig{});
    CHECK(g.step({6, 5}, right, {false, up, true}) == Cell{7, 6});
    CHECK(g.step({6, 5}, up, {false, up, true}) == Cell{6, 6});
}

TEST_CASE("sampled frequencies match the analytic row") {
    const GridWorld g(GridConfig{});
    const StateIndex s = g.index({6, 2});
    const auto row = g.transition_row(s, left, g.native_parameters());
    Rng rng(31);
    const int n = 1000000;
    std::map<StateIndex, int> hits;
    for (int t = 0; t < n; ++t) ++hits[g.sample_step(s, left, rng).s_next];
    for (const auto& [next, p] : row) {
        CHECK(std::abs(double(hits[next]) / n - p) <= 4 * std::sqrt(p * (1 - p) / n) + 1e-12);
        hits.erase(next);
    }
    CHECK(hits.empty());
}

TEST_CASE("strict decode agrees with the latent draws on strict pairs") {
    const GridWorld g(GridConfig{});
    const auto& m = g.native_model();
    Rng rng(12);
    int checked = 0, agree = 0;
    for (int t = 0; t < 100000; ++t) {
        const StateIndex s = StateIndex(rng.index(g.num_states()));
        if (g.is_goal(s)) continue;
        const ActionIndex a = ActionIndex(rng.index(4));
        const auto oracle = g.sample_step(s, a, rng, Extraction::oracle);
        const std::size_t z = std::size_t(s) * 4 + a;
        for (const Observation& o : m.extract(oracle, Extraction::strict)) {
            ++checked;
            CHECK(m.strict_sets().contains(o.param, z));
            const auto it = std::find_if(oracle.latent.begin(), oracle.latent.end(),
                                         [&](const Observation& l) { return l.param == o.param; });
            agree += it != oracle.latent.end() && it->value == o.value;
        }
    }
    CHECK(checked > 10000);
    CHECK(agree == checked);
}

TEST_CASE("simulator wrapper self-loops at the goal and restarts at the start") {
    const GridSimulator sim{GridWorld(GridConfig{})};
    Rng rng(0);
    const StateIndex goal = sim.world().index({7, 3});
    CHECK(sim.terminal(goal));
    const auto rec = sim.sample(goal, 2, rng);
    CHECK(rec.s_next == goal);
    CHECK(rec.latent.empty());
    CHECK(sim.reset_state(rng) == sim.world().index({0, 3}));
}
