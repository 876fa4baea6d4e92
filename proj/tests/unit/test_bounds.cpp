#include "greybox/bounds.hpp"
#include "greybox/explore.hpp"
#include "greybox/gridworld.hpp"
#include "greybox/queue.hpp"

#include <doctest.h>

#include <cmath>

using namespace greybox;

namespace {

// Reference values from tests/oracles/bound_values.py (50-digit arithmetic).
constexpr double kQueueSigma = 0.95252934456045874323;
constexpr double kQueueL = 183682.0;
constexpr double kGridL = 5.98323;

BoundInputs queue_inputs(std::uint64_t n_k = 10000) { return {0.9, 576, 0.1, kQueueL, kQueueSigma, n_k}; }
BoundInputs grid_inputs(std::uint64_t n_k = 10000) { return {0.9, 280, 0.1, kGridL, 1.5, n_k}; }

StructuralModel coin() {
    StructuralModel::Definition def;
    def.num_states = 2;
    def.num_actions = 1;
    def.reward = {0, 0};
    def.reward_range = {0, 1};
    def.params = {{"p"}};
    for (int z = 0; z < 2; ++z) def.latent.push_back({{0, 1.0, {{0, 1}}}, {1, 1.0, {{0, 0}}}});
    return StructuralModel(std::move(def));
}

}  // namespace

TEST_CASE("lemma1 bound") {
    CHECK(lemma1_bound(2.0, 100) == doctest::Approx(0.2));
    CHECK(lemma1_bound(0.0, 100) == 0.0);
    CHECK_THROWS_AS(lemma1_bound(1.0, 0), std::invalid_argument);
}

TEST_CASE("plug-in and worst-case sigma") {
    const std::vector<double> mu{0.85, 0.9, 0.01, 0.04};
    CHECK(plugin_sigma(mu) == doctest::Approx(kQueueSigma).epsilon(1e-15));
    CHECK(worst_case_sigma(4) == 2.0);
}

TEST_CASE("c_pv halves when n_k quadruples") {
    const auto a = lemma2_constants(queue_inputs(1000));
    const auto b = lemma2_constants(queue_inputs(4000));
    CHECK(b.c_pv == doctest::Approx(a.c_pv / 2).epsilon(1e-14));
}

TEST_CASE("b_pv with no parameter noise and a vanishing discount") {
    BoundInputs in{1e-9, 100, 0.1, 3.0, 0.0, 50};
    const auto c = lemma2_constants(in);
    const double b = in.beta();
    const double tail = 3 * b * b / 50.0 * std::log(12 * 100 / 0.1);
    CHECK(c.b_pv == doctest::Approx(tail).epsilon(1e-6));
}

TEST_CASE("pinned bound values") {
    const auto c = lemma2_constants(queue_inputs());
    CHECK(c.c_pv == doctest::Approx(0.043247751234601510163).epsilon(1e-13));
    CHECK(c.b_pv == doctest::Approx(15747.133776754747791).epsilon(1e-13));
    CHECK(theorem1_epsilon(queue_inputs()) == doctest::Approx(157473.63651395379037).epsilon(1e-13));
    CHECK(theorem1_epsilon(grid_inputs()) == doctest::Approx(15.088761462172097873).epsilon(1e-13));
}

TEST_CASE("the Lipschitz term vanishes without parameter noise") {
    auto with = grid_inputs();
    auto without = with;
    without.sigma_mu = 0.0;
    auto no_l = with;
    no_l.lipschitz = 0.0;
    const double b = with.beta();
    const double first = with.gamma * b * b * with.lipschitz * with.sigma_mu / 100.0;
    CHECK(theorem1_epsilon(with) - theorem1_epsilon(without) == doctest::Approx(first).epsilon(1e-12));
    CHECK(theorem1_epsilon(no_l) == theorem1_epsilon(without));
}

TEST_CASE("bounds are positive, finite and decreasing in n_k") {
    double prev_eps = INFINITY, prev_b = INFINITY, prev_c = INFINITY;
    for (std::uint64_t n = 100; n <= 100000000; n *= 10) {
        const auto in = grid_inputs(n);
        const double e = theorem1_epsilon(in);
        const auto c = lemma2_constants(in);
        CHECK(std::isfinite(e));
        CHECK(e > 0);
        CHECK(e < prev_eps);
        CHECK(c.b_pv < prev_b);
        CHECK(c.c_pv < prev_c);
        prev_eps = e;
        prev_b = c.b_pv;
        prev_c = c.c_pv;
    }
}

TEST_CASE("invalid bound inputs are rejected") {
    auto in = grid_inputs();
    in.delta = 1.0;
    CHECK_THROWS_AS(theorem1_epsilon(in), std::invalid_argument);
    in = grid_inputs();
    in.n_k = 0;
    CHECK_THROWS_AS(lemma2_constants(in), std::invalid_argument);
}

TEST_CASE("sample requirement inverts epsilon exactly") {
    for (const BoundInputs& base : {queue_inputs(), grid_inputs()}) {
        for (double target : {0.5, 0.1, 0.01}) {
            const auto req = samples_for_accuracy(target, base, 3);
            auto in = base;
            in.n_k = req.n_k;
            CHECK(theorem1_epsilon(in) <= target);
            in.n_k = req.n_k - 1;
            CHECK(theorem1_epsilon(in) > target);
        }
    }
}

TEST_CASE("pinned sample requirements") {
    const auto q = samples_for_accuracy(0.1, queue_inputs(), 4);
    CHECK(double(q.n_k) == doctest::Approx(24796250236568996.0).epsilon(1e-12));
    CHECK(q.regime == SampleRegime::log);
    const auto g = samples_for_accuracy(0.1, grid_inputs(), 3);
    CHECK(g.n_k == 104324014);
    CHECK(g.rate_log == doctest::Approx(g.rate_sqrt_log * std::log(280 / 0.1)));
}

TEST_CASE("more parameter noise never needs fewer samples") {
    auto in = grid_inputs();
    std::uint64_t prev = 0;
    for (double s : {0.1, 0.2, 0.4, 0.8, 1.6, 3.2}) {
        in.sigma_mu = s;
        const auto n = samples_for_accuracy(0.1, in, 3).n_k;
        CHECK(n >= prev);
        prev = n;
    }
}

TEST_CASE("unreachable accuracy") {
    CHECK_THROWS_AS(samples_for_accuracy(1e-12, queue_inputs(), 4), std::domain_error);
    CHECK_THROWS_AS(samples_for_accuracy(1.5, queue_inputs(), 4), std::invalid_argument);
}

TEST_CASE("regime classification") {
    CHECK(classify_regime(2, 576) == SampleRegime::sqrt_log);
    CHECK(classify_regime(4, 576) == SampleRegime::log);
    CHECK(classify_regime(11, 280) == SampleRegime::neither);
}

TEST_CASE("Lipschitz estimate of a parameter-free model is zero") {
    const std::vector<double> empty_mu{0.5};
    StructuralModel::Definition def;
    def.num_states = 2;
    def.num_actions = 1;
    def.reward = {0, 0};
    def.reward_range = {0, 1};
    def.params = {{"unused"}};
    def.latent = {{{0, 0.5, {}}, {1, 0.5, {}}}, {{1, 1.0, {}}}};
    const StructuralModel constant(std::move(def));
    Rng rng(1);
    CHECK(estimate_lipschitz(constant, empty_mu, 200, rng).value == 0.0);
}

TEST_CASE("Lipschitz estimate of a single coin approaches 2") {
    const auto model = coin();
    const std::vector<double> half{0.5};
    Rng rng(2);
    const auto est = estimate_lipschitz(model, half, 5000, rng);
    CHECK(est.pairs == 5000);
    CHECK(est.value <= 2.0 + 1e-12);
    CHECK(est.value == doctest::Approx(2.0).epsilon(1e-9));
}

// Exact uniform constant for a Bernoulli multilinear model. The gradient of
// each entry is affine in every other coordinate, so its squared norm is
// convex per coordinate and peaks at a vertex of the box; a coordinate's
// partial derivative is the difference of the entry at that coordinate's ends.
double vertex_lipschitz(const StructuralModel& model, std::span<const double> reference) {
    const std::size_t m = model.num_slots();
    const auto p = reconstruct(model, reference);
    double best = 0.0;
    for (std::uint64_t v = 0; v < (1ull << m); ++v) {
        std::vector<double> corner(m);
        for (std::size_t i = 0; i < m; ++i) corner[i] = double((v >> i) & 1);
        std::vector<FiniteMdp> hi, lo;
        for (std::size_t j = 0; j < m; ++j) {
            auto up = corner, down = corner;
            up[j] = 1.0;
            down[j] = 0.0;
            hi.push_back(reconstruct(model, up));
            lo.push_back(reconstruct(model, down));
        }
        for (std::size_t z = 0; z < p.num_pairs(); ++z) {
            const auto r = p.row(z);
            for (std::size_t e = 0; e < r.size(); ++e) {
                if (r.prob[e] <= 0) continue;
                double g2 = 0.0;
                for (std::size_t j = 0; j < m; ++j) {
                    const double g = hi[j].probability(z, r.next[e]) - lo[j].probability(z, r.next[e]);
                    g2 += g * g;
                }
                best = std::max(best, std::sqrt(g2) / r.prob[e]);
            }
        }
    }
    return best;
}

TEST_CASE("Lipschitz estimate approaches the exact constant from below") {
    const QueueModel q(QueueConfig{2, 2, 0.5, {0.4, 0.7}, 0.9});
    const auto model = q.structural_model();
    const auto truth = q.true_parameters();
    const double exact = vertex_lipschitz(model, truth);
    Rng a(3), b(3);
    const double l1 = estimate_lipschitz(model, truth, 20000, a).value;
    const double l2 = estimate_lipschitz(model, truth, 40000, b).value;
    CHECK(l1 <= l2);
    CHECK(l2 <= exact * (1 + 1e-12));
    CHECK(l2 >= 0.5 * exact);
}

TEST_CASE("reconstruction respects the estimated Lipschitz constant") {
    const GridWorld g(GridConfig{});
    for (TyingMode mode : {TyingMode::more_info, TyingMode::least_info}) {
        const auto model = g.model(mode);
        const auto truth = g.true_parameters(mode);
        Rng rng(4);
        const double L = estimate_lipschitz(model, truth, 2000, rng).value;
        const auto p = reconstruct(model, truth);
        Rng draw(5);
        bool ok = true;
        for (int t = 0; t < 200 && ok; ++t) {
            std::vector<double> m1(model.num_slots()), m2(model.num_slots());
            for (auto& x : m1) x = draw.uniform();
            for (auto& x : m2) x = draw.uniform();
            double dist = 0;
            for (std::size_t i = 0; i < m1.size(); ++i) dist += (m1[i] - m2[i]) * (m1[i] - m2[i]);
            dist = std::sqrt(dist);
            const auto f1 = reconstruct(model, m1), f2 = reconstruct(model, m2);
            for (std::size_t z = 0; z < model.num_pairs() && ok; ++z) {
                const auto r = p.row(z);
                for (std::size_t j = 0; j < r.size(); ++j) {
                    if (r.prob[j] <= 0) continue;
                    const double d = std::abs(f1.probability(z, r.next[j]) - f2.probability(z, r.next[j]));
                    // the estimate is a lower bound, so allow it a modest margin
                    if (d > 1.5 * L * r.prob[j] * dist + 1e-9) ok = false;
                }
            }
        }
        CHECK(ok);
    }
}

TEST_CASE("Monte Carlo parameter error stays below sigma over root n") {
    const QueueModel q(QueueConfig{});
    const QueueSimulator sim(q, q.true_parameters());
    const auto model = q.structural_model();
    const auto truth = q.true_parameters();
    const auto active = model.active_params(Extraction::oracle);
    double total = 0.0;
    const int seeds = 50;
    for (int seed = 0; seed < seeds; ++seed) {
        Rng rng{std::uint64_t(seed)};
        SampleStream stream(sim, {CollectionMode::generative, 0, 0, {}}, rng);
        EstimatorState est(model.params());
        while (est.total_samples() == 0 || min_info_count(est, active) < 400)
            record_transition(est, model.extract(stream.next(), Extraction::oracle));
        const auto mu = estimates(est, model.default_parameters());
        double d = 0;
        for (std::size_t i = 0; i < mu.size(); ++i) d += (mu[i] - truth[i]) * (mu[i] - truth[i]);
        total += std::sqrt(d);
    }
    CHECK(total / seeds <= lemma1_bound(plugin_sigma(truth), 400));
}
