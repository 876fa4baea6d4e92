#include "greybox/queue.hpp"
#include "greybox/random.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace greybox;

namespace {

// Independent re-statement of one queue step, used as a brute-force oracle.
struct Brute {
    std::size_t B, G;

    std::pair<std::size_t, std::uint32_t> step(std::size_t l, std::uint32_t busy, std::uint32_t a, bool arrive,
                                               std::uint32_t depart) const {
        std::size_t queue = l;
        for (std::size_t i = 0; i < G; ++i) {
            if (queue == 0) break;
            if (((a >> i) & 1u) && !((busy >> i) & 1u)) {
                busy |= 1u << i;
                --queue;
            }
        }
        busy &= ~depart;
        if (arrive && l < B) ++queue;
        return {queue, busy};
    }

    std::map<StateIndex, double> row(std::size_t l, std::uint32_t busy, std::uint32_t a,
                                     const std::vector<double>& mu) const {
        std::map<StateIndex, double> out;
        for (int arrive = 0; arrive < 2; ++arrive) {
            for (std::uint32_t d = 0; d < (1u << G); ++d) {
                double p = arrive ? mu[0] : 1 - mu[0];
                for (std::size_t i = 0; i < G; ++i) p *= ((d >> i) & 1u) ? mu[i + 1] : 1 - mu[i + 1];
                const auto [nl, nb] = step(l, busy, a, arrive, d);
                out[StateIndex((nl << G) | nb)] += p;
            }
        }
        return out;
    }
};

}  // namespace

TEST_CASE("queue sizes") {
    const QueueModel q(QueueConfig{});
    CHECK(q.num_states() == 72);
    CHECK(q.num_actions() == 8);
    CHECK(q.num_states() * q.num_actions() == 576);
    CHECK(q.num_params() == 4);
    const QueueModel tiny(QueueConfig{1, 1, 0.5, {0.5}, 0.9});
    CHECK(tiny.num_states() == 4);
    CHECK(tiny.num_actions() == 2);
}

TEST_CASE("state index is a bijection") {
    const QueueModel q(QueueConfig{});
    for (StateIndex s = 0; s < q.num_states(); ++s) CHECK(q.index(q.state(s)) == s);
    CHECK(q.index({3, 0b101}) == 3 * 8 + 5);
}

TEST_CASE("reward counts jobs") {
    const QueueModel q(QueueConfig{});
    const auto mdp = q.true_mdp();
    for (ActionIndex a = 0; a < 8; ++a) CHECK(mdp.reward(q.index({3, 0}), a) == -3.0);
    CHECK(mdp.reward(q.index({2, 0b101}), 0) == -4.0);
}

TEST_CASE("config validation names the key") {
    auto expect = [](QueueConfig cfg, const std::string& key) {
        try {
            QueueModel{cfg};
            FAIL("accepted invalid config");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).rfind(key, 0) == 0);
        }
    };
    expect({0, 3, 0.5, {0.1, 0.2, 0.3}, 0.9}, "buffer");
    expect({8, 3, 1.5, {0.1, 0.2, 0.3}, 0.9}, "injection_rate");
    expect({8, 3, 0.5, {0.1, 0.2}, 0.9}, "exit_probabilities");
    expect({8, 3, 0.5, {0.1, 0.2, 0.3}, 1.0}, "gamma");
}

TEST_CASE("example row from one waiting job") {
    const QueueModel q(QueueConfig{});
    const auto row = q.transition_row({1, 0}, 0b001, q.true_parameters());
    double p = -1;
    for (const auto& [n, pr] : row) {
        if (n == q.index({0, 0})) p = pr;
    }
    CHECK(p == doctest::Approx(0.135).epsilon(1e-14));
}

TEST_CASE("a full queue row does not depend on the injection rate") {
    const QueueModel q(QueueConfig{});
    auto mu1 = q.true_parameters(), mu2 = mu1;
    mu1[0] = 0.2;
    mu2[0] = 0.9;
    for (std::uint32_t busy = 0; busy < 8; ++busy) {
        for (ActionIndex a = 0; a < 8; ++a) {
            const auto r1 = q.transition_row({8, busy}, a, mu1);
            const auto r2 = q.transition_row({8, busy}, a, mu2);
            REQUIRE(r1.size() == r2.size());
            for (std::size_t j = 0; j < r1.size(); ++j) CHECK(r1[j] == r2[j]);
        }
    }
}

TEST_CASE("analytic rows equal exhaustive latent enumeration (B=2, G=2)") {
    const QueueConfig cfg{2, 2, 0.37, {0.61, 0.23}, 0.9};
    const QueueModel q(cfg);
    const Brute brute{2, 2};
    Rng rng(9);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> mu(3);
        for (double& x : mu) x = rng.uniform();
        for (StateIndex s = 0; s < q.num_states(); ++s) {
            for (ActionIndex a = 0; a < q.num_actions(); ++a) {
                const auto st = q.state(s);
                auto expected = brute.row(st.length, st.busy, a, mu);
                for (const auto& [n, p] : q.transition_row(st, a, mu)) {
                    worst = std::max(worst, std::abs(expected[n] - p));
                    expected.erase(n);
                }
                for (const auto& [n, p] : expected) worst = std::max(worst, p);  // mass the analytic row missed
            }
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("every entry is multilinear in the parameters (B=2, G=2)") {
    const QueueModel q(QueueConfig{2, 2, 0.5, {0.5, 0.5}, 0.9});
    const auto model = q.structural_model();
    // values at the 8 corners of the unit cube determine a multilinear function
    std::vector<std::vector<double>> corner_rows(8);
    std::vector<std::size_t> offsets{0};
    for (std::size_t z = 0; z < model.num_pairs(); ++z) offsets.push_back(offsets.back() + model.support(z).size());
    const auto all_rows = [&](const std::vector<double>& mu) {
        std::vector<double> out(offsets.back());
        for (std::size_t z = 0; z < model.num_pairs(); ++z)
            model.row(z, mu, std::span<double>(out).subspan(offsets[z], offsets[z + 1] - offsets[z]));
        return out;
    };
    for (int c = 0; c < 8; ++c) corner_rows[c] = all_rows({double(c & 1), double((c >> 1) & 1), double((c >> 2) & 1)});
    Rng rng(4);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const std::vector<double> mu{rng.uniform(), rng.uniform(), rng.uniform()};
        const auto actual = all_rows(mu);
        for (std::size_t e = 0; e < actual.size(); ++e) {
            double interp = 0.0;
            for (int c = 0; c < 8; ++c) {
                double w = 1.0;
                for (int i = 0; i < 3; ++i) w *= ((c >> i) & 1) ? mu[i] : 1 - mu[i];
                interp += w * corner_rows[c][e];
            }
            worst = std::max(worst, std::abs(interp - actual[e]));
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("arrival with two departures: step, sample and decode") {
    const QueueModel q(QueueConfig{});
    const QueueState s{3, 0};
    const ActionIndex a = 0b110;  // send jobs to servers 2 and 3
    const QueueState expected{2, 0b100};
    CHECK(q.step(s, a, {true, 0b010}) == expected);

    Rng rng(1);
    const std::vector<double> forced{1.0, 0.5, 1.0, 0.0};  // arrival, server 2 leaves, server 3 stays
    const auto rec = q.sample_step(s, a, forced, rng);
    CHECK(rec.s_next == q.index(expected));
    const ObservationList want{{0, 1}, {2, 1}, {3, 0}};
    CHECK(rec.latent == want);
    CHECK(q.decode(s, a, expected) == want);
}

TEST_CASE("with all parameters zero two jobs are assigned and nothing else happens") {
    const QueueModel q(QueueConfig{});
    Rng rng(1);
    const std::vector<double> zero(4, 0.0);
    const auto rec = q.sample_step({3, 0}, 0b110, zero, rng);
    CHECK(rec.s_next == q.index({1, 0b110}));
}

TEST_CASE("a full queue carries no arrival observation") {
    const QueueModel q(QueueConfig{});
    const auto obs = q.decode({8, 0b001}, 0, {8, 0b000});
    REQUIRE(obs.size() == 1);
    CHECK(obs[0] == Observation{1, 1});
    CHECK_THROWS_AS(q.decode({8, 0}, 0, {7, 0}), ModelError);
    CHECK_THROWS_AS(q.decode({2, 0}, 0, {2, 0b001}), ModelError);
}

TEST_CASE("sampled row frequencies match the analytic row") {
    const QueueModel q(QueueConfig{});
    const QueueState s{3, 0b011};
    const ActionIndex a = 0b100;
    const auto mu = q.true_parameters();
    const auto row = q.transition_row(s, a, mu);
    CHECK(row.size() == 16);
    Rng rng(21);
    const int n = 1000000;
    std::map<StateIndex, int> hits;
    for (int t = 0; t < n; ++t) ++hits[q.sample_step(s, a, mu, rng).s_next];
    for (const auto& [next, p] : row) {
        const double se = std::sqrt(p * (1 - p) / n);
        CHECK(std::abs(double(hits[next]) / n - p) <= 4 * se + 1e-12);
        hits.erase(next);
    }
    CHECK(hits.empty());
}

TEST_CASE("decode recovers the latent draws of sampled transitions") {
    const QueueModel q(QueueConfig{});
    const auto mu = q.true_parameters();
    Rng rng(8);
    int agree = 0;
    const int n = 100000;
    for (int t = 0; t < n; ++t) {
        const QueueState s = q.state(StateIndex(rng.index(q.num_states())));
        const ActionIndex a = ActionIndex(rng.index(q.num_actions()));
        const auto rec = q.sample_step(s, a, mu, rng);
        agree += q.decode(s, a, q.state(rec.s_next)) == rec.latent;
    }
    CHECK(agree == n);
}

TEST_CASE("informative sets follow the assignment rule") {
    const QueueModel q(QueueConfig{});
    const auto sets = q.informative_sets();
    for (std::uint32_t server = 0; server < 3; ++server) {
        std::vector<std::size_t> expected;
        for (StateIndex si = 0; si < q.num_states(); ++si) {
            const auto s = q.state(si);
            for (ActionIndex a = 0; a < 8; ++a) {
                bool in = (s.busy >> server) & 1u;
                if (!in && ((a >> server) & 1u)) {
                    std::size_t ahead = 0;  // requested free servers with a lower index
                    for (std::uint32_t j = 0; j < server; ++j) ahead += ((a >> j) & 1u) && !((s.busy >> j) & 1u);
                    in = s.length > ahead;
                }
                if (in) expected.push_back(std::size_t(si) * 8 + a);
            }
        }
        CHECK(sets.pairs[server + 1] == expected);
    }
    std::vector<std::size_t> arrivals;
    for (std::size_t z = 0; z < 576; ++z) {
        if (q.state(StateIndex(z / 8)).length < 8) arrivals.push_back(z);
    }
    CHECK(sets.pairs[0] == arrivals);
    for (const auto& u : sets.pairs) CHECK(u.size() >= 576 / 4);
}

TEST_CASE("generic informative-set routine reproduces the analytic queue sets") {
    const QueueModel q(QueueConfig{});
    const auto model = q.structural_model();
    const auto generic = compute_informative_sets(model);
    const auto analytic = q.informative_sets();
    CHECK(generic.pairs == analytic.pairs);
    CHECK(generic.decode == analytic.decode);
    CHECK(latent_involvement_sets(model).pairs == analytic.pairs);
}
