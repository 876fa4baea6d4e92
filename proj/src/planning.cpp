#include "greybox/planning.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

namespace greybox {

namespace {

// One Bellman optimality sweep: out = T(in).
void bellman_sweep(const FiniteMdp& mdp, const QTable& in, std::vector<double>& v, QTable& out) {
    const std::size_t S = mdp.num_states();
    for (StateIndex s = 0; s < S; ++s) v[s] = in.max_value(s);
    const double gamma = mdp.gamma();
    for (std::size_t z = 0; z < mdp.num_pairs(); ++z) {
        const RowView r = mdp.row(z);
        double expected = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) expected += r.prob[j] * v[r.next[j]];
        out[z] = mdp.reward(z) + gamma * expected;
    }
}

}  // namespace

ValueIterationResult value_iteration_detailed(const FiniteMdp& mdp, const PlannerConfig& cfg) {
    if (!(cfg.residual_tolerance > 0.0) || cfg.max_iterations < 1)
        throw std::invalid_argument("planner config needs tolerance > 0 and max_iterations >= 1");
    ValueIterationResult result;
    QTable q(mdp.num_states(), mdp.num_actions(), 0.0);
    QTable next(mdp.num_states(), mdp.num_actions(), 0.0);
    std::vector<double> v(mdp.num_states());
    for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
        bellman_sweep(mdp, q, v, next);
        const double residual = sup_norm_diff(next, q);
        std::swap(q, next);
        result.residual_trace.push_back(residual);
        result.iterations = it;
        result.residual = residual;
        if (residual <= cfg.residual_tolerance) {
            result.q = std::move(q);
            return result;
        }
    }
    throw PlannerError("value iteration did not reach the residual tolerance", result.iterations,
                       result.residual);
}

QTable value_iteration(const FiniteMdp& mdp, const PlannerConfig& cfg) {
    return value_iteration_detailed(mdp, cfg).q;
}

std::vector<double> evaluate_policy(const FiniteMdp& mdp, const PolicyVector& policy) {
    const auto S = static_cast<Eigen::Index>(mdp.num_states());
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S);
    Eigen::VectorXd rhs(S);
    const double gamma = mdp.gamma();
    for (StateIndex s = 0; s < mdp.num_states(); ++s) {
        const RowView r = mdp.row(s, policy[s]);
        for (std::size_t j = 0; j < r.size(); ++j) system(s, r.next[j]) -= gamma * r.prob[j];
        rhs(s) = mdp.reward(s, policy[s]);
    }
    // Strictly diagonally dominant for gamma < 1, so LU never meets a zero pivot.
    const Eigen::VectorXd v = system.partialPivLu().solve(rhs);
    assert(v.allFinite());
    return {v.data(), v.data() + v.size()};
}

QTable q_from_values(const FiniteMdp& mdp, const std::vector<double>& v) {
    QTable q(mdp.num_states(), mdp.num_actions());
    for (std::size_t z = 0; z < mdp.num_pairs(); ++z) {
        const RowView r = mdp.row(z);
        double expected = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) expected += r.prob[j] * v[r.next[j]];
        q[z] = mdp.reward(z) + mdp.gamma() * expected;
    }
    return q;
}

PolicyVector greedy_policy(const QTable& q) {
    PolicyVector pi;
    pi.action.resize(q.num_states());
    for (StateIndex s = 0; s < q.num_states(); ++s) {
        const auto row = q.state_values(s);
        // max_element returns the first maximum
        pi.action[s] = static_cast<ActionIndex>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return pi;
}

PolicyIterationResult policy_iteration_detailed(const FiniteMdp& mdp, std::size_t max_iterations) {
    PolicyIterationResult result;
    result.policy.action.assign(mdp.num_states(), 0);
    std::vector<double> previous;
    for (std::size_t it = 1; it <= max_iterations; ++it) {
        const std::vector<double> v = evaluate_policy(mdp, result.policy);
        result.q = q_from_values(mdp, v);
        result.iterations = it;
        result.mean_value_trace.push_back(std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()));

        if (!previous.empty()) {
            for (std::size_t s = 0; s < v.size(); ++s)
                assert(v[s] >= previous[s] - 1e-9 * (1.0 + std::abs(previous[s])));
        }
        previous = v;

        // Switch only on a strict improvement so equal-valued actions cannot cycle.
        bool changed = false;
        for (StateIndex s = 0; s < mdp.num_states(); ++s) {
            const auto row = result.q.state_values(s);
            const auto best = static_cast<ActionIndex>(std::max_element(row.begin(), row.end()) - row.begin());
            const double current = row[result.policy[s]];
            if (row[best] > current + 1e-12 * (1.0 + std::abs(current))) {
                result.policy.action[s] = best;
                changed = true;
            }
        }
        if (!changed) return result;
    }
    throw PlannerError("policy iteration did not stabilise", max_iterations, 0.0);
}

PolicyIterationResult policy_iteration(const FiniteMdp& mdp) { return policy_iteration_detailed(mdp); }

double bellman_residual(const FiniteMdp& mdp, const QTable& q) {
    QTable next(mdp.num_states(), mdp.num_actions());
    std::vector<double> v(mdp.num_states());
    bellman_sweep(mdp, q, v, next);
    return sup_norm_diff(next, q);
}

}  // namespace greybox
