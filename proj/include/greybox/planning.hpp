#pragma once

#include "greybox/mdp.hpp"

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace greybox {

struct PlannerConfig {
    double residual_tolerance = 1e-10;  // sup-norm Bellman residual at which VI stops
    std::size_t max_iterations = 100000;
};

class PlannerError : public std::runtime_error {
public:
    PlannerError(const std::string& what, std::size_t iterations, double residual)
        : std::runtime_error(what), iterations(iterations), residual(residual) {}
    std::size_t iterations;
    double residual;
};

struct ValueIterationResult {
    QTable q;
    std::size_t iterations = 0;
    double residual = 0.0;
    std::vector<double> residual_trace;  // ||T Q_n - Q_n|| per sweep
};

/// Jacobi Q-value iteration from Q = 0. The returned table satisfies
/// ||T Q - Q|| <= residual_tolerance, hence ||Q - Q*|| <= tol * gamma / (1 - gamma).
ValueIterationResult value_iteration_detailed(const FiniteMdp& mdp, const PlannerConfig& cfg);
QTable value_iteration(const FiniteMdp& mdp, const PlannerConfig& cfg = {});

struct PolicyIterationResult {
    PolicyVector policy;
    QTable q;
    std::size_t iterations = 0;
    std::vector<double> mean_value_trace;  // mean_s V^{pi_n}(s) per iteration
};

/// Howard policy iteration with exact evaluation (dense LU on I - gamma P^pi).
PolicyIterationResult policy_iteration_detailed(const FiniteMdp& mdp, std::size_t max_iterations = 10000);
PolicyIterationResult policy_iteration(const FiniteMdp& mdp);

/// Exact V^pi by solving (I - gamma P^pi) V = R^pi.
std::vector<double> evaluate_policy(const FiniteMdp& mdp, const PolicyVector& policy);

/// Q(s, a) = R(s, a) + gamma * sum_s' P(s'|s,a) V(s').
QTable q_from_values(const FiniteMdp& mdp, const std::vector<double>& v);

/// argmax_a Q(s, a) per state, lowest action index on ties.
PolicyVector greedy_policy(const QTable& q);

/// ||T Q - Q|| for the Bellman optimality operator T.
double bellman_residual(const FiniteMdp& mdp, const QTable& q);

}  // namespace greybox
