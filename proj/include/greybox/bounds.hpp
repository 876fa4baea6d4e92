#pragma once

#include "greybox/random.hpp"
#include "greybox/structure.hpp"

#include <cstdint>
#include <span>
#include <string>

namespace greybox {

/// Inputs shared by the concentration bounds. beta = 1 / (1 - gamma).
struct BoundInputs {
    double gamma = 0.9;
    std::uint64_t num_pairs = 1;  // N = |S||A|
    double delta = 0.1;
    double lipschitz = 1.0;       // uniform L
    double sigma_mu = 0.0;        // sum of per-parameter standard deviations
    std::uint64_t n_k = 1;

    double beta() const { return 1.0 / (1.0 - gamma); }
    /// Throws std::invalid_argument naming the first bad field.
    void validate() const;
};

/// Bound on E||mu_hat - mu*||_2: sigma_mu / sqrt(n_k). Throws for n_k = 0.
double lemma1_bound(double sigma_mu, std::uint64_t n_k);

struct Lemma2Constants {
    double c_pv = 0.0;
    double b_pv = 0.0;
};

Lemma2Constants lemma2_constants(const BoundInputs& in);

/// High-probability sup-norm gap between Q* and the optimal Q of the estimated model.
double theorem1_epsilon(const BoundInputs& in);

enum class SampleRegime { sqrt_log, log, neither };

struct SampleRequirement {
    std::uint64_t n_k = 0;      // smallest n_k with epsilon(n_k) <= target
    double rate_sqrt_log = 0.0; // beta^4 L^2 / eps^2 * log(N/delta)
    double rate_log = 0.0;      // beta^4 L^2 / eps^2 * log(N/delta)^2
    SampleRegime regime = SampleRegime::neither;  // where m sits relative to log N
};

/// Inverts theorem1_epsilon by integer bisection; `in.n_k` is ignored.
/// Throws std::domain_error when 2^62 samples do not suffice.
SampleRequirement samples_for_accuracy(double target_eps, BoundInputs in, std::size_t num_params);

SampleRegime classify_regime(std::size_t num_params, std::uint64_t num_pairs);
std::string to_string(SampleRegime regime);

/// sigma_mu with the worst Bernoulli deviation 1/2 per parameter.
double worst_case_sigma(std::size_t num_params);
/// sigma_mu = sum_i sqrt(p_i (1 - p_i)).
double plugin_sigma(std::span<const double> mu);

struct LipschitzEstimate {
    double value = 0.0;
    std::size_t pairs = 0;  // sampled parameter pairs
};

/// Max over sampled parameter pairs in the box and over (z, s') with
/// P(s'|z) > 0 of |f(mu1) - f(mu2)| / (P(s'|z) ||mu1 - mu2||_2), where P is
/// the row at `reference`. A lower estimate of the uniform constant.
LipschitzEstimate estimate_lipschitz(const StructuralModel& model, std::span<const double> reference,
                                     std::size_t num_pairs, Rng& rng);

}  // namespace greybox
