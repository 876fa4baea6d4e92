#include "greybox/bounds.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace greybox {

void BoundInputs::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma: must lie in (0,1)");
    if (num_pairs == 0) throw std::invalid_argument("num_pairs: must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta: must lie in (0,1)");
    if (!(lipschitz >= 0.0) || !std::isfinite(lipschitz)) throw std::invalid_argument("lipschitz: must be finite and nonnegative");
    if (!(sigma_mu >= 0.0) || !std::isfinite(sigma_mu)) throw std::invalid_argument("sigma_mu: must be finite and nonnegative");
    if (n_k == 0) throw std::invalid_argument("n_k: must be positive");
}

double lemma1_bound(double sigma_mu, std::uint64_t n_k) {
    if (n_k == 0) throw std::invalid_argument("n_k: must be positive");
    return sigma_mu / std::sqrt(double(n_k));
}

Lemma2Constants lemma2_constants(const BoundInputs& in) {
    in.validate();
    const double n = double(in.n_k);
    const double N = double(in.num_pairs);
    const double gb = in.gamma * in.beta();
    Lemma2Constants c;
    c.c_pv = std::sqrt(2.0 / n * std::log(2.0 * N / in.delta));
    c.b_pv = gb * in.lipschitz * in.sigma_mu / std::sqrt(n) +
             std::pow(5.0 * std::pow(gb, 4.0 / 3.0) / n * std::log(6.0 * N / in.delta), 0.75) +
             3.0 * in.beta() * in.beta() / n * std::log(12.0 * N / in.delta);
    return c;
}

double theorem1_epsilon(const BoundInputs& in) {
    in.validate();
    const double n = double(in.n_k);
    const double N = double(in.num_pairs);
    const double b = in.beta();
    const double b2 = b * b;
    const double b3 = b2 * b;
    return in.gamma * b2 * in.lipschitz * in.sigma_mu / std::sqrt(n) +
           std::sqrt(4.0 * b3 / n * std::log(4.0 * N / in.delta)) +
           std::pow(5.0 * std::pow(in.gamma * b2, 4.0 / 3.0) / n * std::log(12.0 * N / in.delta), 0.75) +
           3.0 * b3 / n * std::log(24.0 * N / in.delta);
}

SampleRegime classify_regime(std::size_t num_params, std::uint64_t num_pairs) {
    const double log_n = std::log(double(num_pairs));
    if (double(num_params) <= std::sqrt(log_n)) return SampleRegime::sqrt_log;
    if (double(num_params) <= log_n) return SampleRegime::log;
    return SampleRegime::neither;
}

std::string to_string(SampleRegime regime) {
    switch (regime) {
        case SampleRegime::sqrt_log: return "m <= sqrt(log N)";
        case SampleRegime::log: return "m <= log N";
        case SampleRegime::neither: return "m > log N";
    }
    return "?";
}

SampleRequirement samples_for_accuracy(double target_eps, BoundInputs in, std::size_t num_params) {
    if (!(target_eps > 0.0 && target_eps < 1.0)) throw std::invalid_argument("target_epsilon: must lie in (0,1)");
    constexpr std::uint64_t hi_limit = std::uint64_t(1) << 62;
    const auto eps_at = [&](std::uint64_t n) {
        in.n_k = n;
        return theorem1_epsilon(in);
    };
    if (eps_at(hi_limit) > target_eps) throw std::domain_error("samples_for_accuracy: target unreachable within 2^62 samples");
    std::uint64_t lo = 1, hi = hi_limit;  // eps_at(hi) <= target always
    if (eps_at(lo) <= target_eps) {
        hi = lo;
    } else {
        while (hi - lo > 1) {
            const std::uint64_t mid = lo + (hi - lo) / 2;
            if (eps_at(mid) <= target_eps) hi = mid;
            else lo = mid;
        }
    }
    SampleRequirement req;
    req.n_k = hi;
    const double b = in.beta();
    const double lead = b * b * b * b * in.lipschitz * in.lipschitz / (target_eps * target_eps);
    const double log_term = std::log(double(in.num_pairs) / in.delta);
    req.rate_sqrt_log = lead * log_term;
    req.rate_log = lead * log_term * log_term;
    req.regime = classify_regime(num_params, in.num_pairs);
    return req;
}

double worst_case_sigma(std::size_t num_params) { return 0.5 * double(num_params); }

double plugin_sigma(std::span<const double> mu) {
    double s = 0.0;
    for (double p : mu) s += std::sqrt(std::max(0.0, p * (1.0 - p)));
    return s;
}

namespace {

void random_parameters(const StructuralModel& model, Rng& rng, std::vector<double>& mu) {
    mu.resize(model.num_slots());
    for (std::size_t i = 0; i < model.num_params(); ++i) {
        const auto& p = model.params()[i];
        const std::size_t off = model.slot_offset(i);
        if (p.kind == ParameterKind::bernoulli) {
            mu[off] = p.lower + (p.upper - p.lower) * rng.uniform();
            continue;
        }
        // uniform on the simplex via normalised exponentials
        double total = 0.0;
        for (std::size_t j = 0; j < p.arity; ++j) {
            mu[off + j] = -std::log1p(-rng.uniform());
            total += mu[off + j];
        }
        for (std::size_t j = 0; j < p.arity; ++j) mu[off + j] /= total;
    }
}

}  // namespace

LipschitzEstimate estimate_lipschitz(const StructuralModel& model, std::span<const double> reference,
                                     std::size_t num_pairs, Rng& rng) {
    if (!model.in_bounds(reference)) throw std::invalid_argument("estimate_lipschitz: reference outside the box");
    std::vector<std::size_t> offsets{0};
    for (std::size_t z = 0; z < model.num_pairs(); ++z) offsets.push_back(offsets.back() + model.support(z).size());
    std::vector<double> p_ref(offsets.back()), f1(offsets.back()), f2(offsets.back());
    const auto fill = [&](std::span<const double> mu, std::vector<double>& out) {
        for (std::size_t z = 0; z < model.num_pairs(); ++z)
            model.row(z, mu, std::span<double>(out).subspan(offsets[z], offsets[z + 1] - offsets[z]));
    };
    fill(reference, p_ref);

    LipschitzEstimate est;
    std::vector<double> mu1, mu2;
    for (std::size_t t = 0; t < num_pairs; ++t) {
        random_parameters(model, rng, mu1);
        random_parameters(model, rng, mu2);
        double dist = 0.0;
        for (std::size_t j = 0; j < mu1.size(); ++j) dist += (mu1[j] - mu2[j]) * (mu1[j] - mu2[j]);
        dist = std::sqrt(dist);
        ++est.pairs;
        if (!(dist > 0.0)) continue;
        fill(mu1, f1);
        fill(mu2, f2);
        for (std::size_t e = 0; e < p_ref.size(); ++e) {
            if (!(p_ref[e] > 0.0)) continue;
            est.value = std::max(est.value, std::abs(f1[e] - f2[e]) / (p_ref[e] * dist));
        }
    }
    return est;
}

}  // namespace greybox
