#include "greybox/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace greybox {

FiniteMdp::FiniteMdp(std::size_t num_states, std::size_t num_actions,
                     std::vector<std::size_t> row_offsets, std::vector<StateIndex> next,
                     std::vector<double> prob, std::vector<double> reward, double gamma,
                     RewardRange reward_range)
    : num_states_(num_states),
      num_actions_(num_actions),
      row_offsets_(std::move(row_offsets)),
      next_(std::move(next)),
      prob_(std::move(prob)),
      reward_(std::move(reward)),
      gamma_(gamma),
      reward_range_(reward_range) {
    if (num_states_ == 0 || num_actions_ == 0)
        throw ModelError("MDP needs at least one state and one action");
    const std::size_t n = num_states_ * num_actions_;
    if (row_offsets_.size() != n + 1 || row_offsets_.front() != 0 || row_offsets_.back() != next_.size())
        throw ModelError("row offsets do not match the number of state-action pairs");
    if (next_.size() != prob_.size())
        throw ModelError("next-state and probability arrays differ in length");
    if (reward_.size() != n)
        throw ModelError("reward vector must have one entry per state-action pair");
    for (std::size_t z = 0; z < n; ++z) {
        if (row_offsets_[z] > row_offsets_[z + 1])
            throw ModelError("row offsets must be nondecreasing");
    }
    for (StateIndex s : next_) {
        if (s >= num_states_) throw ModelError("next-state index out of range: " + std::to_string(s));
    }
}

RowView FiniteMdp::row(std::size_t z) const {
    const std::size_t begin = row_offsets_[z];
    const std::size_t len = row_offsets_[z + 1] - begin;
    return {std::span<const StateIndex>(next_).subspan(begin, len),
            std::span<const double>(prob_).subspan(begin, len)};
}

double FiniteMdp::probability(std::size_t z, StateIndex s_next) const {
    const RowView r = row(z);
    for (std::size_t j = 0; j < r.size(); ++j) {
        if (r.next[j] == s_next) return r.prob[j];
    }
    return 0.0;
}

MdpBuilder::MdpBuilder(std::size_t num_states, std::size_t num_actions, double gamma, RewardRange range)
    : num_states_(num_states), num_actions_(num_actions), gamma_(gamma), range_(range) {
    reward_.reserve(num_states * num_actions);
    offsets_.reserve(num_states * num_actions + 1);
}

void MdpBuilder::add_row(double reward, std::span<const StateIndex> next, std::span<const double> prob) {
    if (next.size() != prob.size()) throw ModelError("row arrays differ in length");
    for (std::size_t j = 0; j < next.size(); ++j) {
        if (next[j] >= num_states_) throw ModelError("next-state index out of range: " + std::to_string(next[j]));
        if (j > 0 && next[j] <= next[j - 1]) throw ModelError("next states must be strictly increasing");
    }
    reward_.push_back(reward);
    next_.insert(next_.end(), next.begin(), next.end());
    prob_.insert(prob_.end(), prob.begin(), prob.end());
    offsets_.push_back(next_.size());
}

FiniteMdp MdpBuilder::build() && {
    return FiniteMdp(num_states_, num_actions_, std::move(offsets_), std::move(next_), std::move(prob_),
                     std::move(reward_), gamma_, range_);
}

double QTable::max_value(StateIndex s) const {
    const auto row = state_values(s);
    return *std::max_element(row.begin(), row.end());
}

std::string ValidationReport::summary() const {
    if (ok()) return "OK";
    std::ostringstream out;
    for (const auto& v : violations) {
        if (v.pair == std::numeric_limits<std::size_t>::max())
            out << v.what << " (" << v.value << ")\n";
        else
            out << "pair " << v.pair << ": " << v.what << " (" << v.value << ")\n";
    }
    return out.str();
}

ValidationReport validate_mdp(const FiniteMdp& mdp) {
    constexpr std::size_t global = std::numeric_limits<std::size_t>::max();
    ValidationReport report;
    if (!(mdp.gamma() > 0.0 && mdp.gamma() < 1.0))
        report.violations.push_back({global, "discount outside (0,1)", mdp.gamma()});
    const RewardRange range = mdp.reward_range();
    for (std::size_t z = 0; z < mdp.num_pairs(); ++z) {
        const RowView r = mdp.row(z);
        double sum = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (!(r.prob[j] >= 0.0)) report.violations.push_back({z, "negative probability", r.prob[j]});
            sum += r.prob[j];
        }
        if (!(std::abs(sum - 1.0) <= kRowSumTolerance))
            report.violations.push_back({z, "row sum differs from 1", sum});
        const double reward = mdp.reward(z);
        if (!(reward >= range.lower && reward <= range.upper))
            report.violations.push_back({z, "reward outside declared range", reward});
    }
    return report;
}

double sup_norm_diff(const QTable& q1, const QTable& q2) {
    if (q1.num_states() != q2.num_states() || q1.num_actions() != q2.num_actions())
        throw std::invalid_argument("sup_norm_diff: Q tables have different shapes");
    double worst = 0.0;
    const auto a = q1.values();
    const auto b = q2.values();
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

namespace {

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

template <typename T>
T expect_key(std::istream& in, const std::string& key) {
    std::string word;
    T value{};
    if (!(in >> word) || word != key || !(in >> value))
        throw ModelError("malformed MDP file: expected '" + key + "'");
    return value;
}

}  // namespace

void write_mdp(std::ostream& out, const FiniteMdp& mdp) {
    out << "finite-mdp 1\n";
    out << "states " << mdp.num_states() << "\n";
    out << "actions " << mdp.num_actions() << "\n";
    out << "gamma " << format_double(mdp.gamma()) << "\n";
    out << "rewards " << format_double(mdp.reward_range().lower) << " "
        << format_double(mdp.reward_range().upper) << "\n";
    for (std::size_t z = 0; z < mdp.num_pairs(); ++z) {
        const RowView r = mdp.row(z);
        out << format_double(mdp.reward(z)) << " " << r.size();
        for (std::size_t j = 0; j < r.size(); ++j) out << " " << r.next[j] << " " << format_double(r.prob[j]);
        out << "\n";
    }
}

FiniteMdp read_mdp(std::istream& in) {
    const auto version = expect_key<int>(in, "finite-mdp");
    if (version != 1) throw ModelError("unsupported MDP file version " + std::to_string(version));
    const auto num_states = expect_key<std::size_t>(in, "states");
    const auto num_actions = expect_key<std::size_t>(in, "actions");
    const auto gamma = expect_key<double>(in, "gamma");
    RewardRange range;
    range.lower = expect_key<double>(in, "rewards");
    if (!(in >> range.upper)) throw ModelError("malformed MDP file: reward range");

    MdpBuilder builder(num_states, num_actions, gamma, range);
    std::vector<StateIndex> next;
    std::vector<double> prob;
    for (std::size_t z = 0; z < num_states * num_actions; ++z) {
        double reward = 0.0;
        std::size_t k = 0;
        if (!(in >> reward >> k)) throw ModelError("malformed MDP file: row " + std::to_string(z));
        next.resize(k);
        prob.resize(k);
        for (std::size_t j = 0; j < k; ++j) {
            if (!(in >> next[j] >> prob[j])) throw ModelError("malformed MDP file: row " + std::to_string(z));
        }
        builder.add_row(reward, next, prob);
    }
    return std::move(builder).build();
}

}  // namespace greybox
