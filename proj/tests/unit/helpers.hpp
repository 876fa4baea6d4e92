#pragma once

#include "greybox/mdp.hpp"

#include <vector>

namespace testing {

// Small hand-built MDPs. Rows are given densely per (s, a).
inline greybox::FiniteMdp dense_mdp(std::size_t S, std::size_t A, const std::vector<std::vector<double>>& rows,
                                    const std::vector<double>& reward, double gamma,
                                    greybox::RewardRange range = {-10.0, 10.0}) {
    greybox::MdpBuilder b(S, A, gamma, range);
    for (std::size_t z = 0; z < S * A; ++z) {
        std::vector<greybox::StateIndex> next;
        std::vector<double> prob;
        for (std::size_t s = 0; s < S; ++s) {
            if (rows[z][s] != 0.0) {
                next.push_back(greybox::StateIndex(s));
                prob.push_back(rows[z][s]);
            }
        }
        b.add_row(reward[z], next, prob);
    }
    return std::move(b).build();
}

}  // namespace testing
