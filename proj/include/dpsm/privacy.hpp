#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpsm/schemes.hpp"
#include "dpsm/snr.hpp"

namespace dpsm {

// Worst-case adversary analysis over all t-subsets.
struct PrivacyReport {
    Snr snr_p;
    std::vector<int> worst_subset; // lexicographically smallest maximizer
    std::map<std::vector<int>, std::pair<Snr, Snr>> per_subset; // subset -> (snr_A, snr_B)
    std::optional<double> dp_epsilon_bound;

    std::string to_json(int indent = -1) const;
};

// Determinant-ratio SNR of the best linear adversary holding `subset`
// (0-based node indices, any size; empty subset has SNR 0).
Snr subset_snr(const LinearCode& code, const std::vector<int>& subset, Side side);

// Exhaustive scan of all (N choose t) subsets; throws when the count
// exceeds 1e5.
PrivacyReport snr_p(const LinearCode& code, int t);

// eta / (1 + SNR_subset): the best linear adversary's MSE on that side.
double adversary_mse(const LinearCode& code, const std::vector<int>& subset, Side side);

// Worst-case DP parameter of the layered scheme built with dp-staircase
// noise. Subsets without node t+1 see eps*; a subset S containing node t+1
// sees eps* + sqrt(2) (alpha1/(alpha2 x)) sum_i |g'_i| with
// g' = ones^T inv(G_S), G_S the columns of g indexed by S \ {t+1}.
double dp_bound_layered(const LayeredParams& params, double epsilon_star);

// Independent composition.
double dp_bound_iid(int n_colluders, double epsilon_per_node);

} // namespace dpsm
