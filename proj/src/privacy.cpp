#include "dpsm/privacy.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "dpsm/estimation.hpp"

namespace dpsm {

namespace {

void for_each_subset(int n, int t, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> idx(static_cast<std::size_t>(t));
    for (int i = 0; i < t; ++i) idx[static_cast<std::size_t>(i)] = i;
    if (t == 0) {
        fn({});
        return;
    }
    while (true) {
        fn(idx);
        int i = t - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - t + i) --i;
        if (i < 0) break;
        ++idx[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < t; ++k)
            idx[static_cast<std::size_t>(k)] = idx[static_cast<std::size_t>(k - 1)] + 1;
    }
}

double binomial(int n, int t) {
    double r = 1.0;
    for (int i = 0; i < t; ++i) r = r * (n - i) / (i + 1);
    return r;
}

} // namespace

Snr subset_snr(const LinearCode& code, const std::vector<int>& subset, Side side) {
    if (subset.empty()) return Snr::finite(0.0);
    for (int i : subset)
        if (i < 0 || i >= code.n_nodes) throw std::invalid_argument("subset index out of range");
    const int s = static_cast<int>(subset.size());
    Eigen::VectorXd sig(s);
    const Eigen::VectorXd& coeff = side == Side::A ? code.a : code.b;
    for (int i = 0; i < s; ++i) sig(i) = coeff(subset[static_cast<std::size_t>(i)]);
    CovariancePair cov;
    cov.k2 = side == Side::A ? code.noise_cov_a(subset) : code.noise_cov_b(subset);
    cov.k1 = cov.k2 + code.eta * sig * sig.transpose();
    return snr_from_cov(cov);
}

PrivacyReport snr_p(const LinearCode& code, int t) {
    if (t < 0 || t > code.n_nodes) throw std::invalid_argument("snr_p: t out of range");
    if (binomial(code.n_nodes, t) > 1e5)
        throw std::invalid_argument("snr_p: subset count exceeds the 1e5 cap");
    PrivacyReport report;
    report.snr_p = Snr::finite(0.0);
    bool first = true;
    for_each_subset(code.n_nodes, t, [&](const std::vector<int>& subset) {
        const Snr sa = subset_snr(code, subset, Side::A);
        const Snr sb = subset_snr(code, subset, Side::B);
        report.per_subset.emplace(subset, std::make_pair(sa, sb));
        const Snr worst = max(sa, sb);
        // strict > keeps the lexicographically smallest maximizer
        if (first || worst >= report.snr_p) {
            if (first || !(report.snr_p >= worst)) {
                report.snr_p = worst;
                report.worst_subset = subset;
            }
            first = false;
        }
    });
    return report;
}

double adversary_mse(const LinearCode& code, const std::vector<int>& subset, Side side) {
    if (subset.empty()) return code.eta;
    return mse_from_snr(code.eta, subset_snr(code, subset, side));
}

double dp_bound_layered(const LayeredParams& params, double epsilon_star) {
    if (params.t < 1) throw std::invalid_argument("dp_bound_layered: t must be >= 1");
    if (!(epsilon_star > 0.0))
        throw std::invalid_argument("dp_bound_layered: epsilon_star must be positive");
    if (params.t == 1) return epsilon_star; // scaled-shift argument: (x+a1)R1 is still eps*-DP
    if (!params.g) throw std::invalid_argument("dp_bound_layered: params.g required for t >= 2");
    const Eigen::MatrixXd& g = *params.g;
    const int t = params.t;
    if (params.alpha2 <= 0.0) return std::numeric_limits<double>::infinity();

    double worst = epsilon_star; // the subset {1..t} (node t+1 excluded)
    // Subsets containing node t+1 pick t-1 of the t leading nodes, i.e. drop one.
    for (int drop = 0; drop < t; ++drop) {
        Eigen::MatrixXd gs(t - 1, t - 1);
        int c = 0;
        for (int jcol = 0; jcol < t; ++jcol) {
            if (jcol == drop) continue;
            gs.col(c++) = g.col(jcol);
        }
        // g' = ones^T inv(G_S), i.e. solve G_S^T y = ones.
        Eigen::FullPivLU<Eigen::MatrixXd> lut(gs.transpose().eval());
        if (!lut.isInvertible()) {
            worst = std::numeric_limits<double>::infinity(); // cannot occur under C1
            continue;
        }
        const Eigen::VectorXd gprime = lut.solve(Eigen::VectorXd::Ones(t - 1));
        const double bound = epsilon_star + std::sqrt(2.0) * params.alpha1 /
                                                 (params.alpha2 * params.x) *
                                                 gprime.cwiseAbs().sum();
        worst = std::max(worst, bound);
    }
    return worst;
}

double dp_bound_iid(int n_colluders, double epsilon_per_node) {
    if (n_colluders < 1 || !(epsilon_per_node > 0.0))
        throw std::invalid_argument("dp_bound_iid: counts must be positive");
    return n_colluders * epsilon_per_node;
}

namespace {

nlohmann::json snr_to_json(const Snr& s) {
    return nlohmann::json{{"infinite", s.infinite}, {"value", s.infinite ? 0.0 : s.value}};
}

} // namespace

std::string PrivacyReport::to_json(int indent) const {
    nlohmann::json jd;
    jd["snr_p"] = snr_to_json(snr_p);
    jd["worst_subset"] = worst_subset;
    nlohmann::json subsets = nlohmann::json::array();
    for (const auto& [subset, pair] : per_subset) {
        subsets.push_back(nlohmann::json{{"subset", subset},
                                         {"snr_a_side", snr_to_json(pair.first)},
                                         {"snr_b_side", snr_to_json(pair.second)}});
    }
    jd["per_subset"] = std::move(subsets);
    if (dp_epsilon_bound)
        jd["dp_epsilon_bound"] = *dp_epsilon_bound;
    else
        jd["dp_epsilon_bound"] = nullptr;
    return jd.dump(indent);
}

} // namespace dpsm
