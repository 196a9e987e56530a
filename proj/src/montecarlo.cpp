#include "dpsm/montecarlo.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace dpsm {

double DataLaw::draw(Rng& rng) const {
    switch (kind) {
        case Kind::Gaussian: return std::sqrt(eta) * rng.gaussian();
        case Kind::Rademacher: return rng.coin() ? std::sqrt(eta) : -std::sqrt(eta);
        case Kind::Uniform: return rng.uniform(-std::sqrt(3.0 * eta), std::sqrt(3.0 * eta));
    }
    return 0.0;
}

CodeSampler::CodeSampler(const LinearCode& code) : code_(&code) {
    samplers_a_.reserve(code.noise_a.size());
    for (const auto& s : code.noise_a) samplers_a_.emplace_back(s);
    samplers_b_.reserve(code.noise_b.size());
    for (const auto& s : code.noise_b) samplers_b_.emplace_back(s);
}

void CodeSampler::draw(Rng& rng, const DataLaw& law, double& a_out, double& b_out,
                       Eigen::VectorXd& gammas, Eigen::VectorXd& thetas) const {
    const LinearCode& code = *code_;
    a_out = law.draw(rng);
    b_out = law.draw(rng);
    const int n = code.n_nodes;
    gammas = code.a * a_out;
    thetas = code.b * b_out;
    for (std::size_t k = 0; k < samplers_a_.size(); ++k) {
        const double r = samplers_a_[k](rng);
        for (int i = 0; i < n; ++i) gammas(i) += code.v(i, 1 + static_cast<Eigen::Index>(k)) * r;
    }
    for (std::size_t k = 0; k < samplers_b_.size(); ++k) {
        const double s = samplers_b_[k](rng);
        for (int i = 0; i < n; ++i) thetas(i) += code.w(i, 1 + static_cast<Eigen::Index>(k)) * s;
    }
}

SimResult simulate_lmse(const LinearCode& code, const Eigen::VectorXd& decoder,
                        const DataLaw& law, std::uint64_t n, std::uint64_t seed,
                        const SimOptions& opt) {
    if (decoder.size() != code.n_nodes)
        throw std::invalid_argument("simulate_lmse: decoder length mismatch");
    if (n < 1000) throw std::invalid_argument("simulate_lmse: need n >= 1e3");
    const CodeSampler sampler(code);
    const Welford total =
        detail::run_blocks(n, seed, opt, [&](int, std::uint64_t nk, Rng& rng, Welford& acc) {
            Eigen::VectorXd gammas(code.n_nodes), thetas(code.n_nodes);
            double a = 0.0, b = 0.0;
            for (std::uint64_t s = 0; s < nk; ++s) {
                sampler.draw(rng, law, a, b, gammas, thetas);
                const double chat = decoder.dot(gammas.cwiseProduct(thetas));
                const double err = a * b - chat;
                acc.add(err * err);
            }
        });
    return SimResult{total.mean, total.stderr_of_mean(), total.n, seed};
}

SimResult simulate_adversary(const LinearCode& code, const std::vector<int>& subset, Side side,
                             const DataLaw& law, std::uint64_t n, std::uint64_t seed,
                             const SimOptions& opt) {
    if (n < 1000) throw std::invalid_argument("simulate_adversary: need n >= 1e3");
    const int s = static_cast<int>(subset.size());
    const CodeSampler sampler(code);
    const std::uint64_t n_train = n / 2;
    const std::uint64_t n_eval = n - n_train;

    Eigen::VectorXd fit = Eigen::VectorXd::Zero(s);
    if (s > 0) {
        // Streaming normal equations on the training half. Per-worker moment
        // blocks merge in index order, so the fit is deterministic too.
        struct Moments {
            Eigen::MatrixXd yy;
            Eigen::VectorXd yx;
        };
        std::vector<Moments> blocks(static_cast<std::size_t>(opt.workers < 1 ? 1 : opt.workers),
                                    Moments{Eigen::MatrixXd::Zero(s, s), Eigen::VectorXd::Zero(s)});
        detail::run_blocks(
            n_train, seed * 2 + 1, opt, [&](int k, std::uint64_t nk, Rng& rng, Welford& acc) {
                Eigen::VectorXd gammas(code.n_nodes), thetas(code.n_nodes), y(s);
                double a = 0.0, b = 0.0;
                auto& mom = blocks[static_cast<std::size_t>(k)];
                for (std::uint64_t i = 0; i < nk; ++i) {
                    sampler.draw(rng, law, a, b, gammas, thetas);
                    const Eigen::VectorXd& inputs = side == Side::A ? gammas : thetas;
                    for (int q = 0; q < s; ++q) y(q) = inputs(subset[static_cast<std::size_t>(q)]);
                    mom.yy.noalias() += y * y.transpose();
                    mom.yx.noalias() += y * (side == Side::A ? a : b);
                    acc.add(0.0);
                }
            });
        Eigen::MatrixXd yy = Eigen::MatrixXd::Zero(s, s);
        Eigen::VectorXd yx = Eigen::VectorXd::Zero(s);
        for (const auto& m : blocks) {
            yy += m.yy;
            yx += m.yx;
        }
        fit = yy.completeOrthogonalDecomposition().solve(yx);
    }

    const Welford total = detail::run_blocks(
        n_eval, seed * 2 + 2, opt, [&](int, std::uint64_t nk, Rng& rng, Welford& acc) {
            Eigen::VectorXd gammas(code.n_nodes), thetas(code.n_nodes);
            double a = 0.0, b = 0.0;
            for (std::uint64_t i = 0; i < nk; ++i) {
                sampler.draw(rng, law, a, b, gammas, thetas);
                const Eigen::VectorXd& inputs = side == Side::A ? gammas : thetas;
                double est = 0.0;
                for (int q = 0; q < s; ++q)
                    est += fit(q) * inputs(subset[static_cast<std::size_t>(q)]);
                const double target = side == Side::A ? a : b;
                const double err = target - est;
                acc.add(err * err);
            }
        });
    return SimResult{total.mean, total.stderr_of_mean(), n, seed};
}

std::string SimResult::to_json(int indent) const {
    nlohmann::json jd;
    jd["mse"] = mse;
    jd["stderr"] = stderr_;
    jd["n_samples"] = n_samples;
    jd["seed"] = seed;
    return jd.dump(indent);
}

} // namespace dpsm
