#pragma once

#include <cstdint>
#include <vector>

#include "dpsm/schemes.hpp"
#include "dpsm/snr.hpp"

namespace dpsm {

// Zero-mean data law with E[X^2] = eta by parameterization.
struct DataLaw {
    enum class Kind { Gaussian, Rademacher, Uniform };
    Kind kind = Kind::Gaussian;
    double eta = 1.0;

    static DataLaw gaussian(double eta) { return {Kind::Gaussian, eta}; }
    static DataLaw rademacher(double eta) { return {Kind::Rademacher, eta}; }
    static DataLaw uniform(double eta) { return {Kind::Uniform, eta}; }

    double draw(Rng& rng) const;
};

struct SimResult {
    double mse = 0.0;
    double stderr_ = 0.0; // sample std of squared errors / sqrt(n)
    std::uint64_t n_samples = 0;
    std::uint64_t seed = 0;

    std::string to_json(int indent = -1) const;
};

// Execution policy for the block-parallel kernels. Work is split into
// `workers` blocks; block k draws from the substream
// mt19937_64(substream_seed(seed, k)) and blocks merge in index order, so a
// run is a pure function of (seed, workers) regardless of thread count.
// The serial path executes the same blocks on one thread and is the
// reference the parallel kernel is tested against (bit-identical results).
struct SimOptions {
    int workers = 4;
    bool parallel = true;
};

// End-to-end decode simulation: per sample draw (A, B) and all noise
// coordinates, form node outputs Ctilde_i, decode with the given weights and
// accumulate (AB - Chat)^2.
SimResult simulate_lmse(const LinearCode& code, const Eigen::VectorXd& decoder,
                        const DataLaw& law, std::uint64_t n, std::uint64_t seed,
                        const SimOptions& opt = {});

// Adversary simulation: fits the best linear estimator of the chosen input
// from the subset's node inputs on n/2 training samples (streaming normal
// equations), then evaluates its MSE on n/2 held-out samples.
SimResult simulate_adversary(const LinearCode& code, const std::vector<int>& subset, Side side,
                             const DataLaw& law, std::uint64_t n, std::uint64_t seed,
                             const SimOptions& opt = {});

// Streaming mean/variance accumulator (Welford) with deterministic merge.
struct Welford {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    void merge(const Welford& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double d = o.mean - mean;
        const double nn = static_cast<double>(n + o.n);
        mean += d * static_cast<double>(o.n) / nn;
        m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / nn;
        n += o.n;
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double stderr_of_mean() const {
        return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
    }
};

namespace detail {

// Runs `workers` blocks of a kernel; fn(block_index, block_samples, rng,
// accumulator). Results merge in block order. The OpenMP path and the
// serial path execute identical per-block work.
template <class BlockFn>
Welford run_blocks(std::uint64_t n, std::uint64_t seed, const SimOptions& opt, BlockFn fn) {
    const int workers = opt.workers < 1 ? 1 : opt.workers;
    std::vector<Welford> acc(static_cast<std::size_t>(workers));
    const std::uint64_t base = n / static_cast<std::uint64_t>(workers);
    const std::uint64_t rem = n % static_cast<std::uint64_t>(workers);
    if (opt.parallel) {
#pragma omp parallel for schedule(static)
        for (int k = 0; k < workers; ++k) {
            const std::uint64_t nk = base + (static_cast<std::uint64_t>(k) < rem ? 1 : 0);
            Rng rng(substream_seed(seed, static_cast<std::uint64_t>(k)));
            fn(k, nk, rng, acc[static_cast<std::size_t>(k)]);
        }
    } else {
        for (int k = 0; k < workers; ++k) {
            const std::uint64_t nk = base + (static_cast<std::uint64_t>(k) < rem ? 1 : 0);
            Rng rng(substream_seed(seed, static_cast<std::uint64_t>(k)));
            fn(k, nk, rng, acc[static_cast<std::size_t>(k)]);
        }
    }
    Welford total;
    for (const auto& a : acc) total.merge(a);
    return total;
}

} // namespace detail

// Per-sample encoder state shared by the simulation kernels: draws all noise
// coordinates and evaluates the node inputs for one sample.
class CodeSampler {
  public:
    explicit CodeSampler(const LinearCode& code);

    // Draws fresh (A, B, noise) and fills gammas/thetas (length N).
    void draw(Rng& rng, const DataLaw& law, double& a_out, double& b_out,
              Eigen::VectorXd& gammas, Eigen::VectorXd& thetas) const;

  private:
    const LinearCode* code_;
    std::vector<NoiseSampler> samplers_a_;
    std::vector<NoiseSampler> samplers_b_;
};

} // namespace dpsm
