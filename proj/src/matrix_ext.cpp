#include "dpsm/matrix_ext.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dpsm/accuracy.hpp"
#include "dpsm/estimation.hpp"

namespace dpsm {

MatrixSimResult simulate_matrix_lmse(const LinearCode& code, const MatrixDims& dims,
                                     const DataLaw& law, std::uint64_t n, std::uint64_t seed,
                                     const SimOptions& opt) {
    if (dims.m < 1 || dims.l < 1 || dims.k < 1)
        throw std::invalid_argument("simulate_matrix_lmse: dims must be >= 1");
    const int nn = code.n_nodes;
    const int ma = code.noise_dim_a();
    const int mb = code.noise_dim_b();
    const AccuracyReport acc_scalar = snr_a(code);
    const Eigen::VectorXd decoder = acc_scalar.decoder_weights;

    std::vector<NoiseSampler> sa, sb;
    for (const auto& s : code.noise_a) sa.emplace_back(s);
    for (const auto& s : code.noise_b) sb.emplace_back(s);

    const int entries = dims.m * dims.k;
    const int workers = opt.workers < 1 ? 1 : opt.workers;
    std::vector<std::vector<Welford>> per_entry(
        static_cast<std::size_t>(workers),
        std::vector<Welford>(static_cast<std::size_t>(entries)));

    detail::run_blocks(n, seed, opt, [&](int wk, std::uint64_t nk, Rng& rng, Welford& unused) {
        (void)unused;
        auto& cells = per_entry[static_cast<std::size_t>(wk)];
        Eigen::MatrixXd amat(dims.m, dims.l), bmat(dims.l, dims.k);
        // per node: noisy input matrices
        std::vector<Eigen::MatrixXd> atil(static_cast<std::size_t>(nn)),
            btil(static_cast<std::size_t>(nn));
        for (std::uint64_t smp = 0; smp < nk; ++smp) {
            for (int r = 0; r < dims.m; ++r)
                for (int c = 0; c < dims.l; ++c) amat(r, c) = law.draw(rng);
            for (int r = 0; r < dims.l; ++r)
                for (int c = 0; c < dims.k; ++c) bmat(r, c) = law.draw(rng);
            for (int i = 0; i < nn; ++i) {
                atil[static_cast<std::size_t>(i)] = code.a(i) * amat;
                btil[static_cast<std::size_t>(i)] = code.b(i) * bmat;
            }
            // fresh scalar noise vector per entry; coherent across nodes.
            // accumulation runs coordinate-by-coordinate to match the scalar
            // kernel's operation order (dims 1x1x1 reduces to it bit-exactly)
            for (int r = 0; r < dims.m; ++r)
                for (int c = 0; c < dims.l; ++c)
                    for (int q = 0; q < ma; ++q) {
                        const double draw = sa[static_cast<std::size_t>(q)](rng);
                        for (int i = 0; i < nn; ++i)
                            atil[static_cast<std::size_t>(i)](r, c) += code.v(i, 1 + q) * draw;
                    }
            for (int r = 0; r < dims.l; ++r)
                for (int c = 0; c < dims.k; ++c)
                    for (int q = 0; q < mb; ++q) {
                        const double draw = sb[static_cast<std::size_t>(q)](rng);
                        for (int i = 0; i < nn; ++i)
                            btil[static_cast<std::size_t>(i)](r, c) += code.w(i, 1 + q) * draw;
                    }
            Eigen::MatrixXd truth = amat * bmat;
            Eigen::MatrixXd decoded = Eigen::MatrixXd::Zero(dims.m, dims.k);
            for (int i = 0; i < nn; ++i)
                decoded.noalias() +=
                    decoder(i) * (atil[static_cast<std::size_t>(i)] * btil[static_cast<std::size_t>(i)]);
            for (int r = 0; r < dims.m; ++r)
                for (int c = 0; c < dims.k; ++c) {
                    const double err = truth(r, c) - decoded(r, c);
                    cells[static_cast<std::size_t>(r * dims.k + c)].add(err * err);
                }
        }
    });

    MatrixSimResult out;
    out.scalar_lmse = acc_scalar.lmse;
    out.entry_signal_power = static_cast<double>(dims.l) * code.eta * code.eta;
    out.entry_lmse_closed = mse_from_snr(out.entry_signal_power, acc_scalar.snr_a);

    double worst = -1.0;
    for (int e = 0; e < entries; ++e) {
        Welford merged;
        for (int wk = 0; wk < workers; ++wk)
            merged.merge(per_entry[static_cast<std::size_t>(wk)][static_cast<std::size_t>(e)]);
        if (merged.mean > worst) {
            worst = merged.mean;
            out.worst_entry = SimResult{merged.mean, merged.stderr_of_mean(), merged.n, seed};
            out.worst_row = e / dims.k;
            out.worst_col = e % dims.k;
        }
    }
    return out;
}

MatrixCovCheck matrix_cov_identity_check(const LinearCode& code, int l) {
    if (l < 1) throw std::invalid_argument("matrix_cov_identity_check: l must be >= 1");
    const CovariancePair scalar = product_cov(code);
    const Eigen::MatrixXd ga = code.second_moment_a();
    const Eigen::MatrixXd gb = code.second_moment_b();
    const int n = code.n_nodes;

    // Matrix-case assembly from the factorized second moments: the (i,j)
    // product moment for one output entry sums over l inner-product pairs;
    // matched pairs contribute G_A*G_B, mismatched pairs contribute the
    // cross-correlations of distinct data entries, identically zero under
    // the iid entry assumption.
    Eigen::MatrixXd k1m(n, n), k2m(n, n);
    const double cross_data = 0.0; // E[A_u A_v] for u != v
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double acc1 = 0.0;
            for (int u = 0; u < l; ++u) {
                acc1 += ga(i, j) * gb(i, j);
                for (int v = 0; v < l; ++v)
                    if (v != u)
                        acc1 += (code.a(i) * code.a(j) * cross_data) *
                                (code.b(i) * code.b(j) * cross_data);
            }
            k1m(i, j) = acc1;
            // signal term of one entry: a_i b_i a_j b_j E[(AB)[m,k]]^2 parts,
            // l * eta^2 under iid entries
            k2m(i, j) = acc1 - code.a(i) * code.b(i) * code.a(j) * code.b(j) *
                                   (static_cast<double>(l) * code.eta * code.eta);
        }

    const Eigen::MatrixXd ref1 = static_cast<double>(l) * scalar.k1;
    const Eigen::MatrixXd ref2 = static_cast<double>(l) * scalar.k2;
    double rel = 0.0;
    const double scale1 = std::max(ref1.cwiseAbs().maxCoeff(), 1e-300);
    const double scale2 = std::max(ref2.cwiseAbs().maxCoeff(), 1e-300);
    rel = std::max(rel, (k1m - ref1).cwiseAbs().maxCoeff() / scale1);
    rel = std::max(rel, (k2m - ref2).cwiseAbs().maxCoeff() / scale2);
    return MatrixCovCheck{rel};
}

} // namespace dpsm
