#include "dpsm/estimation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dpsm {

namespace detail {

// The determinant work runs in extended precision: the experiments drive
// det ratios whose information sits 10+ orders of magnitude below the matrix
// scale (alpha_2^4-level structure inside O(1) entries), which double-width
// pivots cannot resolve.
using MatLD = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VecLD = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

namespace {

constexpr long double kLdEps = std::numeric_limits<long double>::epsilon();

// log(det) through pivoted LDLT. Fails (returns false) when a pivot falls
// to the rounding floor of the factorization, i.e. the matrix is singular
// at working precision.
bool logdet_ldlt(const MatLD& m, long double& logdet) {
    if (m.rows() == 0) {
        logdet = 0.0L;
        return true;
    }
    Eigen::LDLT<MatLD> ldlt(m);
    if (ldlt.info() != Eigen::Success) return false;
    const VecLD d = ldlt.vectorD();
    const long double dmax = d.cwiseAbs().maxCoeff();
    const long double tol = dmax * kLdEps * 4096.0L * static_cast<long double>(m.rows());
    logdet = 0.0L;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (!(d(i) > tol)) return false;
        logdet += std::log(d(i));
    }
    return true;
}

} // namespace

Snr snr_core(const MatLD& k1, const MatLD& k2) {
    const Eigen::Index n = k1.rows();
    if (n == 0) return Snr::finite(0.0);

    long double ld1 = 0.0L, ld2 = 0.0L;
    if (logdet_ldlt(k2, ld2) && logdet_ldlt(k1, ld1)) {
        const long double snr = std::expm1(ld1 - ld2);
        return Snr::finite(static_cast<double>(std::max(snr, 0.0L)));
    }

    // Singular (or near-singular) noise covariance. Recover the rank-one
    // signal direction from k1 - k2 = s s^T and work on the range of k2:
    // the sentinel applies exactly when the signal leaks into ker(k2).
    const MatLD diff = k1 - k2;
    Eigen::SelfAdjointEigenSolver<MatLD> esd(diff);
    Eigen::Index imax;
    const long double lmax = esd.eigenvalues().maxCoeff(&imax);
    const long double scale = std::max<long double>(std::abs(k1.trace()), 1.0L);
    if (!(lmax > 64.0L * kLdEps * scale)) return Snr::finite(0.0); // no signal
    const VecLD s = std::sqrt(lmax) * esd.eigenvectors().col(imax);

    Eigen::SelfAdjointEigenSolver<MatLD> es2(k2);
    const long double emax = std::max(es2.eigenvalues().maxCoeff(), 0.0L);
    const long double floor =
        std::max(emax * kLdEps * 4096.0L * static_cast<long double>(n),
                 std::numeric_limits<long double>::min());
    long double quad = 0.0L;    // s^T pinv(k2) s over the range of k2
    long double leak_sq = 0.0L; // energy of s inside ker(k2)
    for (Eigen::Index i = 0; i < n; ++i) {
        const long double lam = es2.eigenvalues()(i);
        const long double proj = es2.eigenvectors().col(i).dot(s);
        if (lam > floor)
            quad += proj * proj / lam;
        else
            leak_sq += proj * proj;
    }
    if (leak_sq > 1e-20L * s.squaredNorm()) return Snr::inf();
    return Snr::finite(static_cast<double>(quad));
}

} // namespace detail

bool CovariancePair::valid() const {
    if (k1.rows() != k1.cols() || k2.rows() != k2.cols() || k1.rows() != k2.rows())
        return false;
    const double scale1 = std::max(1e-300, k1.cwiseAbs().maxCoeff());
    const double scale2 = std::max(1e-300, k2.cwiseAbs().maxCoeff());
    if ((k1 - k1.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale1) return false;
    if ((k2 - k2.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale2) return false;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(k2);
    const double psd_tol2 = 1e-10 * std::abs(k2.trace());
    if (es2.eigenvalues().minCoeff() < -std::max(psd_tol2, 1e-300)) return false;

    const Eigen::MatrixXd diff = k1 - k2;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esd(diff);
    const double dscale = std::max(std::abs(diff.trace()), 1e-300);
    const auto ev = esd.eigenvalues();
    if (ev.minCoeff() < -1e-10 * dscale) return false;
    int rank = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev(i) > 1e-10 * dscale) ++rank;
    return rank <= 1;
}

Snr snr_from_cov(const CovariancePair& cov) {
    return detail::snr_core(cov.k1.cast<long double>(), cov.k2.cast<long double>());
}

LmmseSolution lmmse_weights(const Eigen::MatrixXd& k1, const Eigen::VectorXd& cross) {
    if (k1.rows() != k1.cols() || k1.rows() != cross.size())
        throw std::invalid_argument("lmmse_weights: dimension mismatch");
    LmmseSolution out;
    detail::MatLD k1ld = k1.cast<long double>();
    Eigen::FullPivLU<detail::MatLD> lu(k1ld);
    lu.setThreshold(static_cast<long double>(1e-14));
    if (lu.isInvertible()) {
        out.weights = lu.solve(cross.cast<long double>().eval()).cast<double>();
        out.degenerate = false;
        return out;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(k1);
    out.weights = cod.solve(cross);
    out.degenerate = true;
    return out;
}

double mse_from_snr(double signal_power, const Snr& snr) {
    if (!(signal_power > 0.0))
        throw std::domain_error("mse_from_snr: signal_power must be positive");
    if (snr.is_infinite()) return 0.0;
    return signal_power / (1.0 + snr.value);
}

} // namespace dpsm
