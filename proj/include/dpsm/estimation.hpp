#pragma once

#include <Eigen/Dense>

#include "dpsm/snr.hpp"

namespace dpsm {

namespace detail {
// Extended-precision core shared by the covariance-ratio paths; the sweeps
// drive determinant structure far below double-width pivot resolution.
using MatLD = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VecLD = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
Snr snr_core(const MatLD& k1, const MatLD& k2);
} // namespace detail

// Second-moment pair for a linear observation of a rank-one signal.
// k1 = signal + noise second moments, k2 = noise-only second moments.
// Both symmetric, k2 PSD, k1 - k2 PSD of rank <= 1.
struct CovariancePair {
    Eigen::MatrixXd k1;
    Eigen::MatrixXd k2;

    // Checks symmetry (1e-12 relative), PSD of k2 and k1-k2 (eigenvalues
    // >= -1e-10 * trace), rank of k1-k2 <= 1, det ordering.
    bool valid() const;
};

// det(k1)/det(k2) - 1 via pivoted LDLT factorizations with log-space
// accumulation. A singular k2 does not divide by zero: the ratio is taken
// on the range of k2, and the infinite sentinel is reported exactly when
// the rank-one signal direction leaks into ker(k2) (a noiseless direction
// carrying signal). Redundant observations (duplicated rows in a code) thus
// still produce the finite SNR of the reduced system.
Snr snr_from_cov(const CovariancePair& cov);

struct LmmseSolution {
    Eigen::VectorXd weights;
    bool degenerate = false; // k1 singular: minimum-norm solution
};

// Solves k1 * w = cross. Singular k1 falls back to the minimum-norm
// least-squares solution, flagged degenerate.
LmmseSolution lmmse_weights(const Eigen::MatrixXd& k1, const Eigen::VectorXd& cross);

// signal_power / (1 + snr); the sentinel maps to 0 (perfect recovery).
double mse_from_snr(double signal_power, const Snr& snr);

} // namespace dpsm
