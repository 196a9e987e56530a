#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dpsm/distributions.hpp"

namespace dpsm {

enum class Side { A, B };

// A linear multiplication code. Node i receives
//   Gamma_i = v.row(i) . [A, R_1..R_mA]
//   Theta_i = w.row(i) . [B, S_1..S_mB]
// and outputs Gamma_i * Theta_i. Column 0 of v/w carries the data
// coefficients a_i/b_i; noise coordinates follow, one NoiseSpec each.
// A-side and B-side noise families are independent.
struct LinearCode {
    int n_nodes = 0;
    double eta = 1.0;              // data power bound, E[A^2] <= eta
    Eigen::VectorXd a;             // = v.col(0)
    Eigen::VectorXd b;             // = w.col(0)
    Eigen::MatrixXd v;             // N x (1 + mA)
    Eigen::MatrixXd w;             // N x (1 + mB)
    std::vector<NoiseSpec> noise_a;
    std::vector<NoiseSpec> noise_b;

    int noise_dim_a() const { return static_cast<int>(noise_a.size()); }
    int noise_dim_b() const { return static_cast<int>(noise_b.size()); }

    // N x N second-moment matrices of the node inputs:
    //   G_A[i][j] = eta a_i a_j + sum_k var_k v(i,1+k) v(j,1+k)
    Eigen::MatrixXd second_moment_a() const;
    Eigen::MatrixXd second_moment_b() const;

    // Noise-only covariance restricted to a node subset (sorted indices).
    Eigen::MatrixXd noise_cov_a(const std::vector<int>& subset) const;
    Eigen::MatrixXd noise_cov_b(const std::vector<int>& subset) const;

    void check() const; // invariant checks, throws std::invalid_argument
};

// Parameters of the layered achievable scheme (N = t+1 nodes).
// For t >= 2, g is the (t-1) x t mixing matrix subject to
//   C1: every (t-1) x (t-1) submatrix has smallest singular value >= 1e-8
//   C2: [ones; g] (t x t) has smallest singular value >= 1e-8
struct LayeredParams {
    int t = 1;
    double x = 1.0;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    std::optional<Eigen::MatrixXd> g; // defaulted via default_g when absent
};

enum class LayeredNoise {
    AnalysisUnitGaussian, // unit-variance placeholders; second moments only
    DpStaircase           // R1 = staircase(eps*)/x, eps* = inv(x^2); rest Laplace(1)
};

struct LayeredCode {
    LinearCode code;
    LayeredParams params;        // with g resolved
    double epsilon_star = 0.0;   // set for DpStaircase, else 0
};

// Verifies C1/C2 for a candidate (t-1) x t matrix.
bool layered_conditions_hold(const Eigen::MatrixXd& g, std::string* why = nullptr);

// Deterministic mixing matrix satisfying C1/C2: normalized Vandermonde
// columns (i, i^2, ..., i^{t-1}), with seeded Gaussian resampling as a
// fallback when the Vandermonde fails the verifier (large t).
Eigen::MatrixXd default_g(int t);

// The layered scheme: row t+1 is [1, x, 0...0], rows 1..t add
// [0, alpha1, alpha2 * g_i]. v = w. Throws on C1/C2 violations, naming the
// failed condition.
LayeredCode build_layered(const LayeredParams& params, LayeredNoise noise_kind, double eta);

// Real-valued Shamir sharing: row i of v is [1, x_i s, x_i^2 s, ..., x_i^t s]
// with s = sqrt(noise_variance); t unit-variance noise coordinates per side.
// Evaluation points must be distinct and nonzero.
LinearCode build_shamir_real(int n_nodes, int t, const std::vector<double>& eval_points,
                             double noise_variance, double eta);

// Lagrange weights reconstructing the constant term of a polynomial of
// degree n-1 from its values at the given points.
Eigen::VectorXd lagrange_weights_at_zero(const std::vector<double>& points);

// Baseline: one private staircase noise coordinate per node (block-diagonal
// v); the t-node DP parameter composes as t * epsilon_per_node.
LinearCode build_iid_baseline(int n_nodes, double epsilon_per_node, double eta);

// Closed-form LMSE of the iid baseline (used as the oracle in tests and the
// trade-off baseline curve): SNR_a = N eta^2 / (s^2 (s^2 + 2 eta)), s^2 = sigma_star_sq(e).
double iid_baseline_lmse(int n_nodes, double epsilon_per_node, double eta);

// Complex Shamir baseline, N=3, t=2, x_i = e^{j pi (i-1)/3}. epsilon_bar is
// the optimistic lower bound on the 2-node DP parameter for noise power
// sigma_n_sq; mse is the decoder LMSE via the 3x3 Hermitian determinant
// ratio. Complex arithmetic is confined to this unit.
struct Baseline1Point {
    double epsilon_bar;
    double mse;
    double adversary_snr;
};
Baseline1Point baseline1_point(double sigma_n_sq, double eta);
double baseline1_epsilon_lower(double sigma_n_sq, double eta);

// JSON document {n_nodes, eta, a, b, v, w, noise_specs_a, noise_specs_b}
// with row-major matrices; round-trips bit-exactly for finite doubles.
std::string to_json(const LinearCode& code, int indent = -1);
LinearCode code_from_json(const std::string& text);

} // namespace dpsm
