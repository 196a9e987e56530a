#pragma once

#include <string>
#include <vector>

#include "dpsm/estimation.hpp"
#include "dpsm/privacy.hpp"
#include "dpsm/schemes.hpp"

namespace dpsm {

struct AccuracyReport {
    Snr snr_a;
    double lmse = 0.0;                // eta^2 / (1 + snr_a); 0 when infinite
    Eigen::VectorXd decoder_weights;  // length N
    bool degenerate_weights = false;

    std::string to_json(int indent = -1) const;
};

// Product second moments: K1[i][j] = G_A[i][j] * G_B[i][j] (A-side and
// B-side randomness are independent, so the expectation factorizes),
// K2[i][j] = K1[i][j] - a_i b_i a_j b_j eta^2.
CovariancePair product_cov(const LinearCode& code);

// Determinant-ratio SNR of the decoder plus the optimal linear weights
// (K1 w = c with c_i = a_i b_i eta^2) and the closed-form LMSE.
AccuracyReport snr_a(const LinearCode& code);

// The layered decoder assembled from the nulling coefficients gamma
// (sum gamma_i g_i = 0, sum gamma_i = 1) and a 2x2 LMMSE on the combined
// observation pair. Returns N decoder weights; its MSE is >= the optimum
// but within (1 + 1e-3) of it for small alpha.
Eigen::VectorXd analytic_decoder(const LayeredCode& layered);

// Nulling coefficients alone (length t).
Eigen::VectorXd layered_gamma(const LayeredParams& params);

// MSE achieved by an arbitrary decoder d on the code (closed form,
// full-power data): eta^2 - 2 d.c + d.K1 d.
double decoder_mse(const LinearCode& code, const Eigen::VectorXd& decoder);

struct ConverseRecord {
    double lhs = 0.0;            // 1 + SNR_a (inf for the sentinel)
    double rhs = 0.0;            // min over t-subsets of the split product
    bool holds = false;          // lhs <= rhs * (1 + 1e-9)
    std::vector<int> worst_split_s; // S achieving rhs; complement is implied
    Side worst_split_side = Side::A; // side assigned to S in the minimizer
    double rhs_privacy_sq = 0.0;   // (1 + SNR_p)^2
    bool holds_privacy_sq = false;

    std::string to_json(int indent = -1) const;
};

// Split converse: (1+SNR_a) <= (1+SNR_S^side)(1+SNR_{S^c}^other) minimized
// over t-subsets and both side assignments; also the worst-privacy form (1+SNR_p)^2 against
// SNR_p. Requires N <= 2t.
ConverseRecord converse_check(const LinearCode& code, int t);

struct NullVector {
    Eigen::VectorXd lambda; // in normalized coordinates (data scaled by sqrt(eta))
    bool infinite_snr = false;
};

// lambda = e1 - proj(e1 onto span{w-bar_i : i in subset}) where w-bar are the
// code rows in normalized coordinates. Guarantees lambda.w-bar_i = 0 on the
// subset and lambda_1^2/||lambda||^2 >= 1/(1+SNR_subset^side). When e1 lies
// in the span the subset has infinite SNR and any unit vector of the
// orthogonal complement is returned, flagged.
NullVector null_vector(const LinearCode& code, const std::vector<int>& subset, Side side);

// Normalized code row matrix for one side: row i = [coeff_i sqrt(eta),
// v(i,k) sigma_k ...]; the coordinates' random variables are then
// uncorrelated with unit variance.
Eigen::MatrixXd normalized_rows(const LinearCode& code, Side side);

// Error operator Delta = sum_i d_i vbar_i wbar_i^T - diag(eta, 0, ..., 0) in
// normalized coordinates. ||Delta||_F^2 equals the decoder's MSE at full
// data power; for the optimal decoder it equals eta^2/(1+SNR_a).
Eigen::MatrixXd delta_matrix(const LinearCode& code, const Eigen::VectorXd& decoder);

// CSV row for layered sweeps:
// t,N,x,alpha1,alpha2,snr_p,snr_a,lmse,gap with gap = (1+snr_p)^2 - (1+snr_a).
std::string sweep_csv_row(const LayeredCode& layered);

} // namespace dpsm
