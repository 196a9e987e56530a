#pragma once

#include "dpsm/montecarlo.hpp"

namespace dpsm {

// A is m x l, B is l x k.
struct MatrixDims {
    int m = 1;
    int l = 1;
    int k = 1;
};

struct MatrixSimResult {
    SimResult worst_entry;       // max-over-entries empirical MSE with stderr
    int worst_row = 0;
    int worst_col = 0;
    double scalar_lmse = 0.0;        // eta^2 / (1 + SNR_a) of the scalar code
    double entry_signal_power = 0.0; // E[(AB)[m,k]^2] = l * eta^2 under iid entries
    double entry_lmse_closed = 0.0;  // entry_signal_power / (1 + SNR_a)
};

// Entrywise extension: the scalar code is applied independently to every
// entry of A and B (fresh noise vector per entry, same cross-node
// correlation within an entry), each node multiplies its noisy matrices and
// the decoder combines node outputs entrywise with the scalar weights.
// Entries are drawn iid from the law (the independence the equivalence
// needs); correlated-entry laws are not offered.
MatrixSimResult simulate_matrix_lmse(const LinearCode& code, const MatrixDims& dims,
                                     const DataLaw& law, std::uint64_t n, std::uint64_t seed,
                                     const SimOptions& opt = {});

struct MatrixCovCheck {
    double max_rel_err = 0.0; // deviation from K1 = l*K1bar and K2 = l*K2bar
};

// Assembles the matrix-case product second moments analytically from the
// factorized per-entry moments (double sum over entry pairs, iid cross terms
// included as zeros) and compares against l times the scalar matrices.
MatrixCovCheck matrix_cov_identity_check(const LinearCode& code, int l);

} // namespace dpsm
