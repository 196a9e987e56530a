#pragma once

#include <utility>
#include <vector>

#include "dpsm/montecarlo.hpp"

namespace dpsm {

// M-bit uniform quantizer covering [-range, range] with subtractive dither:
// step = 2*range / 2^M, dither uniform on (-step/2, step/2].
struct QuantizerConfig {
    int bits = 8;
    double range = 1.0;

    double step() const { return 2.0 * range / std::exp2(bits); }
};

struct QuantizeResult {
    double value = 0.0;
    bool overload = false;
};

// step * round((x + dither)/step) - dither; lattice points beyond the range
// saturate and set the overload flag. With subtractive dither the error is
// uniform on the cell and independent of the input.
QuantizeResult quantize(double x, const QuantizerConfig& cfg, double dither);

enum class SweepScheme { Layered, ShamirReal };

struct SweepPoint {
    double delta = 0.0;
    int min_bits = 0;
    double overload_rate = 0.0;
    double mse = 0.0;     // Monte Carlo estimate at min_bits
    double stderr_ = 0.0;
};

// Excess-MSE estimate of a quantized run against the same run without
// quantization, on common random numbers: mean of
// (AB - sum d_i QGamma_i QTheta_i)^2 - (AB - sum d_i Gamma_i Theta_i)^2.
// Pairing removes the O(1) infinite-precision variance from the estimator,
// which is what makes small-delta cells affordable.
struct ExcessEstimate {
    double mean_excess = 0.0;
    double stderr_ = 0.0;
    double overload_rate = 0.0;
    double ideal_mse_closed = 0.0; // closed-form MSE of the decoder, no quantization
};
ExcessEstimate quantized_excess(const LinearCode& code, const Eigen::VectorXd& decoder,
                                const QuantizerConfig& cfg, const DataLaw& law, std::uint64_t n,
                                std::uint64_t seed, const SimOptions& opt = {});

// Retunes alpha1 (with alpha2 = alpha1^{2/3}) so the quantization-free
// excess over the limiting MSE eta^2 x^4/(eta + x^2)^2 equals delta/2.
double calibrate_layered_alpha1(int t, double x, double eta, double delta);

// For each target delta (decreasing), binary-searches the least bit budget M
// such that the Monte Carlo MSE is within delta of the infinite-precision
// MSE with 3-standard-error confidence. Layered uses N = t+1 with alpha1
// retuned per delta; shamir uses N = 2t+1 with the Lagrange decoder.
// The quantizer range starts at 8 predicted standard deviations of the node
// inputs and doubles while the overload rate exceeds 1e-4.
std::vector<SweepPoint> precision_sweep(SweepScheme scheme, int t,
                                        const std::vector<double>& target_deltas, double eta,
                                        double x, std::uint64_t seed, const SimOptions& opt = {},
                                        std::uint64_t samples_per_cell = 0);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_ = 0.0;
};

// Least-squares slope of min_bits against log2(1/delta). Requires >= 4
// points spanning >= 3 orders of magnitude in delta.
SlopeFit slope_fit(const std::vector<std::pair<double, double>>& curve);
double slope_estimate(const std::vector<SweepPoint>& curve);

// Default evaluation points for the shamir sweep: 1, -1, 2, -2, ...
std::vector<double> default_eval_points(int n);

} // namespace dpsm
