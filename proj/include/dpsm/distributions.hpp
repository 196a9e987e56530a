#pragma once

#include <cstdint>

#include "dpsm/rng.hpp"

namespace dpsm {

// Squared optimal noise scale for eps-DP at sensitivity 1:
//   (2^{2/3} e^{-2eps/3} (1 + e^{-2eps/3}) + e^{-eps}) / (1 - e^{-eps})^2
// Strictly decreasing in eps. Throws std::domain_error for eps <= 0 or
// non-finite eps.
double sigma_star_sq(double eps);

// Inverse of sigma_star_sq by bracketed bisection over eps in [1e-6, 1e3],
// relative tolerance 1e-10. Throws std::domain_error for v <= 0 or v outside
// the bracket's range.
double epsilon_from_variance(double v);

// Geometry of the variance-optimal staircase density at parameter eps,
// sensitivity 1. Width of the first (tallest) step per unit interval:
//   gamma* = ((b(1+b)/2)^{1/3} - b) / (1 - b),  b = e^{-eps}
double staircase_optimal_gamma(double eps);

// Second moment of the unit-sensitivity staircase with the optimal width:
//   ((b(1+b)/2)^{2/3} + b) / (1 - b)^2
double staircase_optimal_gamma_variance(double eps);

// One noise coordinate. Variants:
//   Staircase(eps)      zero-mean staircase-shaped density; variance is
//                       exactly sigma_star_sq(eps). Realized as the
//                       optimal-width staircase stretched by a fixed
//                       amplitude factor > 1, so the eps-DP density-ratio
//                       bound holds for all shifts up to 1 (with slack).
//   Laplace(variance)
//   Gaussian(variance)
// The staircase additionally carries a scale multiplier: scaled_staircase
// (eps, s) has variance s^2 * sigma_star_sq(eps). It exists for codes that
// fold the noise magnitude into their coefficient matrices.
struct NoiseSpec {
    enum class Kind { Staircase, Laplace, Gaussian };

    Kind kind = Kind::Gaussian;
    double epsilon = 0.0;  // Staircase only
    double scale = 1.0;    // Staircase only
    double var = 1.0;      // Laplace / Gaussian only

    static NoiseSpec staircase(double eps);
    static NoiseSpec scaled_staircase(double eps, double scale);
    static NoiseSpec laplace(double variance);
    static NoiseSpec gaussian(double variance);

    double variance() const;

    // Density at x; the Gaussian/Laplace/staircase closed forms.
    double density(double x) const;

    bool operator==(const NoiseSpec&) const = default;
};

// One draw from the spec's distribution (zero mean, variance spec.variance()).
double sample(const NoiseSpec& spec, Rng& rng);

// sup over a grid of x of density(x)/density(x+shift). Grid: 1e3 points per
// unit interval spanning +-10 standard deviations. Requires |shift| <= 1
// (sensitivity-1 convention; std::domain_error otherwise). Gaussian has an
// unbounded ratio and returns +infinity.
double dp_ratio(const NoiseSpec& spec, double shift);

// Precomputed sampler for hot loops; one object per (spec) built outside the
// sample loop.
class NoiseSampler {
  public:
    explicit NoiseSampler(const NoiseSpec& spec);
    double operator()(Rng& rng) const;

  private:
    NoiseSpec::Kind kind_;
    // staircase
    double b_ = 0.0, log_b_ = 0.0, gamma_ = 0.0, p_first_ = 0.0, amp_ = 0.0;
    // laplace / gaussian
    double sigma_ = 0.0;
};

} // namespace dpsm
