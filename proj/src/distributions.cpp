#include "dpsm/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dpsm {

namespace {

constexpr double kEpsLo = 1e-6;
constexpr double kEpsHi = 1e3;

void check_eps(double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw std::domain_error("sigma_star_sq: epsilon must be positive and finite");
}

} // namespace

double sigma_star_sq(double eps) {
    check_eps(eps);
    const double b = std::exp(-eps);
    const double b23 = std::exp(-2.0 * eps / 3.0);
    const double num = std::cbrt(4.0) * b23 * (1.0 + b23) + b;
    const double den = -std::expm1(-eps); // 1 - e^{-eps}, accurate for small eps
    return num / (den * den);
}

double epsilon_from_variance(double v) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw std::domain_error("epsilon_from_variance: v must be positive and finite");
    double lo = kEpsLo, hi = kEpsHi;
    if (v > sigma_star_sq(lo) || v < sigma_star_sq(hi))
        throw std::domain_error("epsilon_from_variance: v outside invertible range");
    // sigma_star_sq is strictly decreasing; bisect in log(eps).
    double llo = std::log(lo), lhi = std::log(hi);
    for (int it = 0; it < 200 && (lhi - llo) > 1e-13; ++it) {
        double mid = 0.5 * (llo + lhi);
        if (sigma_star_sq(std::exp(mid)) > v)
            llo = mid;
        else
            lhi = mid;
    }
    return std::exp(0.5 * (llo + lhi));
}

double staircase_optimal_gamma(double eps) {
    check_eps(eps);
    const double b = std::exp(-eps);
    return (std::cbrt(b * (1.0 + b) / 2.0) - b) / (-std::expm1(-eps));
}

double staircase_optimal_gamma_variance(double eps) {
    check_eps(eps);
    const double b = std::exp(-eps);
    const double c = std::cbrt(b * (1.0 + b) / 2.0);
    const double den = -std::expm1(-eps);
    return (c * c + b) / (den * den);
}

NoiseSpec NoiseSpec::staircase(double eps) { return scaled_staircase(eps, 1.0); }

NoiseSpec NoiseSpec::scaled_staircase(double eps, double scale) {
    check_eps(eps);
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw std::domain_error("NoiseSpec: staircase scale must be positive");
    NoiseSpec s;
    s.kind = Kind::Staircase;
    s.epsilon = eps;
    s.scale = scale;
    s.var = 0.0;
    return s;
}

NoiseSpec NoiseSpec::laplace(double variance) {
    if (!(variance > 0.0) || !std::isfinite(variance))
        throw std::domain_error("NoiseSpec: variance must be positive");
    NoiseSpec s;
    s.kind = Kind::Laplace;
    s.var = variance;
    return s;
}

NoiseSpec NoiseSpec::gaussian(double variance) {
    if (!(variance > 0.0) || !std::isfinite(variance))
        throw std::domain_error("NoiseSpec: variance must be positive");
    NoiseSpec s;
    s.kind = Kind::Gaussian;
    s.var = variance;
    return s;
}

double NoiseSpec::variance() const {
    switch (kind) {
        case Kind::Staircase: return scale * scale * sigma_star_sq(epsilon);
        case Kind::Laplace: return var;
        case Kind::Gaussian: return var;
    }
    return 0.0;
}

namespace {

// Total stretch applied to the unit-sensitivity optimal-width staircase so
// that Staircase(eps) has variance sigma_star_sq(eps) exactly. Always > 1
// (the target variance exceeds the optimal-width second moment), so the
// stretched density still satisfies the e^eps ratio bound for unit shifts.
double staircase_amplitude(double eps, double scale) {
    return scale * std::sqrt(sigma_star_sq(eps) / staircase_optimal_gamma_variance(eps));
}

// Step level of |x| (in stretched coordinates divided back to unit
// sensitivity): level 0 on [0, gamma), level k on [gamma+k-1, gamma+k).
int staircase_level(double y, double gamma) {
    if (y < gamma) return 0;
    return 1 + static_cast<int>(std::floor(y - gamma));
}

} // namespace

double NoiseSpec::density(double x) const {
    switch (kind) {
        case Kind::Laplace: {
            const double lam = std::sqrt(var / 2.0);
            return std::exp(-std::abs(x) / lam) / (2.0 * lam);
        }
        case Kind::Gaussian: {
            const double inv = 1.0 / std::sqrt(2.0 * M_PI * var);
            return inv * std::exp(-x * x / (2.0 * var));
        }
        case Kind::Staircase: {
            const double b = std::exp(-epsilon);
            const double gamma = staircase_optimal_gamma(epsilon);
            const double amp = staircase_amplitude(epsilon, scale);
            const double a = (1.0 - b) / (2.0 * (gamma * (1.0 - b) + b));
            const double y = std::abs(x) / amp;
            const int level = staircase_level(y, gamma);
            return a * std::pow(b, level) / amp;
        }
    }
    return 0.0;
}

NoiseSampler::NoiseSampler(const NoiseSpec& spec) : kind_(spec.kind) {
    switch (spec.kind) {
        case NoiseSpec::Kind::Staircase:
            b_ = std::exp(-spec.epsilon);
            log_b_ = -spec.epsilon;
            gamma_ = staircase_optimal_gamma(spec.epsilon);
            p_first_ = gamma_ / (gamma_ + b_ * (1.0 - gamma_));
            amp_ = staircase_amplitude(spec.epsilon, spec.scale);
            break;
        case NoiseSpec::Kind::Laplace:
            sigma_ = std::sqrt(spec.var / 2.0); // Laplace scale parameter
            break;
        case NoiseSpec::Kind::Gaussian:
            sigma_ = std::sqrt(spec.var);
            break;
    }
}

double NoiseSampler::operator()(Rng& rng) const {
    switch (kind_) {
        case NoiseSpec::Kind::Laplace: {
            // inverse CDF on a symmetric uniform
            const double u = rng.uniform01() - 0.5;
            return -sigma_ * std::copysign(std::log1p(-2.0 * std::abs(u)), u);
        }
        case NoiseSpec::Kind::Gaussian:
            return sigma_ * rng.gaussian();
        case NoiseSpec::Kind::Staircase: {
            // sign x geometric band index x within-band uniform
            const double sign = rng.coin() ? 1.0 : -1.0;
            const double g = std::floor(std::log(rng.uniform01()) / log_b_);
            const bool first = rng.uniform01() < p_first_;
            const double u = rng.uniform01();
            const double y = first ? g + gamma_ * u : g + gamma_ + (1.0 - gamma_) * u;
            return sign * amp_ * y;
        }
    }
    return 0.0;
}

double sample(const NoiseSpec& spec, Rng& rng) {
    return NoiseSampler(spec)(rng);
}

double dp_ratio(const NoiseSpec& spec, double shift) {
    if (std::abs(shift) > 1.0)
        throw std::domain_error("dp_ratio: |shift| must be <= 1 (sensitivity-1 convention)");
    if (spec.kind == NoiseSpec::Kind::Gaussian)
        return std::numeric_limits<double>::infinity();
    if (shift == 0.0) return 1.0;
    const double sd = std::sqrt(spec.variance());
    const double span = 10.0 * sd;
    const int per_unit = 1000;
    const long n = std::lround(2.0 * span * per_unit);
    double sup = 0.0;
    for (long i = 0; i <= n; ++i) {
        const double x = -span + static_cast<double>(i) / per_unit;
        const double num = spec.density(x);
        const double den = spec.density(x + shift);
        if (den > 0.0) sup = std::max(sup, num / den);
    }
    return sup;
}

} // namespace dpsm
