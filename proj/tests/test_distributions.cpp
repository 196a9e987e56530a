#include <doctest.h>

#include <cmath>

#include "dpsm/distributions.hpp"
#include "dpsm/montecarlo.hpp"

using namespace dpsm;

namespace {

// Frozen with 40-digit arithmetic from the closed form.
constexpr double kSigmaSq05 = 16.52876331190636397;
constexpr double kSigmaSq1 = 4.0075256866555044951;
constexpr double kSigmaSq2 = 0.88821258327470153906;
constexpr double kGammaStar1 = 0.41673743492888243343;
constexpr double kExpSqrt2 = 4.1132503787829275172;

// Breakpoint-aware quadrature of the staircase density: every piece is
// constant, so sampling each piece at its midpoint integrates it exactly;
// the mass beyond K whole bands is b^{K+1} analytically.
struct StairQuad {
    double mass = 0.0;
    double second_moment = 0.0;
};

StairQuad staircase_quadrature(const NoiseSpec& spec) {
    const double eps = spec.epsilon;
    const double b = std::exp(-eps);
    const double gamma = staircase_optimal_gamma(eps);
    const double amp = std::sqrt(spec.variance() / staircase_optimal_gamma_variance(eps));
    const int bands = static_cast<int>(std::ceil(40.0 * std::log(10.0) / eps)) + 2;

    double mass = 0.0, m2 = 0.0;
    auto piece = [&](double lo, double hi) {
        const double x0 = lo * amp, x1 = hi * amp;
        const double f = spec.density(0.5 * (x0 + x1));
        mass += 2.0 * f * (x1 - x0);
        m2 += 2.0 * f * (x1 * x1 * x1 - x0 * x0 * x0) / 3.0;
    };
    piece(0.0, gamma);
    for (int k = 0; k < bands; ++k) piece(gamma + k, gamma + k + 1);
    StairQuad q;
    q.mass = mass + std::pow(b, bands + 1); // analytic tail mass
    q.second_moment = m2;                   // tail second moment < 1e-12 by band count
    return q;
}

} // namespace

TEST_CASE("sigma_star_sq matches the closed form and is monotone") {
    CHECK(sigma_star_sq(0.5) == doctest::Approx(kSigmaSq05).epsilon(1e-13));
    CHECK(sigma_star_sq(1.0) == doctest::Approx(kSigmaSq1).epsilon(1e-13));
    CHECK(sigma_star_sq(2.0) == doctest::Approx(kSigmaSq2).epsilon(1e-13));
    CHECK(sigma_star_sq(1.0) > sigma_star_sq(2.0));
    CHECK(sigma_star_sq(20.0) < 1e-4);
    double prev = sigma_star_sq(0.05);
    for (double e = 0.06; e < 20.0; e *= 1.37) {
        CHECK(sigma_star_sq(e) < prev);
        prev = sigma_star_sq(e);
    }
    CHECK_THROWS_AS(sigma_star_sq(0.0), std::domain_error);
    CHECK_THROWS_AS(sigma_star_sq(-1.0), std::domain_error);
    CHECK_THROWS_AS(sigma_star_sq(std::numeric_limits<double>::quiet_NaN()), std::domain_error);
}

TEST_CASE("epsilon_from_variance inverts sigma_star_sq") {
    CHECK(epsilon_from_variance(sigma_star_sq(1.7)) == doctest::Approx(1.7).epsilon(1e-9));
    CHECK(epsilon_from_variance(sigma_star_sq(0.1)) == doctest::Approx(0.1).epsilon(1e-9));
    // log grid round trip, absolute error <= 1e-8
    for (double e = 0.05; e <= 20.0; e *= 1.23) {
        CHECK(std::abs(epsilon_from_variance(sigma_star_sq(e)) - e) <= 1e-8 * std::max(1.0, e));
    }
    // monotone: smaller variance -> larger epsilon
    CHECK(epsilon_from_variance(0.1) > epsilon_from_variance(1.0));
    CHECK_THROWS_AS(epsilon_from_variance(0.0), std::domain_error);
    CHECK_THROWS_AS(epsilon_from_variance(-2.0), std::domain_error);
}

TEST_CASE("staircase width derivation reproduces the target variance") {
    // the guard against mis-derivation: breakpoint quadrature of the density
    // must return mass 1 and second moment sigma_star_sq(eps)
    for (double eps : {0.5, 1.0, 2.0, 5.0}) {
        const NoiseSpec spec = NoiseSpec::staircase(eps);
        const StairQuad q = staircase_quadrature(spec);
        CHECK(q.mass == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(q.second_moment == doctest::Approx(sigma_star_sq(eps)).epsilon(1e-9));
    }
    CHECK(staircase_optimal_gamma(1.0) == doctest::Approx(kGammaStar1).epsilon(1e-13));
}

TEST_CASE("noise spec variances") {
    CHECK(NoiseSpec::staircase(1.0).variance() == doctest::Approx(kSigmaSq1).epsilon(1e-13));
    CHECK(NoiseSpec::scaled_staircase(1.0, 0.5).variance() ==
          doctest::Approx(0.25 * kSigmaSq1).epsilon(1e-13));
    CHECK(NoiseSpec::laplace(3.0).variance() == 3.0);
    CHECK(NoiseSpec::gaussian(4.0).variance() == 4.0);
    CHECK_THROWS_AS(NoiseSpec::laplace(0.0), std::domain_error);
    CHECK_THROWS_AS(NoiseSpec::scaled_staircase(1.0, 0.0), std::domain_error);
}

TEST_CASE("sampler moments at 1e6 draws") {
    const std::uint64_t n = 1'000'000;
    auto moments = [&](const NoiseSpec& spec, std::uint64_t seed) {
        Rng rng(seed);
        const NoiseSampler s(spec);
        Welford mean_acc, var_acc;
        for (std::uint64_t i = 0; i < n; ++i) {
            const double x = s(rng);
            mean_acc.add(x);
            var_acc.add(x * x);
        }
        return std::pair{mean_acc, var_acc};
    };

    SUBCASE("unit laplace") {
        auto [m, v] = moments(NoiseSpec::laplace(1.0), 11);
        CHECK(std::abs(v.mean - 1.0) < 0.01);
        CHECK(std::abs(v.mean - 1.0) <= 3.0 * v.stderr_of_mean());
        CHECK(std::abs(m.mean) <= 3.0 * m.stderr_of_mean());
    }
    SUBCASE("staircase eps=1") {
        auto [m, v] = moments(NoiseSpec::staircase(1.0), 12);
        CHECK(std::abs(v.mean - kSigmaSq1) < 0.01 * kSigmaSq1);
        CHECK(std::abs(v.mean - kSigmaSq1) <= 3.0 * v.stderr_of_mean());
        CHECK(std::abs(m.mean) <= 3.0 * m.stderr_of_mean());
    }
    SUBCASE("gaussian variance 4") {
        auto [m, v] = moments(NoiseSpec::gaussian(4.0), 13);
        CHECK(std::abs(m.mean) < 0.01);
        CHECK(std::abs(v.mean - 4.0) < 0.05);
    }
    SUBCASE("scaled staircase keeps unit variance") {
        const double x = 2.0;
        const double eps = epsilon_from_variance(x * x);
        auto [m, v] = moments(NoiseSpec::scaled_staircase(eps, 1.0 / x), 14);
        (void)m;
        CHECK(std::abs(v.mean - 1.0) <= 3.0 * v.stderr_of_mean());
    }
}

TEST_CASE("sampling is reproducible per seed") {
    const NoiseSpec spec = NoiseSpec::staircase(1.3);
    Rng r1(777), r2(777);
    const NoiseSampler s(spec);
    for (int i = 0; i < 100; ++i) CHECK(s(r1) == s(r2));
}

TEST_CASE("dp_ratio closed forms") {
    CHECK(dp_ratio(NoiseSpec::laplace(1.0), 0.0) == doctest::Approx(1.0));
    CHECK(dp_ratio(NoiseSpec::laplace(1.0), 1.0) == doctest::Approx(kExpSqrt2).epsilon(1e-12));
    CHECK(std::isinf(dp_ratio(NoiseSpec::gaussian(1.0), 0.5)));
    CHECK_THROWS_AS(dp_ratio(NoiseSpec::laplace(1.0), 1.5), std::domain_error);
}

TEST_CASE("staircase dp_ratio stays within e^eps on the shift grid") {
    for (double eps : {0.5, 1.0, 2.0}) {
        const NoiseSpec spec = NoiseSpec::staircase(eps);
        const double bound = std::exp(eps) * (1.0 + 1e-6);
        for (int i = -10; i <= 10; ++i) {
            const double shift = i / 10.0;
            CHECK(dp_ratio(spec, shift) <= bound);
        }
        // the sup is attained exactly at unit shift
        CHECK(dp_ratio(spec, 1.0) == doctest::Approx(std::exp(eps)).epsilon(1e-12));
    }
}
