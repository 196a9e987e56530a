#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dpsm/accuracy.hpp"
#include "dpsm/experiments.hpp"
#include "dpsm/montecarlo.hpp"

using namespace dpsm;

namespace {

LinearCode single_node(double x, double eta) {
    LinearCode code;
    code.n_nodes = 1;
    code.eta = eta;
    code.v = Eigen::MatrixXd(1, 2);
    code.v << 1.0, x;
    code.w = code.v;
    code.a = code.v.col(0);
    code.b = code.w.col(0);
    code.noise_a = {NoiseSpec::gaussian(1.0)};
    code.noise_b = code.noise_a;
    return code;
}

LayeredCode acceptance_point() {
    LayeredParams p;
    p.t = 2;
    p.x = 1.0;
    p.alpha1 = 1e-5;
    p.alpha2 = std::pow(1e-5, 2.0 / 3.0);
    return build_layered(p, LayeredNoise::AnalysisUnitGaussian, 1.0);
}

} // namespace

TEST_CASE("product covariance closed forms") {
    const LinearCode one = single_node(0.8, 1.0);
    const CovariancePair cov = product_cov(one);
    const double expect = (1.0 + 0.64) * (1.0 + 0.64);
    CHECK(cov.k1(0, 0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(cov.k2(0, 0) == doctest::Approx(expect - 1.0).epsilon(1e-12));

    // zero-noise code: K2 vanishes
    LinearCode bare;
    bare.n_nodes = 2;
    bare.eta = 1.5;
    bare.v = Eigen::MatrixXd::Ones(2, 1);
    bare.w = bare.v;
    bare.a = bare.v.col(0);
    bare.b = bare.w.col(0);
    CHECK(product_cov(bare).k2.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("product covariance matches simulation") {
    Rng rng(808);
    const LinearCode code = random_code(rng, 2, 3);
    const CovariancePair cov = product_cov(code);
    const CodeSampler sampler(code);
    const DataLaw law = DataLaw::gaussian(code.eta);
    std::array<Welford, 9> acc;
    Rng sim(4242);
    Eigen::VectorXd gam(3), the(3);
    double a = 0.0, b = 0.0;
    for (int s = 0; s < 2'000'000; ++s) {
        sampler.draw(sim, law, a, b, gam, the);
        const Eigen::Vector3d c = gam.cwiseProduct(the);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) acc[static_cast<std::size_t>(3 * i + j)].add(c(i) * c(j));
    }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const Welford& w = acc[static_cast<std::size_t>(3 * i + j)];
            CHECK(std::abs(w.mean - cov.k1(i, j)) <= 3.0 * w.stderr_of_mean());
        }
}

TEST_CASE("snr_a at the acceptance operating point") {
    const LayeredCode lc = acceptance_point();
    const AccuracyReport rep = snr_a(lc.code);
    CHECK(rep.snr_a.as_double() >= 2.9);
    CHECK(rep.snr_a.as_double() <= 3.0);
    CHECK(std::abs(rep.lmse - 0.25) <= 1e-3);
    CHECK(rep.lmse == doctest::Approx(mse_from_snr(1.0, rep.snr_a)).epsilon(1e-12));
}

TEST_CASE("snr_a sentinels") {
    // honest-majority shamir: perfect interpolation
    const LinearCode shamir =
        build_shamir_real(5, 2, {1.0, -1.0, 2.0, -2.0, 3.0}, 1.0, 1.0);
    const AccuracyReport rep = snr_a(shamir);
    CHECK(rep.snr_a.is_infinite());
    CHECK(rep.lmse == 0.0);
    // the interpolation decoder drops out of the weights solve
    const Eigen::VectorXd lag = lagrange_weights_at_zero({1.0, -1.0, 2.0, -2.0, 3.0});
    CHECK((rep.decoder_weights - lag).cwiseAbs().maxCoeff() <= 1e-6);

    // N = t regime: accuracy can never beat privacy
    Rng rng(5150);
    for (int rep_i = 0; rep_i < 20; ++rep_i) {
        const int t = 1 + static_cast<int>(rng.next_u64() % 4);
        const LinearCode code = random_code(rng, t, t);
        const double lmse = snr_a(code).lmse;
        const double sp = snr_p(code, t).snr_p.one_plus();
        const double bound = code.eta * code.eta / sp;
        CHECK(lmse >= bound - 1e-9);
    }
}

TEST_CASE("analytic decoder") {
    Eigen::MatrixXd g(1, 2);
    g << 1.0, -1.0;
    LayeredParams p;
    p.t = 2;
    p.x = 1.0;
    p.alpha1 = 1e-4;
    p.alpha2 = std::pow(1e-4, 2.0 / 3.0);
    p.g = g;
    const LayeredCode lc = build_layered(p, LayeredNoise::AnalysisUnitGaussian, 1.0);
    const Eigen::VectorXd gamma = layered_gamma(lc.params);
    CHECK(gamma(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(gamma(1) == doctest::Approx(0.5).epsilon(1e-12));

    const Eigen::VectorXd dec = analytic_decoder(lc);
    const double mse = decoder_mse(lc.code, dec);
    const double opt = snr_a(lc.code).lmse;
    CHECK(mse >= opt * (1.0 - 1e-10));
    CHECK(mse <= opt * (1.0 + 1e-3));

    LayeredParams t1;
    t1.t = 1;
    t1.x = 1.0;
    t1.alpha1 = 0.1;
    CHECK(layered_gamma(t1).size() == 1);
    CHECK(layered_gamma(t1)(0) == 1.0);

    LayeredParams t3;
    t3.t = 3;
    t3.x = 1.0;
    t3.alpha1 = 1e-4;
    t3.alpha2 = 1e-2;
    const LayeredCode lc3 = build_layered(t3, LayeredNoise::AnalysisUnitGaussian, 1.0);
    const Eigen::VectorXd g3 = layered_gamma(lc3.params);
    CHECK(g3.sum() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(((*lc3.params.g) * g3).norm() <= 1e-10);
}

TEST_CASE("converse holds on random codes and is tight for the layered scheme") {
    Rng rng(20240401);
    for (int rep = 0; rep < 100; ++rep) {
        const int t = 1 + static_cast<int>(rng.next_u64() % 4);
        const int n = t + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(t + 1));
        const LinearCode code = random_code(rng, t, n);
        const ConverseRecord rec = converse_check(code, t);
        CHECK(rec.holds);
        CHECK(rec.holds_privacy_sq);
    }

    const LayeredCode lc = acceptance_point();
    const ConverseRecord rec = converse_check(lc.code, 2);
    CHECK(rec.holds);
    CHECK(rec.lhs / rec.rhs >= 1.0 - 1e-2); // achievability tightness

    CHECK_THROWS_AS(converse_check(lc.code, 1), std::invalid_argument); // N > 2t

    // zero-noise code: sentinels on both sides, vacuously true
    LinearCode bare;
    bare.n_nodes = 2;
    bare.eta = 1.0;
    bare.v = Eigen::MatrixXd::Ones(2, 1);
    bare.w = bare.v;
    bare.a = bare.v.col(0);
    bare.b = bare.w.col(0);
    const ConverseRecord zrec = converse_check(bare, 1);
    CHECK(zrec.holds);
    CHECK(std::isinf(zrec.lhs));
}

TEST_CASE("null vector construction") {
    // empty subset
    const LinearCode one = single_node(2.0, 1.0);
    CHECK(null_vector(one, {}, Side::B).lambda(0) == 1.0);

    // single node [1, x]: ratio is x^2/(1+x^2) = 1/(1 + eta/x^2) at eta=1
    const NullVector nv = null_vector(one, {0}, Side::B);
    const double ratio = nv.lambda(0) * nv.lambda(0) / nv.lambda.squaredNorm();
    CHECK(ratio == doctest::Approx(4.0 / 5.0).epsilon(1e-12));
    CHECK(nv.lambda(0) / nv.lambda(1) == doctest::Approx(-2.0).epsilon(1e-12));

    Rng rng(31337);
    for (int rep = 0; rep < 100; ++rep) {
        const int t = 1 + static_cast<int>(rng.next_u64() % 4);
        const int n = t + 1 + static_cast<int>(rng.next_u64() % 2);
        const LinearCode code = random_code(rng, t, n);
        std::vector<int> subset;
        for (int i = 0; i < n && static_cast<int>(subset.size()) < t; ++i)
            if (rng.coin()) subset.push_back(i);
        const Side side = rng.coin() ? Side::A : Side::B;
        const NullVector v = null_vector(code, subset, side);
        const Eigen::MatrixXd rows = normalized_rows(code, side);
        for (int i : subset) CHECK(std::abs(rows.row(i).dot(v.lambda)) <= 1e-10);
        const double r = v.lambda(0) * v.lambda(0) / v.lambda.squaredNorm();
        const double snr = subset_snr(code, subset, side).one_plus();
        CHECK(r >= 1.0 / snr - 1e-9);
    }
}

TEST_CASE("delta matrix energy equals the decoder MSE") {
    // moderately conditioned operating point: identity to 1e-9
    LayeredParams p;
    p.t = 2;
    p.x = 1.0;
    p.alpha1 = 1e-3;
    p.alpha2 = std::pow(1e-3, 2.0 / 3.0);
    const LayeredCode mid = build_layered(p, LayeredNoise::AnalysisUnitGaussian, 1.0);
    const AccuracyReport mid_rep = snr_a(mid.code);
    CHECK(delta_matrix(mid.code, mid_rep.decoder_weights).squaredNorm() ==
          doctest::Approx(mid_rep.lmse).epsilon(1e-9));

    // at alpha1 = 1e-5 the optimal weights reach 1e5 and the quadratic route
    // cancels ~1.6e11 down to 0.75: cross-route agreement saturates near
    // eps_longdouble * 1.6e11 ~ 2e-8 relative
    const LayeredCode lc = acceptance_point();
    const AccuracyReport rep = snr_a(lc.code);
    const Eigen::MatrixXd delta = delta_matrix(lc.code, rep.decoder_weights);
    CHECK(delta.squaredNorm() == doctest::Approx(rep.lmse).epsilon(1e-6));

    // zero decoder predicts 0: energy eta^2
    const Eigen::MatrixXd d0 =
        delta_matrix(lc.code, Eigen::VectorXd::Zero(lc.code.n_nodes));
    CHECK(d0.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));

    // any perturbation of the optimum can only add energy
    Rng rng(2718);
    for (int rep_i = 0; rep_i < 100; ++rep_i) {
        Eigen::VectorXd pert(lc.code.n_nodes);
        for (int i = 0; i < lc.code.n_nodes; ++i) pert(i) = 1e-3 * rng.gaussian();
        const Eigen::MatrixXd dp = delta_matrix(lc.code, rep.decoder_weights + pert);
        CHECK(dp.squaredNorm() >= delta.squaredNorm() - 1e-15);
    }

    // agreement with the closed-form decoder MSE for arbitrary weights
    Rng rng2(999);
    const LinearCode code = random_code(rng2, 2, 3);
    Eigen::VectorXd d(3);
    d << 0.2, -0.4, 0.7;
    CHECK(delta_matrix(code, d).squaredNorm() ==
          doctest::Approx(decoder_mse(code, d)).epsilon(1e-9));
}

TEST_CASE("gap closes along the tuned sequences") {
    for (double x : {0.5, 1.0, 2.0}) {
        for (int t : {1, 2, 3}) {
            double first = 0.0, last = 0.0;
            for (double n : {1e2, 1e3}) {
                LayeredParams p;
                p.t = t;
                p.x = x;
                p.alpha1 = std::pow(n, -1.5);
                p.alpha2 = 1.0 / n;
                const LayeredCode lc = build_layered(p, LayeredNoise::AnalysisUnitGaussian, 1.0);
                const double sp = snr_p(lc.code, t).snr_p.one_plus();
                const double sa = snr_a(lc.code).snr_a.one_plus();
                const double gap = sp * sp - sa;
                CHECK(gap > 0.0);
                if (n == 1e2)
                    first = gap;
                else
                    last = gap;
            }
            CHECK(last < first);
        }
    }
}

TEST_CASE("sweep rows carry the layered operating point") {
    const LayeredCode lc = acceptance_point();
    const std::string row = sweep_csv_row(lc);
    CHECK(row.rfind("2,3,1,1e-05,", 0) == 0);
    CHECK(std::count(row.begin(), row.end(), ',') == 8);
}

TEST_CASE("closed-form equality and degraded-data direction by simulation") {
    const LayeredCode lc = acceptance_point();
    const AccuracyReport rep = snr_a(lc.code);
    SimOptions opt;
    opt.workers = 4;
    const SimResult full = simulate_lmse(lc.code, rep.decoder_weights,
                                         DataLaw::gaussian(1.0), 400'000, 11, opt);
    CHECK(std::abs(full.mse - rep.lmse) <= 3.0 * full.stderr_);
    const SimResult weak = simulate_lmse(lc.code, rep.decoder_weights,
                                         DataLaw::gaussian(0.5), 400'000, 12, opt);
    CHECK(weak.mse <= rep.lmse + 3.0 * weak.stderr_);
}
