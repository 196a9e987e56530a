#include "dpsm/precision.hpp"

#include <cmath>
#include <stdexcept>

#include "dpsm/accuracy.hpp"

namespace dpsm {

QuantizeResult quantize(double x, const QuantizerConfig& cfg, double dither) {
    const double step = cfg.step();
    const double y = x + dither;
    double idx = std::round(y / step);
    const double idx_max = std::exp2(cfg.bits - 1);
    QuantizeResult out;
    if (idx > idx_max) {
        idx = idx_max;
        out.overload = true;
    } else if (idx < -idx_max) {
        idx = -idx_max;
        out.overload = true;
    }
    out.value = idx * step - dither;
    return out;
}

namespace {

double predicted_range(const LinearCode& code) {
    const double va = code.second_moment_a().diagonal().maxCoeff();
    const double vb = code.second_moment_b().diagonal().maxCoeff();
    return 8.0 * std::sqrt(std::max(va, vb));
}

struct ExcessAccum {
    Welford diff;
    std::uint64_t overloads = 0;
    std::uint64_t quantizations = 0;
};

} // namespace

ExcessEstimate quantized_excess(const LinearCode& code, const Eigen::VectorXd& decoder,
                                const QuantizerConfig& cfg, const DataLaw& law, std::uint64_t n,
                                std::uint64_t seed, const SimOptions& opt) {
    if (decoder.size() != code.n_nodes)
        throw std::invalid_argument("quantized_excess: decoder length mismatch");
    const CodeSampler sampler(code);
    const double step = cfg.step();
    const int nn = code.n_nodes;

    const int workers = opt.workers < 1 ? 1 : opt.workers;
    std::vector<ExcessAccum> accs(static_cast<std::size_t>(workers));

    detail::run_blocks(n, seed, opt, [&](int wk, std::uint64_t nk, Rng& rng, Welford&) {
        ExcessAccum& acc = accs[static_cast<std::size_t>(wk)];
        Eigen::VectorXd gammas(nn), thetas(nn);
        double a = 0.0, b = 0.0;
        for (std::uint64_t smp = 0; smp < nk; ++smp) {
            sampler.draw(rng, law, a, b, gammas, thetas);
            double ideal = 0.0;
            double d_diff = 0.0; // sum d_i (QGamma QTheta - Gamma Theta)
            for (int i = 0; i < nn; ++i) {
                const double da = (rng.uniform01() - 0.5) * step;
                const double db = (rng.uniform01() - 0.5) * step;
                const QuantizeResult qa = quantize(gammas(i), cfg, da);
                const QuantizeResult qb = quantize(thetas(i), cfg, db);
                acc.overloads += (qa.overload ? 1u : 0u) + (qb.overload ? 1u : 0u);
                acc.quantizations += 2;
                ideal += decoder(i) * gammas(i) * thetas(i);
                // qa*qb - g*t without forming the large cancelling products
                d_diff += decoder(i) * (qa.value * (qb.value - thetas(i)) +
                                        thetas(i) * (qa.value - gammas(i)));
            }
            const double e_ideal = a * b - ideal;
            const double e_full = e_ideal - d_diff;
            acc.diff.add(e_full * e_full - e_ideal * e_ideal);
        }
    });

    Welford total;
    std::uint64_t ov = 0, q = 0;
    for (const auto& acc : accs) {
        total.merge(acc.diff);
        ov += acc.overloads;
        q += acc.quantizations;
    }
    ExcessEstimate out;
    out.mean_excess = total.mean;
    out.stderr_ = total.stderr_of_mean();
    out.overload_rate = q ? static_cast<double>(ov) / static_cast<double>(q) : 0.0;
    out.ideal_mse_closed = decoder_mse(code, decoder);
    return out;
}

double calibrate_layered_alpha1(int t, double x, double eta, double delta) {
    const double limit =
        eta * eta / (1.0 + 2.0 * eta / (x * x) + eta * eta / (x * x * x * x));
    auto excess = [&](double a1) {
        LayeredParams p;
        p.t = t;
        p.x = x;
        p.alpha1 = a1;
        p.alpha2 = std::pow(a1, 2.0 / 3.0);
        const LayeredCode lc = build_layered(p, LayeredNoise::AnalysisUnitGaussian, eta);
        return snr_a(lc.code).lmse - limit;
    };
    const double target = delta / 2.0;
    double lo = 1e-12, hi = 0.25;
    if (excess(hi) < target) return hi; // delta too large to need tuning
    for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-12; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (excess(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return std::sqrt(lo * hi);
}

namespace {

struct CellSetup {
    LinearCode code;
    Eigen::VectorXd decoder;
    double limit_mse = 0.0;
};

CellSetup make_cell(SweepScheme scheme, int t, double eta, double x, double delta) {
    CellSetup cell;
    if (scheme == SweepScheme::Layered) {
        LayeredParams p;
        p.t = t;
        p.x = x;
        p.alpha1 = calibrate_layered_alpha1(t, x, eta, delta);
        p.alpha2 = std::pow(p.alpha1, 2.0 / 3.0);
        const LayeredCode lc = build_layered(p, LayeredNoise::AnalysisUnitGaussian, eta);
        cell.code = lc.code;
        cell.decoder = snr_a(cell.code).decoder_weights;
        cell.limit_mse =
            eta * eta / (1.0 + 2.0 * eta / (x * x) + eta * eta / (x * x * x * x));
    } else {
        const int n = 2 * t + 1;
        cell.code = build_shamir_real(n, t, default_eval_points(n), 1.0, eta);
        std::vector<double> pts = default_eval_points(n);
        cell.decoder = lagrange_weights_at_zero(pts);
        cell.limit_mse = 0.0;
    }
    return cell;
}

} // namespace

std::vector<double> default_eval_points(int n) {
    std::vector<double> pts;
    pts.reserve(static_cast<std::size_t>(n));
    int mag = 1;
    while (static_cast<int>(pts.size()) < n) {
        pts.push_back(mag);
        if (static_cast<int>(pts.size()) < n) pts.push_back(-mag);
        ++mag;
    }
    return pts;
}

std::vector<SweepPoint> precision_sweep(SweepScheme scheme, int t,
                                        const std::vector<double>& target_deltas, double eta,
                                        double x, std::uint64_t seed, const SimOptions& opt,
                                        std::uint64_t samples_per_cell) {
    for (std::size_t i = 1; i < target_deltas.size(); ++i)
        if (!(target_deltas[i] < target_deltas[i - 1]))
            throw std::invalid_argument("precision_sweep: deltas must be decreasing");
    if (samples_per_cell == 0)
        samples_per_cell = scheme == SweepScheme::Layered ? 2'000'000 : 200'000;

    const DataLaw law = DataLaw::gaussian(eta);
    std::vector<SweepPoint> out;
    for (std::size_t di = 0; di < target_deltas.size(); ++di) {
        const double delta = target_deltas[di];
        const CellSetup cell = make_cell(scheme, t, eta, x, delta);
        const double ideal = decoder_mse(cell.code, cell.decoder);

        double range = predicted_range(cell.code);
        // pass criterion: closed-form decoder MSE + excess <= limit + delta,
        // with 3-SE headroom on the Monte Carlo excess
        auto probe = [&](int bits, ExcessEstimate& est) {
            for (int attempt = 0;; ++attempt) {
                QuantizerConfig cfg{bits, range};
                est = quantized_excess(cell.code, cell.decoder, cfg, law, samples_per_cell,
                                       seed ^ (di * 1315423911u) ^
                                           (static_cast<std::uint64_t>(bits) << 32),
                                       opt);
                if (est.overload_rate <= 1e-4 || attempt >= 6) return;
                range *= 2.0;
            }
        };
        auto passes = [&](int bits, ExcessEstimate& est) {
            probe(bits, est);
            return ideal + est.mean_excess + 3.0 * est.stderr_ <= cell.limit_mse + delta;
        };

        int lo = 1, hi = 48;
        ExcessEstimate est_hi;
        if (!passes(hi, est_hi)) {
            out.push_back(SweepPoint{delta, hi, est_hi.overload_rate,
                                     ideal + est_hi.mean_excess, est_hi.stderr_});
            continue;
        }
        ExcessEstimate best = est_hi;
        while (lo < hi) {
            const int mid = lo + (hi - lo) / 2;
            ExcessEstimate est;
            if (passes(mid, est)) {
                hi = mid;
                best = est;
            } else {
                lo = mid + 1;
            }
        }
        out.push_back(
            SweepPoint{delta, hi, best.overload_rate, ideal + best.mean_excess, best.stderr_});
    }
    return out;
}

SlopeFit slope_fit(const std::vector<std::pair<double, double>>& curve) {
    if (curve.size() < 4)
        throw std::invalid_argument("slope_fit: need at least 4 points");
    double dmin = curve.front().first, dmax = curve.front().first;
    for (const auto& [d, m] : curve) {
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
    }
    if (dmax / dmin < 1e3)
        throw std::invalid_argument("slope_fit: deltas must span >= 3 orders of magnitude");

    const double n = static_cast<double>(curve.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [d, m] : curve) {
        const double xv = std::log2(1.0 / d);
        sx += xv;
        sy += m;
        sxx += xv * xv;
        sxy += xv * m;
    }
    const double denom = sxx - sx * sx / n;
    SlopeFit fit;
    fit.slope = (sxy - sx * sy / n) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0.0;
    for (const auto& [d, m] : curve) {
        const double xv = std::log2(1.0 / d);
        const double r = m - (fit.intercept + fit.slope * xv);
        ss_res += r * r;
    }
    fit.stderr_ = curve.size() > 2 ? std::sqrt(ss_res / (n - 2.0) / denom) : 0.0;
    return fit;
}

double slope_estimate(const std::vector<SweepPoint>& curve) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(curve.size());
    for (const auto& p : curve) pts.emplace_back(p.delta, static_cast<double>(p.min_bits));
    return slope_fit(pts).slope;
}

} // namespace dpsm
