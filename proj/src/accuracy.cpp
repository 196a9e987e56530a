#include "dpsm/accuracy.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace dpsm {

namespace {

using detail::MatLD;
using detail::VecLD;

// Second moments of the node inputs in extended precision, straight from
// the code: G[i][j] = eta c_i c_j + sum_k var_k m(i,1+k) m(j,1+k).
MatLD second_moment_ld(const Eigen::MatrixXd& m, const std::vector<NoiseSpec>& specs,
                       const Eigen::VectorXd& coeff, double eta) {
    const MatLD mld = m.cast<long double>();
    const VecLD c = coeff.cast<long double>();
    MatLD g = static_cast<long double>(eta) * c * c.transpose();
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const long double var = static_cast<long double>(specs[k].variance());
        g.noalias() +=
            var * mld.col(1 + static_cast<Eigen::Index>(k)) *
            mld.col(1 + static_cast<Eigen::Index>(k)).transpose();
    }
    return g;
}

struct ProductCovLD {
    MatLD k1;
    MatLD k2;
    VecLD cross; // E[AB * Ctilde_i] = a_i b_i eta^2
};

ProductCovLD product_cov_ld(const LinearCode& code) {
    const MatLD ga = second_moment_ld(code.v, code.noise_a, code.a, code.eta);
    const MatLD gb = second_moment_ld(code.w, code.noise_b, code.b, code.eta);
    ProductCovLD out;
    out.k1 = ga.cwiseProduct(gb);
    const long double eta2 =
        static_cast<long double>(code.eta) * static_cast<long double>(code.eta);
    const VecLD ab = code.a.cwiseProduct(code.b).cast<long double>();
    out.k2 = out.k1 - eta2 * ab * ab.transpose();
    out.cross = eta2 * ab;
    return out;
}

} // namespace

CovariancePair product_cov(const LinearCode& code) {
    const ProductCovLD ld = product_cov_ld(code);
    CovariancePair cov;
    cov.k1 = ld.k1.cast<double>();
    cov.k2 = ld.k2.cast<double>();
    return cov;
}

AccuracyReport snr_a(const LinearCode& code) {
    const ProductCovLD cov = product_cov_ld(code);
    AccuracyReport report;
    report.snr_a = detail::snr_core(cov.k1, cov.k2);
    report.lmse = mse_from_snr(code.eta * code.eta, report.snr_a);
    Eigen::FullPivLU<MatLD> lu(cov.k1);
    lu.setThreshold(static_cast<long double>(1e-14));
    if (lu.isInvertible()) {
        report.decoder_weights = lu.solve(cov.cross).cast<double>();
        report.degenerate_weights = false;
    } else {
        const LmmseSolution sol =
            lmmse_weights(cov.k1.cast<double>(), cov.cross.cast<double>());
        report.decoder_weights = sol.weights;
        report.degenerate_weights = sol.degenerate;
    }
    return report;
}

Eigen::VectorXd layered_gamma(const LayeredParams& params) {
    const int t = params.t;
    if (t == 1) return Eigen::VectorXd::Ones(1);
    if (!params.g) throw std::invalid_argument("layered_gamma: params.g required for t >= 2");
    // Solve [ones^T; G] gamma = e1: sum gamma = 1 and G gamma = 0.
    Eigen::MatrixXd m(t, t);
    m.row(0).setOnes();
    m.bottomRows(t - 1) = *params.g;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(t);
    rhs(0) = 1.0;
    return m.fullPivLu().solve(rhs);
}

double decoder_mse(const LinearCode& code, const Eigen::VectorXd& decoder) {
    if (decoder.size() != code.n_nodes)
        throw std::invalid_argument("decoder_mse: decoder length mismatch");
    const ProductCovLD cov = product_cov_ld(code);
    const VecLD d = decoder.cast<long double>();
    const long double eta2 =
        static_cast<long double>(code.eta) * static_cast<long double>(code.eta);
    const long double mse = eta2 - 2.0L * d.dot(cov.cross) + d.dot(cov.k1 * d);
    return static_cast<double>(std::max(mse, 0.0L));
}

Eigen::VectorXd analytic_decoder(const LayeredCode& layered) {
    const LinearCode& code = layered.code;
    const int t = layered.params.t;
    const int n = code.n_nodes;
    const Eigen::VectorXd gamma = layered_gamma(layered.params);

    // Mapping [y1; y2] = D^T Ctilde with y1 the node t+1 output and y2 the
    // gamma combination of nodes 1..t.
    MatLD d_map = MatLD::Zero(n, 2);
    d_map(n - 1, 0) = 1.0L;
    for (int i = 0; i < t; ++i) d_map(i, 1) = static_cast<long double>(gamma(i));

    const ProductCovLD cov = product_cov_ld(code);
    const MatLD ky = d_map.transpose() * cov.k1 * d_map;
    const VecLD cy = d_map.transpose() * cov.cross;
    const VecLD u = Eigen::FullPivLU<MatLD>(ky).solve(cy);
    return (d_map * u).cast<double>();
}

ConverseRecord converse_check(const LinearCode& code, int t) {
    if (code.n_nodes > 2 * t)
        throw std::invalid_argument("converse_check: requires N <= 2t (converse regime)");
    ConverseRecord rec;
    const AccuracyReport acc = snr_a(code);
    rec.lhs = acc.snr_a.one_plus();

    const PrivacyReport priv = snr_p(code, std::min(t, code.n_nodes));
    rec.rhs_privacy_sq = priv.snr_p.one_plus() * priv.snr_p.one_plus();
    rec.holds_privacy_sq =
        rec.lhs <= rec.rhs_privacy_sq * (1.0 + 1e-9) || std::isinf(rec.rhs_privacy_sq);

    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_s;
    Side best_side = Side::A;
    std::vector<int> all(static_cast<std::size_t>(code.n_nodes));
    for (int i = 0; i < code.n_nodes; ++i) all[static_cast<std::size_t>(i)] = i;

    std::function<void(const std::vector<int>&)> eval = [&](const std::vector<int>& s) {
        std::vector<int> comp;
        comp.reserve(all.size() - s.size());
        std::size_t k = 0;
        for (int i : all) {
            if (k < s.size() && s[k] == i) {
                ++k;
                continue;
            }
            comp.push_back(i);
        }
        const double a_s = subset_snr(code, s, Side::A).one_plus();
        const double b_s = subset_snr(code, s, Side::B).one_plus();
        const double a_c = subset_snr(code, comp, Side::A).one_plus();
        const double b_c = subset_snr(code, comp, Side::B).one_plus();
        const double prod_a = a_s * b_c; // A on S, B on complement
        const double prod_b = b_s * a_c;
        if (prod_a < best) {
            best = prod_a;
            best_s = s;
            best_side = Side::A;
        }
        if (prod_b < best) {
            best = prod_b;
            best_s = s;
            best_side = Side::B;
        }
    };

    // lexicographic subset enumeration keeps the tie-break deterministic
    std::vector<int> idx(static_cast<std::size_t>(t));
    for (int i = 0; i < t; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
        eval(idx);
        int i = t - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == code.n_nodes - t + i) --i;
        if (i < 0) break;
        ++idx[static_cast<std::size_t>(i)];
        for (int k2 = i + 1; k2 < t; ++k2)
            idx[static_cast<std::size_t>(k2)] = idx[static_cast<std::size_t>(k2 - 1)] + 1;
    }

    rec.rhs = best;
    rec.worst_split_s = best_s;
    rec.worst_split_side = best_side;
    rec.holds = rec.lhs <= rec.rhs * (1.0 + 1e-9) || std::isinf(rec.rhs);
    return rec;
}

Eigen::MatrixXd normalized_rows(const LinearCode& code, Side side) {
    const Eigen::MatrixXd& m = side == Side::A ? code.v : code.w;
    const std::vector<NoiseSpec>& specs = side == Side::A ? code.noise_a : code.noise_b;
    Eigen::MatrixXd out = m;
    out.col(0) *= std::sqrt(code.eta);
    for (std::size_t k = 0; k < specs.size(); ++k)
        out.col(1 + static_cast<Eigen::Index>(k)) *= std::sqrt(specs[k].variance());
    return out;
}

NullVector null_vector(const LinearCode& code, const std::vector<int>& subset, Side side) {
    const Eigen::MatrixXd rows = normalized_rows(code, side);
    const Eigen::Index dim = rows.cols();
    NullVector out;
    if (subset.empty()) {
        out.lambda = Eigen::VectorXd::Zero(dim);
        out.lambda(0) = 1.0;
        return out;
    }
    if (static_cast<Eigen::Index>(subset.size()) > dim)
        throw std::invalid_argument("null_vector: subset larger than the coordinate dimension");

    Eigen::MatrixXd span(dim, static_cast<Eigen::Index>(subset.size()));
    for (std::size_t i = 0; i < subset.size(); ++i)
        span.col(static_cast<Eigen::Index>(i)) = rows.row(subset[i]).transpose();

    // Orthonormal basis of the span via thin SVD with rank truncation.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(span, Eigen::ComputeThinU);
    const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    const double tol = smax * 1e-12 * static_cast<double>(dim);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > tol) ++rank;
    const Eigen::MatrixXd q = svd.matrixU().leftCols(rank);

    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(dim);
    e1(0) = 1.0;
    Eigen::VectorXd lambda = e1 - q * (q.transpose() * e1);
    if (lambda.norm() <= 1e-9) {
        // e1 in the span: infinite-SNR case; pick any unit vector orthogonal
        // to the span (rank < dim is guaranteed since subset size <= t < dim).
        out.infinite_snr = true;
        Eigen::FullPivHouseholderQR<Eigen::MatrixXd> qr(span);
        Eigen::MatrixXd qfull = qr.matrixQ();
        out.lambda = qfull.col(dim - 1); // orthogonal complement direction
        // re-orthogonalize against the span defensively
        out.lambda -= q * (q.transpose() * out.lambda);
        out.lambda.normalize();
        return out;
    }
    out.lambda = lambda;
    return out;
}

Eigen::MatrixXd delta_matrix(const LinearCode& code, const Eigen::VectorXd& decoder) {
    if (decoder.size() != code.n_nodes)
        throw std::invalid_argument("delta_matrix: decoder length mismatch");
    // extended-precision accumulation: optimal weights grow like 1/alpha1 and
    // the outer products cancel down to O(1) entries
    const MatLD vb = normalized_rows(code, Side::A).cast<long double>();
    const MatLD wb = normalized_rows(code, Side::B).cast<long double>();
    MatLD delta = MatLD::Zero(vb.cols(), wb.cols());
    for (int i = 0; i < code.n_nodes; ++i)
        delta.noalias() +=
            static_cast<long double>(decoder(i)) * vb.row(i).transpose() * wb.row(i);
    delta(0, 0) -= static_cast<long double>(code.eta);
    return delta.cast<double>();
}

std::string sweep_csv_row(const LayeredCode& layered) {
    const PrivacyReport priv = snr_p(layered.code, layered.params.t);
    const AccuracyReport acc = snr_a(layered.code);
    const double sp = priv.snr_p.as_double();
    const double sa = acc.snr_a.as_double();
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d,%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g",
                  layered.params.t, layered.code.n_nodes, layered.params.x,
                  layered.params.alpha1, layered.params.alpha2, sp, sa, acc.lmse,
                  (1.0 + sp) * (1.0 + sp) - (1.0 + sa));
    return buf;
}

namespace {

nlohmann::json snr_to_json(const Snr& s) {
    return nlohmann::json{{"infinite", s.infinite}, {"value", s.infinite ? 0.0 : s.value}};
}

} // namespace

std::string AccuracyReport::to_json(int indent) const {
    nlohmann::json jd;
    jd["snr_a"] = snr_to_json(snr_a);
    jd["lmse"] = lmse;
    jd["decoder_weights"] =
        std::vector<double>(decoder_weights.data(), decoder_weights.data() + decoder_weights.size());
    jd["degenerate_weights"] = degenerate_weights;
    return jd.dump(indent);
}

std::string ConverseRecord::to_json(int indent) const {
    nlohmann::json jd;
    jd["lhs_one_plus_snr_a"] = std::isinf(lhs) ? nlohmann::json("inf") : nlohmann::json(lhs);
    jd["rhs_split_min"] = std::isinf(rhs) ? nlohmann::json("inf") : nlohmann::json(rhs);
    jd["holds"] = holds;
    jd["worst_split_s"] = worst_split_s;
    jd["worst_split_side"] = worst_split_side == Side::A ? "A" : "B";
    jd["rhs_privacy_sq"] =
        std::isinf(rhs_privacy_sq) ? nlohmann::json("inf") : nlohmann::json(rhs_privacy_sq);
    jd["holds_privacy_sq"] = holds_privacy_sq;
    return jd.dump(indent);
}

} // namespace dpsm
