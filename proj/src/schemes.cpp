#include "dpsm/schemes.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace dpsm {

namespace {

Eigen::MatrixXd second_moment(const Eigen::MatrixXd& m, const std::vector<NoiseSpec>& specs,
                              const Eigen::VectorXd& data, double eta) {
    const Eigen::Index n = m.rows();
    Eigen::MatrixXd g = eta * data * data.transpose();
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const double var = specs[k].variance();
        g.noalias() += var * m.col(1 + static_cast<Eigen::Index>(k)) *
                       m.col(1 + static_cast<Eigen::Index>(k)).transpose();
    }
    (void)n;
    return g;
}

Eigen::MatrixXd noise_cov_subset(const Eigen::MatrixXd& m, const std::vector<NoiseSpec>& specs,
                                 const std::vector<int>& subset) {
    const int s = static_cast<int>(subset.size());
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(s, s);
    for (std::size_t c = 0; c < specs.size(); ++c) {
        const double var = specs[c].variance();
        Eigen::VectorXd col(s);
        for (int i = 0; i < s; ++i) col(i) = m(subset[static_cast<std::size_t>(i)], 1 + static_cast<Eigen::Index>(c));
        k.noalias() += var * col * col.transpose();
    }
    return k;
}

} // namespace

Eigen::MatrixXd LinearCode::second_moment_a() const { return second_moment(v, noise_a, a, eta); }
Eigen::MatrixXd LinearCode::second_moment_b() const { return second_moment(w, noise_b, b, eta); }

Eigen::MatrixXd LinearCode::noise_cov_a(const std::vector<int>& subset) const {
    return noise_cov_subset(v, noise_a, subset);
}
Eigen::MatrixXd LinearCode::noise_cov_b(const std::vector<int>& subset) const {
    return noise_cov_subset(w, noise_b, subset);
}

void LinearCode::check() const {
    if (n_nodes <= 0) throw std::invalid_argument("LinearCode: need at least one node");
    if (v.rows() != n_nodes || w.rows() != n_nodes)
        throw std::invalid_argument("LinearCode: row count mismatch");
    if (v.cols() != 1 + noise_dim_a() || w.cols() != 1 + noise_dim_b())
        throw std::invalid_argument("LinearCode: noise column count mismatch");
    if (a.size() != n_nodes || b.size() != n_nodes)
        throw std::invalid_argument("LinearCode: coefficient length mismatch");
    if ((a - v.col(0)).cwiseAbs().maxCoeff() != 0.0 || (b - w.col(0)).cwiseAbs().maxCoeff() != 0.0)
        throw std::invalid_argument("LinearCode: a/b must equal column 0 of v/w");
    if (!(eta > 0.0)) throw std::invalid_argument("LinearCode: eta must be positive");
}

bool layered_conditions_hold(const Eigen::MatrixXd& g, std::string* why) {
    const Eigen::Index t = g.cols();
    if (g.rows() != t - 1) {
        if (why) *why = "g must be (t-1) x t";
        return false;
    }
    constexpr double kMinSv = 1e-8;
    // C1: every (t-1) x (t-1) submatrix (drop one column) is well conditioned.
    for (Eigen::Index drop = 0; drop < t; ++drop) {
        Eigen::MatrixXd sub(t - 1, t - 1);
        Eigen::Index c = 0;
        for (Eigen::Index j = 0; j < t; ++j) {
            if (j == drop) continue;
            sub.col(c++) = g.col(j);
        }
        if (sub.size() > 0) {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub);
            if (svd.singularValues().minCoeff() < kMinSv) {
                if (why) *why = "C1: a (t-1) x (t-1) submatrix of g is rank deficient";
                return false;
            }
        }
    }
    // C2: [ones; g] has full rank t.
    Eigen::MatrixXd m(t, t);
    m.row(0).setOnes();
    if (t > 1) m.bottomRows(t - 1) = g;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    if (svd.singularValues().minCoeff() < kMinSv) {
        if (why) *why = "C2: [ones; g] is rank deficient";
        return false;
    }
    return true;
}

Eigen::MatrixXd default_g(int t) {
    if (t < 2) throw std::invalid_argument("default_g: t must be >= 2");
    // Vandermonde columns g_i = (i, i^2, ..., i^{t-1}), rows normalized.
    Eigen::MatrixXd g(t - 1, t);
    for (int r = 0; r < t - 1; ++r)
        for (int i = 0; i < t; ++i) g(r, i) = std::pow(static_cast<double>(i + 1), r + 1);
    for (int r = 0; r < t - 1; ++r) g.row(r) /= g.row(r).norm();
    if (layered_conditions_hold(g)) return g;

    for (int retry = 0; retry < 100; ++retry) {
        std::mt19937_64 gen(0x9E3779B9u ^ (static_cast<std::uint64_t>(t) << 32) ^
                            static_cast<std::uint64_t>(retry));
        std::normal_distribution<double> nd;
        for (int r = 0; r < t - 1; ++r) {
            for (int i = 0; i < t; ++i) g(r, i) = nd(gen);
            g.row(r) /= g.row(r).norm();
        }
        if (layered_conditions_hold(g)) return g;
    }
    throw std::logic_error("default_g: no valid mixing matrix after 100 retries");
}

LayeredCode build_layered(const LayeredParams& params, LayeredNoise noise_kind, double eta) {
    if (params.t < 1) throw std::invalid_argument("build_layered: t must be >= 1");
    if (!(params.x > 0.0)) throw std::invalid_argument("build_layered: x must be positive");
    if (params.alpha1 < 0.0 || params.alpha2 < 0.0)
        throw std::invalid_argument("build_layered: alpha1/alpha2 must be non-negative");
    if (!(eta > 0.0)) throw std::invalid_argument("build_layered: eta must be positive");

    LayeredCode out;
    out.params = params;
    const int t = params.t;
    const int n = t + 1;

    if (t >= 2) {
        if (!out.params.g) out.params.g = default_g(t);
        std::string why;
        if (out.params.g->rows() != t - 1 || out.params.g->cols() != t ||
            !layered_conditions_hold(*out.params.g, &why))
            throw std::invalid_argument("build_layered: " + (why.empty() ? "invalid g" : why));
    } else {
        out.params.g.reset();
    }

    LinearCode& code = out.code;
    code.n_nodes = n;
    code.eta = eta;
    code.v = Eigen::MatrixXd::Zero(n, 1 + t);
    // row t+1 (last): [1, x, 0...0]; rows 1..t: [1, x+alpha1, alpha2 * g_i]
    code.v(n - 1, 0) = 1.0;
    code.v(n - 1, 1) = params.x;
    for (int i = 0; i < t; ++i) {
        code.v(i, 0) = 1.0;
        code.v(i, 1) = params.x + params.alpha1;
        for (int r = 0; r < t - 1; ++r) code.v(i, 2 + r) = params.alpha2 * (*out.params.g)(r, i);
    }
    code.w = code.v;
    code.a = code.v.col(0);
    code.b = code.w.col(0);

    switch (noise_kind) {
        case LayeredNoise::AnalysisUnitGaussian:
            code.noise_a.assign(static_cast<std::size_t>(t), NoiseSpec::gaussian(1.0));
            break;
        case LayeredNoise::DpStaircase: {
            out.epsilon_star = epsilon_from_variance(params.x * params.x);
            code.noise_a.clear();
            code.noise_a.push_back(NoiseSpec::scaled_staircase(out.epsilon_star, 1.0 / params.x));
            for (int k = 1; k < t; ++k) code.noise_a.push_back(NoiseSpec::laplace(1.0));
            break;
        }
    }
    code.noise_b = code.noise_a;
    code.check();
    return out;
}

LinearCode build_shamir_real(int n_nodes, int t, const std::vector<double>& eval_points,
                             double noise_variance, double eta) {
    if (n_nodes < 1 || t < 1) throw std::invalid_argument("build_shamir_real: bad sizes");
    if (static_cast<int>(eval_points.size()) != n_nodes)
        throw std::invalid_argument("build_shamir_real: need one evaluation point per node");
    std::set<double> uniq(eval_points.begin(), eval_points.end());
    if (static_cast<int>(uniq.size()) != n_nodes)
        throw std::invalid_argument("build_shamir_real: evaluation points must be distinct");
    for (double x : eval_points)
        if (x == 0.0 || !std::isfinite(x))
            throw std::invalid_argument("build_shamir_real: evaluation points must be nonzero");
    if (!(noise_variance > 0.0) || !(eta > 0.0))
        throw std::invalid_argument("build_shamir_real: noise_variance and eta must be positive");

    const double s = std::sqrt(noise_variance);
    LinearCode code;
    code.n_nodes = n_nodes;
    code.eta = eta;
    code.v = Eigen::MatrixXd(n_nodes, 1 + t);
    for (int i = 0; i < n_nodes; ++i) {
        code.v(i, 0) = 1.0;
        double p = 1.0;
        for (int k = 1; k <= t; ++k) {
            p *= eval_points[static_cast<std::size_t>(i)];
            code.v(i, k) = s * p;
        }
    }
    code.w = code.v;
    code.a = code.v.col(0);
    code.b = code.w.col(0);
    code.noise_a.assign(static_cast<std::size_t>(t), NoiseSpec::gaussian(1.0));
    code.noise_b = code.noise_a;
    code.check();
    return code;
}

Eigen::VectorXd lagrange_weights_at_zero(const std::vector<double>& points) {
    const int n = static_cast<int>(points.size());
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) {
        double prod = 1.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            prod *= points[static_cast<std::size_t>(j)] /
                    (points[static_cast<std::size_t>(j)] - points[static_cast<std::size_t>(i)]);
        }
        d(i) = prod;
    }
    return d;
}

LinearCode build_iid_baseline(int n_nodes, double epsilon_per_node, double eta) {
    if (n_nodes < 1) throw std::invalid_argument("build_iid_baseline: need at least one node");
    if (!(epsilon_per_node > 0.0))
        throw std::invalid_argument("build_iid_baseline: epsilon must be positive");
    LinearCode code;
    code.n_nodes = n_nodes;
    code.eta = eta;
    code.v = Eigen::MatrixXd::Zero(n_nodes, 1 + n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
        code.v(i, 0) = 1.0;
        code.v(i, 1 + i) = 1.0;
    }
    code.w = code.v;
    code.a = code.v.col(0);
    code.b = code.w.col(0);
    code.noise_a.assign(static_cast<std::size_t>(n_nodes), NoiseSpec::staircase(epsilon_per_node));
    code.noise_b = code.noise_a;
    code.check();
    return code;
}

double iid_baseline_lmse(int n_nodes, double epsilon_per_node, double eta) {
    const double s2 = sigma_star_sq(epsilon_per_node);
    const double snr = n_nodes * eta * eta / (s2 * (s2 + 2.0 * eta));
    return eta * eta / (1.0 + snr);
}

Baseline1Point baseline1_point(double sigma_n_sq, double eta) {
    if (!(sigma_n_sq > 0.0)) throw std::domain_error("baseline1: sigma_n_sq must be positive");
    if (!(eta > 0.0)) throw std::domain_error("baseline1: eta must be positive");
    using cd = std::complex<double>;
    const cd j(0.0, 1.0);
    std::array<cd, 3> x;
    for (int i = 0; i < 3; ++i) x[static_cast<std::size_t>(i)] = std::exp(j * (M_PI * i / 3.0));

    // phi(u) = u + u^2 with u = x_i conj(x_j); |x_i| = 1 so phi(u_ii) = 2.
    auto phi = [&](int i, int k) {
        const cd u = x[static_cast<std::size_t>(i)] * std::conj(x[static_cast<std::size_t>(k)]);
        return u + u * u;
    };

    // Worst pair for the adversary: 2x2 Hermitian determinant ratio.
    double worst_snr = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int k = i + 1; k < 3; ++k) {
            const cd o12 = sigma_n_sq * phi(i, k);
            const double diag = 2.0 * sigma_n_sq;
            const double det_k2 = diag * diag - std::norm(o12);
            const cd s12 = eta + o12;
            const double det_k1 = (eta + diag) * (eta + diag) - std::norm(s12);
            worst_snr = std::max(worst_snr, det_k1 / det_k2 - 1.0);
        }
    }

    Baseline1Point out;
    out.adversary_snr = worst_snr;
    out.epsilon_bar = epsilon_from_variance(1.0 / worst_snr);

    // Decoder LMSE via the 3x3 Hermitian product-moment determinant ratio.
    Eigen::Matrix3cd k1, k2;
    for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) {
            const cd g = (i == k) ? cd(eta + 2.0 * sigma_n_sq, 0.0) : eta + sigma_n_sq * phi(i, k);
            k1(i, k) = g * g;
            k2(i, k) = k1(i, k) - eta * eta;
        }
    }
    const double snr_a = std::real(k1.determinant() / k2.determinant()) - 1.0;
    out.mse = eta * eta / (1.0 + snr_a);
    return out;
}

double baseline1_epsilon_lower(double sigma_n_sq, double eta) {
    return baseline1_point(sigma_n_sq, eta).epsilon_bar;
}

namespace {

using nlohmann::json;

json spec_to_json(const NoiseSpec& s) {
    switch (s.kind) {
        case NoiseSpec::Kind::Staircase:
            return json{{"kind", "staircase"}, {"epsilon", s.epsilon}, {"scale", s.scale}};
        case NoiseSpec::Kind::Laplace:
            return json{{"kind", "laplace"}, {"variance", s.var}};
        case NoiseSpec::Kind::Gaussian:
            return json{{"kind", "gaussian"}, {"variance", s.var}};
    }
    return json{};
}

NoiseSpec spec_from_json(const json& jd) {
    const std::string kind = jd.at("kind").get<std::string>();
    if (kind == "staircase")
        return NoiseSpec::scaled_staircase(jd.at("epsilon").get<double>(),
                                           jd.value("scale", 1.0));
    if (kind == "laplace") return NoiseSpec::laplace(jd.at("variance").get<double>());
    if (kind == "gaussian") return NoiseSpec::gaussian(jd.at("variance").get<double>());
    throw std::invalid_argument("unknown noise spec kind: " + kind);
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& jd) {
    const auto nr = jd.size();
    if (nr == 0) return Eigen::MatrixXd(0, 0);
    const auto nc = jd.at(0).size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nc));
    for (std::size_t i = 0; i < nr; ++i) {
        if (jd.at(i).size() != nc) throw std::invalid_argument("ragged matrix rows");
        for (std::size_t c = 0; c < nc; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = jd.at(i).at(c).get<double>();
    }
    return m;
}

} // namespace

std::string to_json(const LinearCode& code, int indent) {
    json jd;
    jd["n_nodes"] = code.n_nodes;
    jd["eta"] = code.eta;
    jd["a"] = std::vector<double>(code.a.data(), code.a.data() + code.a.size());
    jd["b"] = std::vector<double>(code.b.data(), code.b.data() + code.b.size());
    jd["v"] = matrix_to_json(code.v);
    jd["w"] = matrix_to_json(code.w);
    json na = json::array(), nb = json::array();
    for (const auto& s : code.noise_a) na.push_back(spec_to_json(s));
    for (const auto& s : code.noise_b) nb.push_back(spec_to_json(s));
    jd["noise_specs_a"] = std::move(na);
    jd["noise_specs_b"] = std::move(nb);
    return jd.dump(indent);
}

LinearCode code_from_json(const std::string& text) {
    const json jd = json::parse(text); // parse errors carry byte position
    LinearCode code;
    code.n_nodes = jd.at("n_nodes").get<int>();
    code.eta = jd.at("eta").get<double>();
    code.v = matrix_from_json(jd.at("v"));
    code.w = matrix_from_json(jd.at("w"));
    const auto av = jd.at("a").get<std::vector<double>>();
    const auto bv = jd.at("b").get<std::vector<double>>();
    code.a = Eigen::Map<const Eigen::VectorXd>(av.data(), static_cast<Eigen::Index>(av.size()));
    code.b = Eigen::Map<const Eigen::VectorXd>(bv.data(), static_cast<Eigen::Index>(bv.size()));
    for (const auto& s : jd.at("noise_specs_a")) code.noise_a.push_back(spec_from_json(s));
    for (const auto& s : jd.at("noise_specs_b")) code.noise_b.push_back(spec_from_json(s));
    code.check();
    return code;
}

} // namespace dpsm
