#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "json.hpp"

#include "surrobridge/dataset.hpp"
#include "surrobridge/doe.hpp"
#include "surrobridge/errors.hpp"

namespace surrobridge {
namespace pce {

inline std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::int64_t r = 1;
    k = std::min(k, n - k);
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Orthonormal Legendre polynomial sqrt(2k+1)*P_k(xi) w.r.t. the uniform
// density 1/2 on [-1,1], via the three-term recurrence.
inline double legendre_orthonormal(int order, double xi) {
    if (order < 0) throw ValidationError("legendre_orthonormal: order must be >= 0");
    if (std::abs(xi) > 1.0 + 1e-12) {
        std::ostringstream os;
        os << "legendre_orthonormal: xi = " << xi << " outside [-1, 1]";
        throw ValidationError(os.str());
    }
    double pm = 1.0, p = xi;
    if (order == 0) return 1.0;
    for (int k = 1; k < order; ++k) {
        const double pn = ((2.0 * k + 1.0) * xi * p - k * pm) / (k + 1.0);
        pm = p;
        p = pn;
    }
    return std::sqrt(2.0 * order + 1.0) * p;
}

using MultiIndex = std::vector<int>;

namespace detail {

inline void append_level(int d, int level, MultiIndex& prefix, std::vector<MultiIndex>& out) {
    if (d == 1) {
        prefix.push_back(level);
        out.push_back(prefix);
        prefix.pop_back();
        return;
    }
    for (int a = level; a >= 0; --a) {
        prefix.push_back(a);
        append_level(d - 1, level - a, prefix, out);
        prefix.pop_back();
    }
}

} // namespace detail

// All alpha in N^d with |alpha| <= p, graded lexicographic order.
inline std::vector<MultiIndex> multi_index_set(int d, int p) {
    if (d < 1) throw ValidationError("multi_index_set: d must be >= 1");
    if (p < 0) throw ValidationError("multi_index_set: p must be >= 0");
    std::vector<MultiIndex> out;
    out.reserve(static_cast<std::size_t>(binomial(p + d, d)));
    MultiIndex prefix;
    for (int level = 0; level <= p; ++level)
        detail::append_level(d, level, prefix, out);
    return out;
}

// Tensorized basis function Psi_alpha(xi) = prod_k legendre(alpha_k, xi_k).
inline double basis_value(const MultiIndex& alpha, const std::vector<double>& xi) {
    double v = 1.0;
    for (std::size_t k = 0; k < alpha.size(); ++k)
        if (alpha[k] > 0) v *= legendre_orthonormal(alpha[k], xi[k]);
    return v;
}

struct PceModel {
    int degree = -1;                  // selected total degree p*
    std::vector<MultiIndex> indices;  // |alpha|_1 <= degree, graded lex
    Eigen::VectorXd coefficients;     // output units (Pa)
    doe::InputDistribution distribution;
    double loo_error = 0;             // relative LOO at the selected degree

    bool fitted() const { return degree >= 0; }
};

struct PceOptions {
    int max_degree = 10;
    double condition_limit = 1e10;
};

inline PceModel fit(const Dataset& dataset, const PceOptions& options = {}) {
    dataset.check_consistent();
    const int n = dataset.size();
    if (n < 2) throw ValidationError("pce::fit needs at least two points");
    doe::InputDistribution dist = dataset.distribution;
    if (dist.bounds.empty()) dist = doe::InputDistribution::bridge_default();
    dist.validate();
    const int d = dist.dimension();

    std::vector<std::vector<double>> xi(n);
    for (int i = 0; i < n; ++i) xi[i] = doe::to_standard(dataset.inputs[i], dist);

    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = dataset.outputs[i];
    const double y_mean = y.mean();
    const double y_var = (y.array() - y_mean).square().mean();
    const double loo_denom = y_var > 0 ? y_var : 1.0;

    PceModel best;
    double best_loo = std::numeric_limits<double>::infinity();
    bool any_candidate = false;

    for (int p = 0; p <= options.max_degree; ++p) {
        // structural overfit guard: basis size must stay below n
        if (binomial(p + d, d) > n - 1) break;
        const auto indices = multi_index_set(d, p);
        const int m = static_cast<int>(indices.size());

        Eigen::MatrixXd psi(n, m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
                psi(i, j) = basis_value(indices[j], xi[i]);

        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(psi);
        const double smin = svd.singularValues().minCoeff();
        const double smax = svd.singularValues().maxCoeff();
        if (!(smin > 0) || smax / smin > options.condition_limit)
            continue; // ill-conditioned candidate
        any_candidate = true;

        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(psi);
        const Eigen::VectorXd c = qr.solve(y);
        const Eigen::VectorXd y_hat = psi * c;

        // hat diagonal from the thin Q factor: h_ii = ||Q_i||^2
        const Eigen::MatrixXd q_thin =
            qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
        double loo = 0;
        bool degenerate = false;
        for (int i = 0; i < n; ++i) {
            const double h = q_thin.row(i).squaredNorm();
            const double denom = 1.0 - h;
            if (denom < 1e-12) { degenerate = true; break; }
            const double e = (y[i] - y_hat[i]) / denom;
            loo += e * e;
        }
        if (degenerate) continue;
        loo /= n * loo_denom;

        if (loo < best_loo) { // strict: ties keep the lower degree
            best_loo = loo;
            best.degree = p;
            best.indices = indices;
            best.coefficients = c;
            best.distribution = dist;
            best.loo_error = loo;
        }
    }

    if (!best.fitted()) {
        if (any_candidate)
            throw NumericalError("pce::fit: no candidate degree produced a usable LOO estimate");
        std::ostringstream os;
        os << "pce::fit: all candidate degrees exceeded the condition limit "
           << options.condition_limit;
        throw NumericalError(os.str());
    }
    return best;
}

inline double predict(const PceModel& model, const std::vector<double>& point) {
    if (!model.fitted()) throw StateError("pce::predict called on an unfitted model");
    const std::vector<double> xi = doe::to_standard(point, model.distribution);
    double v = 0;
    for (std::size_t j = 0; j < model.indices.size(); ++j)
        v += model.coefficients[static_cast<Eigen::Index>(j)] * basis_value(model.indices[j], xi);
    return v;
}

inline nlohmann::json to_json(const PceModel& model) {
    if (!model.fitted()) throw StateError("cannot serialize an unfitted PCE model");
    nlohmann::json idx = nlohmann::json::array();
    for (const auto& alpha : model.indices) idx.push_back(alpha);
    std::vector<double> coeffs(model.coefficients.data(),
                               model.coefficients.data() + model.coefficients.size());
    return nlohmann::json{
        {"family", "pce"},
        {"degree", model.degree},
        {"multi_indices", idx},
        {"coefficients", coeffs},
        {"bounds", bounds_to_json(model.distribution)},
        {"loo_error", model.loo_error},
    };
}

inline PceModel from_json(const nlohmann::json& j) {
    PceModel m;
    m.degree = j.at("degree").get<int>();
    for (const auto& alpha : j.at("multi_indices"))
        m.indices.push_back(alpha.get<MultiIndex>());
    const auto coeffs = j.at("coefficients").get<std::vector<double>>();
    m.coefficients = Eigen::Map<const Eigen::VectorXd>(coeffs.data(),
                                                       static_cast<Eigen::Index>(coeffs.size()));
    m.distribution = bounds_from_json(j.at("bounds"));
    m.loo_error = j.at("loo_error").get<double>();
    if (m.indices.size() != static_cast<std::size_t>(m.coefficients.size()))
        throw ValidationError("pce model: multi-index and coefficient counts differ");
    return m;
}

} // namespace pce
} // namespace surrobridge
