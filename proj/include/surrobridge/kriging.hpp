#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "json.hpp"

#include "surrobridge/dataset.hpp"
#include "surrobridge/doe.hpp"
#include "surrobridge/errors.hpp"
#include "surrobridge/pce.hpp"

namespace surrobridge {
namespace kriging {

enum class Kernel { squared_exponential, matern52 };

inline std::string kernel_name(Kernel k) {
    return k == Kernel::squared_exponential ? "squared_exponential" : "matern52";
}

inline Kernel kernel_from_name(const std::string& name) {
    if (name == "squared_exponential") return Kernel::squared_exponential;
    if (name == "matern52") return Kernel::matern52;
    throw ValidationError("unknown kriging kernel '" + name + "'");
}

// Anisotropic correlation between two unit-scaled points.
inline double correlation(const std::vector<double>& xa, const std::vector<double>& xb,
                          const std::vector<double>& theta,
                          Kernel kernel = Kernel::squared_exponential) {
    double s = 0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double dx = xa[k] - xb[k];
        s += theta[k] * dx * dx;
    }
    if (kernel == Kernel::squared_exponential) return std::exp(-s);
    const double t = std::sqrt(5.0 * s);
    return (1.0 + t + t * t / 3.0) * std::exp(-t);
}

// Monomial trend basis: all total-degree <= p monomials of the unit-scaled
// coordinates, graded lexicographic order (m = C(p+d, d) terms).
inline Eigen::VectorXd trend_basis(const std::vector<double>& u, int degree) {
    if (degree < 0 || degree > 4)
        throw ValidationError("kriging trend degree must lie in {0,...,4}");
    const auto indices = pce::multi_index_set(static_cast<int>(u.size()), degree);
    Eigen::VectorXd f(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t j = 0; j < indices.size(); ++j) {
        double v = 1.0;
        for (std::size_t k = 0; k < u.size(); ++k)
            for (int rep = 0; rep < indices[j][k]; ++rep) v *= u[k];
        f[static_cast<Eigen::Index>(j)] = v;
    }
    return f;
}

struct Prediction {
    double mean = 0;          // Pa
    double variance = 0;      // Pa^2, >= 0
    bool extrapolated = false; // point left the training bounds
};

struct KrigingOptions {
    // Conditioning nugget. Kept small so the likelihood search cannot buy
    // log-det reward by driving R toward rank deficiency: indefinite
    // candidates fail the Cholesky and are rejected, which keeps the fitted
    // model an interpolant. Escalates tenfold (up to 1e-6) only if the final
    // factorization fails.
    double nugget = 1e-12;
    double ridge = 0;              // > 0 relaxes the m < n trend-rank requirement
    int starts = 8;                // multi-start count for the NLL search
    std::uint64_t search_seed = 7; // seeds the start points, recorded for determinism
    Kernel kernel = Kernel::squared_exponential;
    std::optional<std::vector<double>> fixed_theta; // skip optimization entirely
    double log_theta_min = std::log(1e-2);
    double log_theta_max = std::log(1e3);
    int nm_max_iter = 400;
    double nm_tol = 1e-7;
};

struct KrigingModel {
    int trend_degree = 0;
    std::vector<double> theta;    // correlation lengthscale parameters, per dim
    Eigen::VectorXd beta;         // trend coefficients (standardized output scale)
    double sigma2 = 0;            // process variance (standardized scale)
    double nugget = 0;            // final diagonal addition
    double ridge = 0;             // ridge strength used for the trend GLS (0 = off)
    Kernel kernel = Kernel::squared_exponential;
    doe::InputDistribution distribution;
    Eigen::MatrixXd x_unit;       // n x d training inputs, unit-scaled
    Eigen::VectorXd y;            // n training outputs, Pa
    double y_mean = 0;
    double y_std = 1;

    // cached factors, rebuilt on deserialization
    Eigen::MatrixXd chol_lower;   // L with L L^T = R + nugget*I
    Eigen::VectorXd resid_weights; // R^{-1}(y_std - F beta)
    Eigen::MatrixXd rinv_f;       // R^{-1} F
    Eigen::MatrixXd trend_gram_inv; // (F^T R^{-1} F + ridge*I)^{-1}

    bool fitted() const { return !theta.empty(); }
    int size() const { return static_cast<int>(y.size()); }
    int dimension() const { return static_cast<int>(theta.size()); }
};

namespace detail {

inline Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& x,
                                          const std::vector<double>& theta, Kernel kernel,
                                          double nugget) {
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    Eigen::MatrixXd r(n, n);
    std::vector<double> a(d), b(d);
    for (int i = 0; i < n; ++i) {
        r(i, i) = 1.0 + nugget;
        for (int k = 0; k < d; ++k) a[k] = x(i, k);
        for (int j = i + 1; j < n; ++j) {
            for (int k = 0; k < d; ++k) b[k] = x(j, k);
            const double v = correlation(a, b, theta, kernel);
            r(i, j) = v;
            r(j, i) = v;
        }
    }
    return r;
}

struct GlsResult {
    bool ok = false;
    double nll = std::numeric_limits<double>::infinity();
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::VectorXd beta;
    double sigma2 = 0;
};

// Concentrated likelihood pieces for a given theta: profile GLS estimates of
// the trend and process variance, then nll = n*ln(sigma2) + ln det R.
inline GlsResult gls_profile(const Eigen::MatrixXd& x, const Eigen::VectorXd& y_std,
                             const Eigen::MatrixXd& f, const std::vector<double>& theta,
                             Kernel kernel, double nugget, double ridge) {
    GlsResult out;
    const int n = static_cast<int>(x.rows());
    const Eigen::MatrixXd r = correlation_matrix(x, theta, kernel, nugget);
    out.llt.compute(r);
    if (out.llt.info() != Eigen::Success) return out;

    const Eigen::MatrixXd l = out.llt.matrixL();
    const Eigen::MatrixXd a = l.triangularView<Eigen::Lower>().solve(f);
    const Eigen::VectorXd b = l.triangularView<Eigen::Lower>().solve(y_std);

    if (ridge > 0) {
        Eigen::MatrixXd gram = a.transpose() * a;
        gram.diagonal().array() += ridge;
        out.beta = gram.ldlt().solve(a.transpose() * b);
    } else {
        out.beta = a.householderQr().solve(b);
    }
    const Eigen::VectorXd resid = b - a * out.beta;
    out.sigma2 = resid.squaredNorm() / n;

    double log_det = 0;
    for (int i = 0; i < n; ++i) log_det += std::log(l(i, i));
    log_det *= 2.0;

    out.nll = n * std::log(std::max(out.sigma2, 1e-300)) + log_det;
    out.ok = true;
    return out;
}

// Nelder-Mead on a box; evaluations outside the box return +inf via the
// objective wrapper. Deterministic for a given start.
inline std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& fn,
                                       std::vector<double> start, double step, int max_iter,
                                       double tol) {
    const int d = static_cast<int>(start.size());
    std::vector<std::vector<double>> simplex(d + 1, start);
    std::vector<double> value(d + 1);
    for (int k = 0; k < d; ++k) simplex[k + 1][k] += step;
    for (int i = 0; i <= d; ++i) value[i] = fn(simplex[i]);

    std::vector<int> order(d + 1);
    for (int iter = 0; iter < max_iter; ++iter) {
        for (int i = 0; i <= d; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) { return value[a] < value[b]; });
        const int best = order[0], worst = order[d], second = order[d - 1];
        if (std::isfinite(value[best]) && value[worst] - value[best] < tol) break;

        std::vector<double> centroid(d, 0.0);
        for (int i = 0; i <= d; ++i)
            if (i != worst)
                for (int k = 0; k < d; ++k) centroid[k] += simplex[i][k] / d;

        auto blend = [&](double c) {
            std::vector<double> p(d);
            for (int k = 0; k < d; ++k)
                p[k] = centroid[k] + c * (centroid[k] - simplex[worst][k]);
            return p;
        };

        const auto reflected = blend(1.0);
        const double fr = fn(reflected);
        if (fr < value[best]) {
            const auto expanded = blend(2.0);
            const double fe = fn(expanded);
            if (fe < fr) { simplex[worst] = expanded; value[worst] = fe; }
            else { simplex[worst] = reflected; value[worst] = fr; }
        } else if (fr < value[second]) {
            simplex[worst] = reflected;
            value[worst] = fr;
        } else {
            const auto contracted = blend(fr < value[worst] ? 0.5 : -0.5);
            const double fc = fn(contracted);
            if (fc < std::min(fr, value[worst])) {
                simplex[worst] = contracted;
                value[worst] = fc;
            } else {
                for (int i = 0; i <= d; ++i) {
                    if (i == best) continue;
                    for (int k = 0; k < d; ++k)
                        simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
                    value[i] = fn(simplex[i]);
                }
            }
        }
    }
    int best = 0;
    for (int i = 1; i <= d; ++i)
        if (value[i] < value[best]) best = i;
    return simplex[best];
}

inline void finalize_model(KrigingModel& model, const Eigen::MatrixXd& f,
                           const Eigen::VectorXd& y_std, double requested_nugget,
                           double ridge) {
    double nugget = requested_nugget;
    GlsResult gls;
    while (true) {
        gls = gls_profile(model.x_unit, y_std, f, model.theta, model.kernel, nugget, ridge);
        if (gls.ok) break;
        if (nugget >= 1e-6)
            throw NumericalError("kriging: correlation matrix not positive definite "
                                 "even with nugget 1e-6");
        nugget = std::max(nugget * 10.0, 1e-12);
    }
    model.nugget = nugget;
    model.ridge = ridge;
    model.beta = gls.beta;
    model.sigma2 = gls.sigma2;
    model.chol_lower = gls.llt.matrixL();

    const auto lower = model.chol_lower.triangularView<Eigen::Lower>();
    const auto upper = model.chol_lower.transpose().triangularView<Eigen::Upper>();
    const Eigen::VectorXd resid = y_std - f * model.beta;
    model.resid_weights = upper.solve(lower.solve(resid));
    model.rinv_f = upper.solve(lower.solve(f));
    Eigen::MatrixXd gram = f.transpose() * model.rinv_f;
    if (ridge > 0) gram.diagonal().array() += ridge;
    model.trend_gram_inv = gram.ldlt().solve(
        Eigen::MatrixXd::Identity(gram.rows(), gram.cols()));
}

} // namespace detail

// Universal Kriging fit: output standardization, profile GLS for the trend,
// and multi-start Nelder-Mead on the log-lengthscales for the concentrated
// negative log-likelihood.
inline KrigingModel fit(const Dataset& dataset, int trend_degree,
                        const KrigingOptions& options = {}) {
    dataset.check_consistent();
    const int n = dataset.size();
    if (n < 2) throw ValidationError("kriging::fit needs at least two points");
    if (trend_degree < 0 || trend_degree > 4)
        throw ValidationError("kriging trend degree must lie in {0,...,4}");

    doe::InputDistribution dist = dataset.distribution;
    if (dist.bounds.empty()) dist = doe::InputDistribution::bridge_default();
    dist.validate();
    const int d = dist.dimension();

    const std::int64_t m = pce::binomial(trend_degree + d, d);
    if (m >= n && options.ridge <= 0) {
        std::ostringstream os;
        os << "kriging: degree-" << trend_degree << " trend has " << m
           << " terms but only " << n << " training points; enable ridge regularization";
        throw ValidationError(os.str());
    }

    KrigingModel model;
    model.trend_degree = trend_degree;
    model.kernel = options.kernel;
    model.distribution = dist;
    model.x_unit.resize(n, d);
    model.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto u = doe::to_unit_unchecked(dataset.inputs[i], dist);
        for (int k = 0; k < d; ++k) model.x_unit(i, k) = u[k];
        model.y[i] = dataset.outputs[i];
    }
    model.y_mean = model.y.mean();
    const double var = (model.y.array() - model.y_mean).square().mean();
    model.y_std = var > 0 ? std::sqrt(var) : 1.0;
    const Eigen::VectorXd y_std = (model.y.array() - model.y_mean) / model.y_std;

    Eigen::MatrixXd f(n, m);
    std::vector<double> u_row(d);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) u_row[k] = model.x_unit(i, k);
        f.row(i) = trend_basis(u_row, trend_degree).transpose();
    }

    if (options.fixed_theta) {
        if (static_cast<int>(options.fixed_theta->size()) != d)
            throw ValidationError("fixed_theta dimension does not match the input space");
        model.theta = *options.fixed_theta;
        detail::finalize_model(model, f, y_std, options.nugget, options.ridge);
        return model;
    }

    const double lo = options.log_theta_min;
    const double hi = options.log_theta_max;
    auto objective = [&](const std::vector<double>& log_theta) {
        std::vector<double> theta(d);
        for (int k = 0; k < d; ++k) {
            if (log_theta[k] < lo || log_theta[k] > hi)
                return std::numeric_limits<double>::infinity();
            theta[k] = std::exp(log_theta[k]);
        }
        return detail::gls_profile(model.x_unit, y_std, f, theta, model.kernel,
                                   options.nugget, options.ridge)
            .nll;
    };

    std::mt19937_64 rng(options.search_seed);
    std::vector<double> best_log_theta;
    double best_nll = std::numeric_limits<double>::infinity();
    for (int s = 0; s < std::max(1, options.starts); ++s) {
        std::vector<double> start(d);
        if (s == 0) {
            std::fill(start.begin(), start.end(), std::log(1.0));
        } else {
            for (int k = 0; k < d; ++k) start[k] = lo + (hi - lo) * doe::unit_double(rng);
        }
        // starts in the indefinite (over-smooth) region are pushed toward
        // rougher lengthscales until the likelihood is evaluable
        for (int push = 0; push < 24 && !std::isfinite(objective(start)); ++push)
            for (int k = 0; k < d; ++k) start[k] = std::min(start[k] + 0.5, hi);
        const auto log_theta =
            detail::nelder_mead(objective, start, 0.5, options.nm_max_iter, options.nm_tol);
        const double nll = objective(log_theta);
        if (nll < best_nll) {
            best_nll = nll;
            best_log_theta = log_theta;
        }
    }
    if (best_log_theta.empty())
        throw NumericalError("kriging: likelihood search failed at every start");

    model.theta.resize(d);
    for (int k = 0; k < d; ++k)
        model.theta[k] = std::exp(std::clamp(best_log_theta[k], lo, hi));
    detail::finalize_model(model, f, y_std, options.nugget, options.ridge);
    return model;
}

inline Prediction predict(const KrigingModel& model, const std::vector<double>& point) {
    if (!model.fitted()) throw StateError("kriging::predict called on an unfitted model");
    const int n = model.size();
    const int d = model.dimension();

    const std::vector<double> u = doe::to_unit_unchecked(point, model.distribution);
    bool outside = false;
    for (double v : u)
        if (v < -1e-3 || v > 1.0 + 1e-3) outside = true;

    const Eigen::VectorXd f = trend_basis(u, model.trend_degree);
    Eigen::VectorXd r(n);
    std::vector<double> row(d);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) row[k] = model.x_unit(i, k);
        r[i] = correlation(u, row, model.theta, model.kernel);
    }

    const double mean_std = f.dot(model.beta) + r.dot(model.resid_weights);

    const auto lower = model.chol_lower.triangularView<Eigen::Lower>();
    const Eigen::VectorXd z = lower.solve(r);
    const Eigen::VectorXd u_vec = model.rinv_f.transpose() * r - f;
    double var_std = model.sigma2 *
                     (1.0 - z.squaredNorm() + u_vec.dot(model.trend_gram_inv * u_vec));
    if (var_std < 0) {
        if (var_std < -1e-9 * model.sigma2)
            throw NumericalError("kriging: prediction variance fell below the noise floor");
        var_std = 0;
    }

    Prediction p;
    p.mean = mean_std * model.y_std + model.y_mean;
    p.variance = var_std * model.y_std * model.y_std;
    p.extrapolated = outside;
    return p;
}

inline nlohmann::json to_json(const KrigingModel& model) {
    if (!model.fitted()) throw StateError("cannot serialize an unfitted kriging model");
    const int n = model.size();
    const int d = model.dimension();
    nlohmann::json x = nlohmann::json::array();
    for (int i = 0; i < n; ++i) {
        std::vector<double> row(d);
        for (int k = 0; k < d; ++k) row[k] = model.x_unit(i, k);
        x.push_back(row);
    }
    return nlohmann::json{
        {"family", "kriging"},
        {"trend_degree", model.trend_degree},
        {"kernel", kernel_name(model.kernel)},
        {"theta", model.theta},
        {"beta", std::vector<double>(model.beta.data(), model.beta.data() + model.beta.size())},
        {"sigma2", model.sigma2},
        {"nugget", model.nugget},
        {"ridge", model.ridge},
        {"bounds", bounds_to_json(model.distribution)},
        {"x_train_unit", x},
        {"y_train", std::vector<double>(model.y.data(), model.y.data() + model.y.size())},
        {"y_mean", model.y_mean},
        {"y_std", model.y_std},
    };
}

inline KrigingModel from_json(const nlohmann::json& j) {
    KrigingModel m;
    m.trend_degree = j.at("trend_degree").get<int>();
    m.kernel = kernel_from_name(j.at("kernel").get<std::string>());
    m.theta = j.at("theta").get<std::vector<double>>();
    const auto beta = j.at("beta").get<std::vector<double>>();
    m.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    m.sigma2 = j.at("sigma2").get<double>();
    m.nugget = j.at("nugget").get<double>();
    m.ridge = j.at("ridge").get<double>();
    m.distribution = bounds_from_json(j.at("bounds"));
    const auto x = j.at("x_train_unit").get<std::vector<std::vector<double>>>();
    const auto y = j.at("y_train").get<std::vector<double>>();
    if (x.size() != y.size())
        throw ValidationError("kriging model: training input and output counts differ");
    const int n = static_cast<int>(x.size());
    const int d = m.dimension();
    m.x_unit.resize(n, d);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(x[i].size()) != d)
            throw ValidationError("kriging model: inconsistent training input dimension");
        for (int k = 0; k < d; ++k) m.x_unit(i, k) = x[i][k];
    }
    m.y = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    m.y_mean = j.at("y_mean").get<double>();
    m.y_std = j.at("y_std").get<double>();

    // rebuild the cached factors from the stored primary fields
    const Eigen::VectorXd y_std = (m.y.array() - m.y_mean) / m.y_std;
    const std::int64_t mt = pce::binomial(m.trend_degree + d, d);
    Eigen::MatrixXd f(n, mt);
    std::vector<double> u_row(d);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) u_row[k] = m.x_unit(i, k);
        f.row(i) = trend_basis(u_row, m.trend_degree).transpose();
    }
    const Eigen::MatrixXd r = detail::correlation_matrix(m.x_unit, m.theta, m.kernel, m.nugget);
    Eigen::LLT<Eigen::MatrixXd> llt(r);
    if (llt.info() != Eigen::Success)
        throw NumericalError("kriging model: stored correlation matrix is not positive definite");
    m.chol_lower = llt.matrixL();
    const auto lower = m.chol_lower.triangularView<Eigen::Lower>();
    const auto upper = m.chol_lower.transpose().triangularView<Eigen::Upper>();
    m.resid_weights = upper.solve(lower.solve(Eigen::VectorXd(y_std - f * m.beta)));
    m.rinv_f = upper.solve(lower.solve(f));
    Eigen::MatrixXd gram = f.transpose() * m.rinv_f;
    if (m.ridge > 0) gram.diagonal().array() += m.ridge;
    m.trend_gram_inv = gram.ldlt().solve(Eigen::MatrixXd::Identity(gram.rows(), gram.cols()));
    return m;
}

} // namespace kriging
} // namespace surrobridge
