#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "surrobridge/dataset.hpp"
#include "surrobridge/doe.hpp"
#include "surrobridge/errors.hpp"
#include "surrobridge/metrics.hpp"

namespace surrobridge {
namespace svr {

struct HyperParams {
    double c = 10.0;      // box constraint (standardized output scale)
    double epsilon = 0.05; // tube half-width (standardized)
    double gamma = 0.25;  // RBF width on unit-scaled inputs
};

// C in {1,10,100,1000}, eps in {0.01,0.05,0.1}, gamma in {0.5,1,2,4}/d.
inline std::vector<HyperParams> default_grid(int dimension) {
    std::vector<HyperParams> grid;
    for (double c : {1.0, 10.0, 100.0, 1000.0})
        for (double eps : {0.01, 0.05, 0.1})
            for (double g : {0.5, 1.0, 2.0, 4.0})
                grid.push_back({c, eps, g / dimension});
    return grid;
}

struct SvrOptions {
    double tolerance = 1e-3;   // max KKT violation at convergence
    long max_iterations = 100000;
    bool record_objective = false; // keep the per-iteration dual objective trace
};

struct SvrModel {
    Eigen::MatrixXd support_vectors; // unit-scaled inputs of the SVs
    Eigen::VectorXd coefficients;    // alpha - alpha* per SV (standardized scale)
    double bias = 0;                 // standardized scale
    HyperParams params;
    doe::InputDistribution distribution;
    double y_mean = 0;
    double y_std = 1;
    // fit diagnostics
    long iterations = 0;
    double kkt_violation = 0;
    std::vector<double> objective_trace; // minimization form, when recorded
    bool is_fitted = false;

    bool fitted() const { return is_fitted; }
};

inline double rbf(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double gamma) {
    return std::exp(-gamma * (a - b).squaredNorm());
}

// eps-SVR dual solved by SMO on the 2n-variable box/equality form. Working
// pair = maximal KKT violating pair, ties broken by index, so the run is
// deterministic for a given dataset order.
inline SvrModel fit(const Dataset& dataset, const HyperParams& params,
                    const SvrOptions& options = {}) {
    dataset.check_consistent();
    const int n = dataset.size();
    if (n < 2) throw ValidationError("svr::fit needs at least two points");
    if (params.c <= 0) throw ValidationError("svr: C must be > 0");
    if (params.epsilon < 0) throw ValidationError("svr: epsilon must be >= 0");
    if (params.gamma <= 0) throw ValidationError("svr: gamma must be > 0");

    doe::InputDistribution dist = dataset.distribution;
    if (dist.bounds.empty()) dist = doe::InputDistribution::bridge_default();
    dist.validate();
    const int d = dist.dimension();

    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        const auto u = doe::to_unit_unchecked(dataset.inputs[i], dist);
        for (int k = 0; k < d; ++k) x(i, k) = u[k];
        y[i] = dataset.outputs[i];
    }
    const double y_mean = y.mean();
    const double var = (y.array() - y_mean).square().mean();
    const double y_std = var > 0 ? std::sqrt(var) : 1.0;
    y = (y.array() - y_mean) / y_std;

    Eigen::MatrixXd kernel(n, n);
    for (int i = 0; i < n; ++i) {
        kernel(i, i) = 1.0;
        for (int j = i + 1; j < n; ++j) {
            const double v = rbf(x.row(i).transpose(), x.row(j).transpose(), params.gamma);
            kernel(i, j) = v;
            kernel(j, i) = v;
        }
    }

    // 2n variables: t < n are alpha_i (sign +1), t >= n are alpha*_i (sign -1);
    // p_t = eps -+ y_i; Q[s,t] = sign_s sign_t K(s%n, t%n)
    const int nn = 2 * n;
    const double c_box = params.c;
    std::vector<double> alpha(nn, 0.0), grad(nn), lin(nn);
    auto sign = [n](int t) { return t < n ? 1.0 : -1.0; };
    auto base = [n](int t) { return t < n ? t : t - n; };
    for (int t = 0; t < nn; ++t) {
        lin[t] = t < n ? params.epsilon - y[t] : params.epsilon + y[t - n];
        grad[t] = lin[t];
    }

    SvrModel model;
    auto objective = [&]() {
        double obj = 0;
        for (int t = 0; t < nn; ++t) obj += alpha[t] * (grad[t] + lin[t]);
        return 0.5 * obj;
    };

    const double tau = 1e-12;
    long iter = 0;
    double violation = std::numeric_limits<double>::infinity();
    for (; iter < options.max_iterations; ++iter) {
        // maximal violating pair
        int i = -1, j = -1;
        double g_max = -std::numeric_limits<double>::infinity();
        double g_min = std::numeric_limits<double>::infinity();
        for (int t = 0; t < nn; ++t) {
            const double s = sign(t);
            const bool in_up = (s > 0 && alpha[t] < c_box) || (s < 0 && alpha[t] > 0);
            const bool in_low = (s > 0 && alpha[t] > 0) || (s < 0 && alpha[t] < c_box);
            const double v = -s * grad[t];
            if (in_up && v > g_max) { g_max = v; i = t; }
            if (in_low && v < g_min) { g_min = v; j = t; }
        }
        violation = g_max - g_min;
        if (violation <= options.tolerance) break;

        const double si = sign(i), sj = sign(j);
        const double q_ii = kernel(base(i), base(i));
        const double q_jj = kernel(base(j), base(j));
        const double q_ij = si * sj * kernel(base(i), base(j));
        const double old_i = alpha[i], old_j = alpha[j];

        if (si != sj) {
            double quad = q_ii + q_jj + 2.0 * q_ij;
            if (quad <= 0) quad = tau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
            } else {
                if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
            }
            if (diff > 0) {
                if (alpha[i] > c_box) { alpha[i] = c_box; alpha[j] = c_box - diff; }
            } else {
                if (alpha[j] > c_box) { alpha[j] = c_box; alpha[i] = c_box + diff; }
            }
        } else {
            double quad = q_ii + q_jj - 2.0 * q_ij;
            if (quad <= 0) quad = tau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c_box) {
                if (alpha[i] > c_box) { alpha[i] = c_box; alpha[j] = sum - c_box; }
            } else {
                if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
            }
            if (sum > c_box) {
                if (alpha[j] > c_box) { alpha[j] = c_box; alpha[i] = sum - c_box; }
            } else {
                if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
            }
        }

        const double di = alpha[i] - old_i;
        const double dj = alpha[j] - old_j;
        if (di == 0 && dj == 0) break; // numerically stuck; KKT check below decides
        for (int t = 0; t < nn; ++t) {
            const double st = sign(t);
            grad[t] += st * si * kernel(base(t), base(i)) * di +
                       st * sj * kernel(base(t), base(j)) * dj;
        }
        if (options.record_objective) model.objective_trace.push_back(objective());
    }

    if (violation > options.tolerance) {
        std::ostringstream os;
        os << "svr: SMO did not converge after " << options.max_iterations
           << " iterations (KKT violation " << violation << " > " << options.tolerance << ")";
        throw NumericalError(os.str());
    }

    // bias from the KKT conditions: rho = sign*G averaged over free
    // variables, midpoint of the bound interval when none are free; the
    // decision function carries b = -rho
    double sum_free = 0;
    int n_free = 0;
    double rho_ub = std::numeric_limits<double>::infinity();
    double rho_lb = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < nn; ++t) {
        const double yg = sign(t) * grad[t];
        if (alpha[t] <= 0) {
            if (sign(t) > 0) rho_ub = std::min(rho_ub, yg);
            else rho_lb = std::max(rho_lb, yg);
        } else if (alpha[t] >= c_box) {
            if (sign(t) < 0) rho_ub = std::min(rho_ub, yg);
            else rho_lb = std::max(rho_lb, yg);
        } else {
            sum_free += yg;
            ++n_free;
        }
    }
    const double rho = n_free > 0 ? sum_free / n_free : 0.5 * (rho_ub + rho_lb);
    const double b = -rho;

    std::vector<int> sv;
    for (int i = 0; i < n; ++i)
        if (alpha[i] - alpha[i + n] != 0.0) sv.push_back(i);

    model.support_vectors.resize(static_cast<int>(sv.size()), d);
    model.coefficients.resize(static_cast<int>(sv.size()));
    for (std::size_t s = 0; s < sv.size(); ++s) {
        model.support_vectors.row(static_cast<int>(s)) = x.row(sv[s]);
        model.coefficients[static_cast<int>(s)] = alpha[sv[s]] - alpha[sv[s] + n];
    }
    model.bias = b;
    model.params = params;
    model.distribution = dist;
    model.y_mean = y_mean;
    model.y_std = y_std;
    model.iterations = iter;
    model.kkt_violation = violation;
    model.is_fitted = true;
    return model;
}

inline double predict(const SvrModel& model, const std::vector<double>& point) {
    if (!model.fitted()) throw StateError("svr::predict called on an unfitted model");
    const auto u = doe::to_unit_unchecked(point, model.distribution);
    Eigen::VectorXd uv(static_cast<Eigen::Index>(u.size()));
    for (std::size_t k = 0; k < u.size(); ++k) uv[static_cast<Eigen::Index>(k)] = u[k];
    double f = model.bias;
    for (int s = 0; s < model.support_vectors.rows(); ++s)
        f += model.coefficients[s] * rbf(model.support_vectors.row(s).transpose(), uv,
                                         model.params.gamma);
    return f * model.y_std + model.y_mean;
}

// Deterministic seeded k-fold CV over a hyperparameter grid; picks the
// smallest mean validation RMSE, ties resolved toward smaller C then larger
// epsilon (the flatter model).
inline HyperParams cross_validate(const Dataset& dataset, const std::vector<HyperParams>& grid,
                                  int folds, std::uint64_t seed,
                                  const SvrOptions& options = {}) {
    if (grid.empty()) throw ValidationError("svr::cross_validate: hyperparameter grid is empty");
    if (folds < 2) throw ValidationError("svr::cross_validate: need at least 2 folds");
    const int n = dataset.size();
    if (n < folds) throw ValidationError("svr::cross_validate: fewer points than folds");

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    doe::shuffle(order, rng);

    std::vector<std::pair<int, int>> fold_ranges;
    int start = 0;
    for (int f = 0; f < folds; ++f) {
        const int len = n / folds + (f < n % folds ? 1 : 0);
        fold_ranges.emplace_back(start, start + len);
        start += len;
    }

    const HyperParams* best = nullptr;
    double best_rmse = std::numeric_limits<double>::infinity();
    for (const auto& hp : grid) {
        double rmse_sum = 0;
        for (int f = 0; f < folds; ++f) {
            Dataset train, val;
            train.distribution = dataset.distribution;
            val.distribution = dataset.distribution;
            for (int i = 0; i < n; ++i) {
                const bool held_out = i >= fold_ranges[f].first && i < fold_ranges[f].second;
                auto& part = held_out ? val : train;
                part.inputs.push_back(dataset.inputs[order[i]]);
                part.outputs.push_back(dataset.outputs[order[i]]);
            }
            const SvrModel m = fit(train, hp, options);
            double se = 0;
            for (int i = 0; i < val.size(); ++i) {
                const double e = predict(m, val.inputs[i]) - val.outputs[i];
                se += e * e;
            }
            rmse_sum += std::sqrt(se / val.size());
        }
        const double rmse = rmse_sum / folds;
        const bool better =
            rmse < best_rmse ||
            (rmse == best_rmse && best &&
             (hp.c < best->c || (hp.c == best->c && hp.epsilon > best->epsilon)));
        if (!best || better) {
            best = &hp;
            best_rmse = rmse;
        }
    }
    return *best;
}

inline nlohmann::json to_json(const SvrModel& model) {
    nlohmann::json sv = nlohmann::json::array();
    for (int i = 0; i < model.support_vectors.rows(); ++i) {
        std::vector<double> row(model.support_vectors.cols());
        for (int k = 0; k < model.support_vectors.cols(); ++k)
            row[static_cast<std::size_t>(k)] = model.support_vectors(i, k);
        sv.push_back(row);
    }
    return nlohmann::json{
        {"family", "svr"},
        {"C", model.params.c},
        {"epsilon", model.params.epsilon},
        {"gamma", model.params.gamma},
        {"bias", model.bias},
        {"support_vectors", sv},
        {"coefficients",
         std::vector<double>(model.coefficients.data(),
                             model.coefficients.data() + model.coefficients.size())},
        {"bounds", bounds_to_json(model.distribution)},
        {"y_mean", model.y_mean},
        {"y_std", model.y_std},
    };
}

inline SvrModel from_json(const nlohmann::json& j) {
    SvrModel m;
    m.params.c = j.at("C").get<double>();
    m.params.epsilon = j.at("epsilon").get<double>();
    m.params.gamma = j.at("gamma").get<double>();
    m.bias = j.at("bias").get<double>();
    const auto sv = j.at("support_vectors").get<std::vector<std::vector<double>>>();
    const auto coeffs = j.at("coefficients").get<std::vector<double>>();
    if (sv.size() != coeffs.size())
        throw ValidationError("svr model: support vector and coefficient counts differ");
    m.distribution = bounds_from_json(j.at("bounds"));
    const int d = m.distribution.dimension();
    m.support_vectors.resize(static_cast<int>(sv.size()), d);
    m.coefficients.resize(static_cast<int>(coeffs.size()));
    for (std::size_t i = 0; i < sv.size(); ++i) {
        if (static_cast<int>(sv[i].size()) != d)
            throw ValidationError("svr model: inconsistent support vector dimension");
        for (int k = 0; k < d; ++k) m.support_vectors(static_cast<int>(i), k) = sv[i][k];
        m.coefficients[static_cast<int>(i)] = coeffs[i];
    }
    m.y_mean = j.at("y_mean").get<double>();
    m.y_std = j.at("y_std").get<double>();
    m.is_fitted = true;
    return m;
}

} // namespace svr
} // namespace surrobridge
