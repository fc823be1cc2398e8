// Independent oracles used by the unit and acceptance suites. These
// deliberately avoid the implementation paths they check: bisection instead
// of the closed-form root, strip integration instead of the transformed-
// section formulas, the three-moment equation instead of the FE solver,
// explicit matrix inverses instead of Cholesky pipelines, projected-gradient
// QP instead of SMO, explicit refits instead of the hat-matrix shortcut.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

// --- cracked section ---------------------------------------------------------

struct SectionSpec {
    double width = 8;
    double steel_tension = 0.02;
    double steel_compression = 0.02;
    double d = 0.45;  // tension layer depth
    double dp = 0.05; // compression layer depth
    double n = 20.0 / 3.0; // modular ratio
};

inline double cracked_equilibrium_residual(const SectionSpec& s, double c) {
    return s.width * c * c / 2.0 + (s.n - 1.0) * s.steel_compression * (c - s.dp) -
           s.n * s.steel_tension * (s.d - c);
}

inline double neutral_axis_bisection(const SectionSpec& s) {
    double lo = 1e-12, hi = s.d;
    if (cracked_equilibrium_residual(s, lo) > 0 || cracked_equilibrium_residual(s, hi) < 0)
        throw std::runtime_error("bisection oracle: no sign change in (0, d)");
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (cracked_equilibrium_residual(s, mid) <= 0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Strip-integrated steel stress: neutral axis from integrated axial
// equilibrium, then the tension-steel stress for the moment via the
// integrated section stiffness. Only the modular ratio enters.
inline double steel_stress_integration(const SectionSpec& s, double moment,
                                       int strips = 20000) {
    auto axial = [&](double c) {
        double f = 0;
        const double dy = c / strips;
        for (int i = 0; i < strips; ++i) {
            const double y = (i + 0.5) * dy;
            f += s.width * dy * (c - y);
        }
        f += (s.n - 1.0) * s.steel_compression * (c - s.dp);
        f -= s.n * s.steel_tension * (s.d - c);
        return f;
    };
    double lo = 1e-9, hi = s.d;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (axial(mid) <= 0) lo = mid;
        else hi = mid;
    }
    const double c = 0.5 * (lo + hi);
    double inertia = 0;
    const double dy = c / strips;
    for (int i = 0; i < strips; ++i) {
        const double y = (i + 0.5) * dy;
        inertia += s.width * dy * (c - y) * (c - y);
    }
    inertia += (s.n - 1.0) * s.steel_compression * (c - s.dp) * (c - s.dp);
    inertia += s.n * s.steel_tension * (s.d - c) * (s.d - c);
    return s.n * moment * (s.d - c) / inertia;
}

// --- continuous beam ----------------------------------------------------------

// Clapeyron three-moment equation for a continuous beam on simple supports
// under a full-length UDL (bending flexibility only). Returns the interior
// support moments, sagging positive.
inline std::vector<double> three_moment_udl(const std::vector<double>& span_lengths, double udl) {
    const int n_spans = static_cast<int>(span_lengths.size());
    const int n_int = n_spans - 1;
    if (n_int < 1) return {};
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_int, n_int);
    Eigen::VectorXd b(n_int);
    for (int i = 0; i < n_int; ++i) {
        const double l1 = span_lengths[i];
        const double l2 = span_lengths[i + 1];
        if (i > 0) a(i, i - 1) = l1;
        a(i, i) = 2.0 * (l1 + l2);
        if (i < n_int - 1) a(i, i + 1) = l2;
        b[i] = -udl * (l1 * l1 * l1 + l2 * l2 * l2) / 4.0;
    }
    const Eigen::VectorXd m = a.fullPivLu().solve(b);
    return std::vector<double>(m.data(), m.data() + m.size());
}

// --- Kriging (dense GLS/BLUP) --------------------------------------------------

struct DenseBlup {
    Eigen::MatrixXd x; // n x d, already scaled the same way as the model under test
    Eigen::VectorXd y;
    std::vector<double> theta;
    double nugget = 0;
    int trend_degree = 0;
    std::function<Eigen::VectorXd(const std::vector<double>&)> basis;

    Eigen::MatrixXd r_inv;
    Eigen::VectorXd beta;
    Eigen::MatrixXd f;
    double sigma2 = 0;
    Eigen::MatrixXd ftrinvf_inv;

    void build() {
        const int n = static_cast<int>(x.rows());
        Eigen::MatrixXd r(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0;
                for (int k = 0; k < x.cols(); ++k) {
                    const double dx = x(i, k) - x(j, k);
                    s += theta[k] * dx * dx;
                }
                r(i, j) = std::exp(-s) + (i == j ? nugget : 0.0);
            }
        r_inv = r.inverse();

        f.resize(n, basis(row(0)).size());
        for (int i = 0; i < n; ++i) f.row(i) = basis(row(i)).transpose();

        const Eigen::MatrixXd gram = f.transpose() * r_inv * f;
        ftrinvf_inv = gram.inverse();
        beta = ftrinvf_inv * f.transpose() * r_inv * y;
        const Eigen::VectorXd resid = y - f * beta;
        sigma2 = (resid.transpose() * r_inv * resid).value() / n;
    }

    std::vector<double> row(int i) const {
        std::vector<double> out(x.cols());
        for (int k = 0; k < x.cols(); ++k) out[k] = x(i, k);
        return out;
    }

    Eigen::VectorXd corr_vector(const std::vector<double>& p) const {
        const int n = static_cast<int>(x.rows());
        Eigen::VectorXd r(n);
        for (int i = 0; i < n; ++i) {
            double s = 0;
            for (int k = 0; k < x.cols(); ++k) {
                const double dx = p[k] - x(i, k);
                s += theta[k] * dx * dx;
            }
            r[i] = std::exp(-s);
        }
        return r;
    }

    double mean(const std::vector<double>& p) const {
        const Eigen::VectorXd r = corr_vector(p);
        return basis(p).dot(beta) + (r.transpose() * r_inv * (y - f * beta)).value();
    }

    double variance(const std::vector<double>& p) const {
        const Eigen::VectorXd r = corr_vector(p);
        const Eigen::VectorXd u = f.transpose() * r_inv * r - basis(p);
        return sigma2 * (1.0 - (r.transpose() * r_inv * r).value() +
                         (u.transpose() * ftrinvf_inv * u).value());
    }
};

// --- PCE helpers ---------------------------------------------------------------

// Explicit leave-one-out: n refits, each dropping one row.
inline double explicit_loo(const Eigen::MatrixXd& psi, const Eigen::VectorXd& y) {
    const int n = static_cast<int>(psi.rows());
    const int m = static_cast<int>(psi.cols());
    double err = 0;
    for (int drop = 0; drop < n; ++drop) {
        Eigen::MatrixXd a(n - 1, m);
        Eigen::VectorXd b(n - 1);
        int r = 0;
        for (int i = 0; i < n; ++i) {
            if (i == drop) continue;
            a.row(r) = psi.row(i);
            b[r] = y[i];
            ++r;
        }
        const Eigen::VectorXd c = a.householderQr().solve(b);
        const double e = y[drop] - psi.row(drop).dot(c);
        err += e * e;
    }
    return err / n;
}

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration.
inline void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(order);
    weights.resize(order);
    for (int i = 0; i < order; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
        for (int it = 0; it < 100; ++it) {
            double pm = 1.0, p = x;
            for (int k = 1; k < order; ++k) {
                const double pn = ((2.0 * k + 1.0) * x * p - k * pm) / (k + 1.0);
                pm = p;
                p = pn;
            }
            const double dp = order * (x * p - pm) / (x * x - 1.0);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double pm = 1.0, p = x;
        for (int k = 1; k < order; ++k) {
            const double pn = ((2.0 * k + 1.0) * x * p - k * pm) / (k + 1.0);
            pm = p;
            p = pn;
        }
        const double dp = order * (x * p - pm) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

// --- SVR (dense projected-gradient QP) -------------------------------------------

// Solves min 0.5 a^T Q a + p^T a over {0 <= a <= C, sum(sign*a) = 0} by
// projected gradient with an exact projection (bisection on the equality
// multiplier). Slow but independent of SMO.
struct DenseSvrQp {
    Eigen::MatrixXd kernel; // n x n
    Eigen::VectorXd y;      // standardized targets
    double c_box = 0;
    double epsilon = 0;

    Eigen::VectorXd alpha; // 2n
    double objective = 0;

    void solve(int max_iter = 400000, double tol = 1e-12) {
        const int n = static_cast<int>(y.size());
        const int nn = 2 * n;
        Eigen::VectorXd p(nn), s(nn);
        for (int i = 0; i < n; ++i) {
            p[i] = epsilon - y[i];
            p[i + n] = epsilon + y[i];
            s[i] = 1.0;
            s[i + n] = -1.0;
        }
        Eigen::MatrixXd q(nn, nn);
        q << kernel, -kernel, -kernel, kernel;

        const double lip = q.operatorNorm() + 1e-12;
        const double step = 1.0 / lip;

        alpha = Eigen::VectorXd::Zero(nn);
        auto project = [&](Eigen::VectorXd v) {
            // find mu with sum(sign * clip(v - mu*sign)) = 0; monotone in mu
            auto balance = [&](double mu) {
                double sum = 0;
                for (int t = 0; t < nn; ++t) {
                    const double a = std::clamp(v[t] - mu * s[t], 0.0, c_box);
                    sum += s[t] * a;
                }
                return sum;
            };
            double lo = -1e12, hi = 1e12;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (balance(mid) > 0) lo = mid;
                else hi = mid;
            }
            const double mu = 0.5 * (lo + hi);
            for (int t = 0; t < nn; ++t) v[t] = std::clamp(v[t] - mu * s[t], 0.0, c_box);
            return v;
        };

        for (int it = 0; it < max_iter; ++it) {
            const Eigen::VectorXd grad = q * alpha + p;
            const Eigen::VectorXd next = project(alpha - step * grad);
            const double move = (next - alpha).norm();
            alpha = next;
            if (move < tol) break;
        }
        objective = 0.5 * alpha.dot(q * alpha) + p.dot(alpha);
    }

    Eigen::VectorXd beta() const {
        const int n = static_cast<int>(y.size());
        return alpha.head(n) - alpha.tail(n);
    }

    // bias from free variables of the oracle solution
    double bias() const {
        const int n = static_cast<int>(y.size());
        const Eigen::VectorXd b = beta();
        double sum = 0;
        int count = 0;
        const double edge = 1e-7 * c_box;
        for (int i = 0; i < n; ++i) {
            const double f_no_bias = kernel.row(i).dot(b);
            if (alpha[i] > edge && alpha[i] < c_box - edge) { // free alpha: f + b = y - eps
                sum += y[i] - epsilon - f_no_bias;
                ++count;
            } else if (alpha[i + n] > edge && alpha[i + n] < c_box - edge) {
                sum += y[i] + epsilon - f_no_bias;
                ++count;
            }
        }
        if (count == 0) throw std::runtime_error("QP oracle: no free support vectors for bias");
        return sum / count;
    }
};

} // namespace oracles
