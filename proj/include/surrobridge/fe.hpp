#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "surrobridge/bridge.hpp"
#include "surrobridge/errors.hpp"

namespace surrobridge {
namespace fe {

// 1-D beam mesh. Nodes include every support exactly; each span is subdivided
// uniformly so no element exceeds target_element_length.
struct Mesh {
    std::vector<double> nodes;        // strictly increasing, m
    std::vector<int> support_nodes;   // indices into nodes, vertical dof fixed
    double target_element_length = 0.25;

    int node_count() const { return static_cast<int>(nodes.size()); }
    int element_count() const { return node_count() - 1; }
    double element_length(int e) const { return nodes[e + 1] - nodes[e]; }
    double total_length() const { return nodes.back(); }
};

inline Mesh make_mesh(const std::vector<double>& supports, double target_element_length) {
    if (supports.size() < 2)
        throw ValidationError("mesh needs at least two supports");
    if (target_element_length <= 0)
        throw ValidationError("target_element_length must be > 0");
    for (std::size_t i = 1; i < supports.size(); ++i)
        if (!(supports[i] > supports[i - 1]))
            throw ValidationError("support positions must be strictly increasing");

    Mesh mesh;
    mesh.target_element_length = target_element_length;
    mesh.nodes.push_back(supports.front());
    mesh.support_nodes.push_back(0);
    for (std::size_t i = 1; i < supports.size(); ++i) {
        const double a = supports[i - 1];
        const double b = supports[i];
        const double span = b - a;
        const int n_el = std::max(1, static_cast<int>(std::ceil(span / target_element_length - 1e-9)));
        for (int j = 1; j < n_el; ++j)
            mesh.nodes.push_back(a + span * j / n_el);
        mesh.nodes.push_back(b);
        mesh.support_nodes.push_back(static_cast<int>(mesh.nodes.size()) - 1);
    }
    return mesh;
}

inline Mesh build_mesh(const DesignPoint& point, const BridgeConfig& config) {
    point.validate(config);
    return make_mesh({0.0, point.x1, point.x2, point.x3, config.total_length},
                     config.target_element_length);
}

// Bending and shear rigidities of the prismatic gross section.
struct BeamStiffness {
    double bending = 0; // EI, N*m^2
    double shear = 0;   // kappa*G*A, N
};

inline BeamStiffness beam_stiffness(const SectionProperties& s, const BridgeConfig& c) {
    return {c.concrete_modulus * s.inertia,
            s.shear_correction * c.shear_modulus() * s.area};
}

// Loads are downward positive.
struct PointLoad {
    double position = 0;  // m from the left end
    double magnitude = 0; // N
};

struct LoadCase {
    std::vector<PointLoad> point_loads;
    double udl = 0; // N/m over the full length
};

struct StaticSolution {
    Eigen::VectorXd deflection; // per node, downward positive, m
    Eigen::VectorXd rotation;   // per node, section rotation, rad
    Eigen::VectorXd moment;     // per node, sagging positive, N*m
};

struct MomentEnvelope {
    Eigen::VectorXd max_sagging; // per node, >= 0
    Eigen::VectorXd max_hogging; // per node, >= 0 (magnitude)
};

namespace detail {

// phi-modified Hermite shape functions of the shear-deformable element,
// evaluated at xi in [0,1]. These span the homogeneous Timoshenko solution,
// so consistent nodal loads equal the exact fixed-end forces and nodal
// results stay exact for loads applied between nodes.
inline Eigen::Vector4d shape_functions(double xi, double length, double phi) {
    const double mu = 1.0 / (1.0 + phi);
    const double xi2 = xi * xi;
    const double xi3 = xi2 * xi;
    Eigen::Vector4d n;
    n[0] = mu * (1.0 - 3.0 * xi2 + 2.0 * xi3 + phi * (1.0 - xi));
    n[1] = length * mu * (xi - 2.0 * xi2 + xi3 + 0.5 * phi * (xi - xi2));
    n[2] = mu * (3.0 * xi2 - 2.0 * xi3 + phi * xi);
    n[3] = length * mu * (-xi2 + xi3 - 0.5 * phi * (xi - xi2));
    return n;
}

inline Eigen::Matrix4d element_stiffness(double length, double ei, double phi) {
    const double l = length;
    const double f = ei / (l * l * l * (1.0 + phi));
    Eigen::Matrix4d k;
    k << 12.0, 6.0 * l, -12.0, 6.0 * l,
         6.0 * l, (4.0 + phi) * l * l, -6.0 * l, (2.0 - phi) * l * l,
         -12.0, -6.0 * l, 12.0, -6.0 * l,
         6.0 * l, (2.0 - phi) * l * l, -6.0 * l, (4.0 + phi) * l * l;
    return f * k;
}

} // namespace detail

// Assembled, factorized Timoshenko system for a fixed mesh and section.
// The factorization is reused across load cases, which is what makes the
// moving-load sweep cheap: one factorization, one back-substitution per
// axle position.
class StaticSystem {
public:
    StaticSystem(const Mesh& mesh, const BeamStiffness& stiffness)
        : mesh_(mesh), stiffness_(stiffness) {
        const int n_nodes = mesh_.node_count();
        const int n_el = mesh_.element_count();
        if (n_el < 1) throw ValidationError("mesh has no elements");

        phi_.resize(n_el);
        k_el_.resize(n_el);
        for (int e = 0; e < n_el; ++e) {
            const double l = mesh_.element_length(e);
            phi_[e] = 12.0 * stiffness_.bending / (stiffness_.shear * l * l);
            k_el_[e] = detail::element_stiffness(l, stiffness_.bending, phi_[e]);
        }

        // dof layout: (w, theta) per node; w fixed at supports
        eq_.assign(2 * n_nodes, -1);
        std::vector<bool> fixed(n_nodes, false);
        for (int s : mesh_.support_nodes) fixed[s] = true;
        int n_eq = 0;
        for (int i = 0; i < n_nodes; ++i) {
            if (!fixed[i]) eq_[2 * i] = n_eq++;
            eq_[2 * i + 1] = n_eq++;
        }
        n_eq_ = n_eq;

        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(16 * n_el);
        for (int e = 0; e < n_el; ++e) {
            const int dofs[4] = {2 * e, 2 * e + 1, 2 * (e + 1), 2 * (e + 1) + 1};
            for (int a = 0; a < 4; ++a) {
                const int ia = eq_[dofs[a]];
                if (ia < 0) continue;
                for (int b = 0; b < 4; ++b) {
                    const int ib = eq_[dofs[b]];
                    if (ib < 0) continue;
                    trips.emplace_back(ia, ib, k_el_[e](a, b));
                }
            }
        }
        Eigen::SparseMatrix<double> k(n_eq_, n_eq_);
        k.setFromTriplets(trips.begin(), trips.end());
        solver_.compute(k);
        if (solver_.info() != Eigen::Success)
            throw NumericalError("stiffness factorization failed (singular system?)");
        const Eigen::VectorXd d = solver_.vectorD().cwiseAbs();
        if (d.minCoeff() < 1e-12 * d.maxCoeff())
            throw NumericalError("stiffness system is singular (mechanism: too few supports?)");
    }

    const Mesh& mesh() const { return mesh_; }

    StaticSolution solve(const LoadCase& loads) const {
        const int n_nodes = mesh_.node_count();
        const int n_el = mesh_.element_count();

        // consistent nodal loads, internal (w up) sign convention
        std::vector<Eigen::Vector4d> f_eq(n_el, Eigen::Vector4d::Zero());
        if (loads.udl != 0.0) {
            for (int e = 0; e < n_el; ++e) {
                const double l = mesh_.element_length(e);
                f_eq[e][0] -= loads.udl * l / 2.0;
                f_eq[e][1] -= loads.udl * l * l / 12.0;
                f_eq[e][2] -= loads.udl * l / 2.0;
                f_eq[e][3] += loads.udl * l * l / 12.0;
            }
        }
        for (const auto& p : loads.point_loads) {
            const int e = locate_element(p.position);
            const double l = mesh_.element_length(e);
            const double xi = (p.position - mesh_.nodes[e]) / l;
            f_eq[e] -= p.magnitude * detail::shape_functions(xi, l, phi_[e]);
        }

        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_eq_);
        for (int e = 0; e < n_el; ++e) {
            const int dofs[4] = {2 * e, 2 * e + 1, 2 * (e + 1), 2 * (e + 1) + 1};
            for (int a = 0; a < 4; ++a)
                if (eq_[dofs[a]] >= 0) rhs[eq_[dofs[a]]] += f_eq[e][a];
        }

        const Eigen::VectorXd x = solver_.solve(rhs);
        if (!x.allFinite())
            throw NumericalError("static solve produced non-finite displacements");

        StaticSolution sol;
        sol.deflection.resize(n_nodes);
        sol.rotation.resize(n_nodes);
        for (int i = 0; i < n_nodes; ++i) {
            const double w_up = eq_[2 * i] >= 0 ? x[eq_[2 * i]] : 0.0;
            sol.deflection[i] = -w_up;
            sol.rotation[i] = x[eq_[2 * i + 1]];
        }

        // end-force recovery: f_end = k_el*u_el - f_eq; sagging internal
        // moment is -M at the element start and +M at the element end
        sol.moment = Eigen::VectorXd::Zero(n_nodes);
        Eigen::VectorXd weight = Eigen::VectorXd::Zero(n_nodes);
        for (int e = 0; e < n_el; ++e) {
            Eigen::Vector4d u;
            u[0] = eq_[2 * e] >= 0 ? x[eq_[2 * e]] : 0.0;
            u[1] = x[eq_[2 * e + 1]];
            u[2] = eq_[2 * (e + 1)] >= 0 ? x[eq_[2 * (e + 1)]] : 0.0;
            u[3] = x[eq_[2 * (e + 1) + 1]];
            const Eigen::Vector4d f_end = k_el_[e] * u - f_eq[e];
            sol.moment[e] += -f_end[1];
            weight[e] += 1.0;
            sol.moment[e + 1] += f_end[3];
            weight[e + 1] += 1.0;
        }
        for (int i = 0; i < n_nodes; ++i) sol.moment[i] /= weight[i];
        return sol;
    }

private:
    int locate_element(double x) const {
        const double lo = mesh_.nodes.front();
        const double hi = mesh_.nodes.back();
        const double tol = 1e-9 * (hi - lo);
        if (x < lo - tol || x > hi + tol) {
            std::ostringstream os;
            os << "load position " << x << " outside [" << lo << ", " << hi << "]";
            throw ValidationError(os.str());
        }
        const double xc = std::clamp(x, lo, hi);
        auto it = std::upper_bound(mesh_.nodes.begin(), mesh_.nodes.end(), xc);
        int e = static_cast<int>(it - mesh_.nodes.begin()) - 1;
        return std::clamp(e, 0, mesh_.element_count() - 1);
    }

    Mesh mesh_;
    BeamStiffness stiffness_;
    std::vector<double> phi_;
    std::vector<Eigen::Matrix4d> k_el_;
    std::vector<int> eq_;
    int n_eq_ = 0;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

inline StaticSolution solve_static(const Mesh& mesh, const BeamStiffness& stiffness,
                                   const LoadCase& loads) {
    return StaticSystem(mesh, stiffness).solve(loads);
}

inline StaticSolution solve_static(const Mesh& mesh, const SectionProperties& section,
                                   const BridgeConfig& config, const LoadCase& loads) {
    return solve_static(mesh, beam_stiffness(section, config), loads);
}

// Moving-load moment envelope. The UDL (plus optional self-weight) acts in
// every case; the axle group is swept across the bridge and per-node extremes
// are kept by sign. Off-bridge axles are dropped.
inline MomentEnvelope moment_envelope(const DesignPoint& point, const BridgeConfig& config) {
    const Mesh mesh = build_mesh(point, config);
    const SectionProperties section = section_properties(config, point.h);
    const StaticSystem system(mesh, beam_stiffness(section, config));
    const LoadModel& lm = config.load_model;

    double udl = lm.udl;
    if (lm.include_self_weight)
        udl += config.unit_weight * section.area;

    const StaticSolution base = system.solve(LoadCase{{}, udl});

    MomentEnvelope env;
    env.max_sagging = base.moment.cwiseMax(0.0);
    env.max_hogging = (-base.moment).cwiseMax(0.0);

    if (lm.axle_load > 0.0) {
        const double total = config.total_length;
        const double group = lm.group_length();
        const int n_steps = static_cast<int>(std::floor((total + group) / lm.sweep_step + 1e-9));
        for (int k = 0; k <= n_steps; ++k) {
            const double start = -group + k * lm.sweep_step;
            LoadCase axles;
            for (int a = 0; a < lm.axle_count; ++a) {
                const double pos = start + a * lm.axle_spacing;
                if (pos >= -1e-9 && pos <= total + 1e-9)
                    axles.point_loads.push_back({std::clamp(pos, 0.0, total), lm.axle_load});
            }
            if (axles.point_loads.empty()) continue;
            const StaticSolution sol = system.solve(axles);
            const Eigen::VectorXd m = base.moment + sol.moment;
            env.max_sagging = env.max_sagging.cwiseMax(m);
            env.max_hogging = env.max_hogging.cwiseMax(-m);
        }
    }
    return env;
}

// q(x): maximum rebar tensile stress over the envelope, both bending signs.
// The section is prismatic, so the stress is linear in the moment magnitude
// and only the envelope maxima matter.
inline double max_steel_stress(const DesignPoint& point, const BridgeConfig& config) {
    const MomentEnvelope env = moment_envelope(point, config);
    const SectionProperties section = section_properties(config, point.h);
    const double m_sag = env.max_sagging.maxCoeff();
    const double m_hog = env.max_hogging.maxCoeff();
    double q = 0.0;
    if (m_sag > 0) q = std::max(q, steel_stress_from_moment(section, m_sag, BendingSign::sagging));
    if (m_hog > 0) q = std::max(q, steel_stress_from_moment(section, m_hog, BendingSign::hogging));
    return q;
}

} // namespace fe
} // namespace surrobridge
