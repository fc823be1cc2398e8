#include <catch2/catch_amalgamated.hpp>

#include "surrobridge/pce.hpp"

#include "oracles.hpp"

using namespace surrobridge;
using doe::InputDistribution;

namespace {

Dataset dataset_from_target(const InputDistribution& dist, int n, std::uint64_t seed,
                            const std::function<double(const std::vector<double>&)>& target) {
    const auto set = doe::lhs_sample(n, dist, seed);
    Dataset ds;
    ds.distribution = dist;
    ds.inputs = set.points;
    for (const auto& p : set.points) ds.outputs.push_back(target(p));
    return ds;
}

} // namespace

TEST_CASE("orthonormal Legendre values") {
    CHECK(pce::legendre_orthonormal(0, 0.3) == 1.0);
    CHECK(pce::legendre_orthonormal(1, 1.0) == Catch::Approx(std::sqrt(3.0)));
    CHECK(pce::legendre_orthonormal(2, 0.0) == Catch::Approx(-std::sqrt(5.0) / 2.0));
    CHECK(pce::legendre_orthonormal(3, 0.5) ==
          Catch::Approx(std::sqrt(7.0) * 0.5 * (5.0 * 0.125 - 3.0 * 0.5)));
    CHECK_THROWS_AS(pce::legendre_orthonormal(2, 1.1), ValidationError);
    CHECK_THROWS_AS(pce::legendre_orthonormal(-1, 0.0), ValidationError);
}

TEST_CASE("Legendre basis is orthonormal under Gauss quadrature") {
    // d = 2 smoke case, all pairs up to total degree 3
    const auto indices = pce::multi_index_set(2, 3);
    std::vector<double> nodes, weights;
    oracles::gauss_legendre(8, nodes, weights);
    for (std::size_t a = 0; a < indices.size(); ++a) {
        for (std::size_t b = a; b < indices.size(); ++b) {
            double integral = 0;
            for (std::size_t i = 0; i < nodes.size(); ++i)
                for (std::size_t j = 0; j < nodes.size(); ++j)
                    integral += weights[i] * weights[j] * 0.25 *
                                pce::basis_value(indices[a], {nodes[i], nodes[j]}) *
                                pce::basis_value(indices[b], {nodes[i], nodes[j]});
            CHECK(integral == Catch::Approx(a == b ? 1.0 : 0.0).margin(1e-10));
        }
    }
}

TEST_CASE("multi-index sets") {
    CHECK(pce::multi_index_set(4, 0) == std::vector<pce::MultiIndex>{{0, 0, 0, 0}});
    CHECK(pce::multi_index_set(4, 2).size() == 15);
    CHECK(pce::multi_index_set(1, 3) ==
          std::vector<pce::MultiIndex>{{0}, {1}, {2}, {3}});
    // graded lex: degree blocks, first variable leading inside a block
    const auto set = pce::multi_index_set(2, 2);
    const std::vector<pce::MultiIndex> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    CHECK(set == expected);
    CHECK(pce::binomial(7, 4) == 35);
    CHECK(pce::binomial(8, 4) == 70);
}

TEST_CASE("constant target selects degree zero") {
    const InputDistribution dist{{{0.0, 1.0}, {0.0, 1.0}}};
    const Dataset ds = dataset_from_target(dist, 12, 3, [](const auto&) { return 7.5; });
    const auto model = pce::fit(ds);
    CHECK(model.degree == 0);
    CHECK(model.coefficients[0] == Catch::Approx(7.5));
    CHECK(model.loo_error <= 1e-20);
    CHECK(pce::predict(model, {0.3, 0.9}) == Catch::Approx(7.5));
}

TEST_CASE("quadratic identity: xi^2 = 1/3 + (2/3) P2") {
    const InputDistribution dist{{{-1.0, 1.0}}};
    const Dataset ds = dataset_from_target(dist, 12, 5, [](const std::vector<double>& x) {
        return x[0] * x[0];
    });
    const auto model = pce::fit(ds);
    REQUIRE(model.degree >= 2);
    const auto& idx = model.indices;
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const int order = idx[j][0];
        const double c = model.coefficients[static_cast<Eigen::Index>(j)];
        if (order == 0) CHECK(c == Catch::Approx(1.0 / 3.0).epsilon(1e-10));
        else if (order == 2) CHECK(c == Catch::Approx(2.0 / (3.0 * std::sqrt(5.0))).epsilon(1e-10));
        else CHECK(c == Catch::Approx(0.0).margin(1e-10));
    }
}

TEST_CASE("hat-matrix LOO equals explicit refits") {
    const InputDistribution dist{{{0.0, 1.0}}};
    // rough target so the LOO error is well away from zero
    const Dataset ds = dataset_from_target(dist, 12, 11, [](const std::vector<double>& x) {
        return std::sin(9.0 * x[0]) + 0.3 * std::sin(37.0 * x[0]);
    });
    const auto model = pce::fit(ds);

    // rebuild the selected design matrix and run the n-refit oracle
    Eigen::MatrixXd psi(ds.size(), static_cast<Eigen::Index>(model.indices.size()));
    Eigen::VectorXd y(ds.size());
    for (int i = 0; i < ds.size(); ++i) {
        const auto xi = doe::to_standard(ds.inputs[i], dist);
        for (std::size_t j = 0; j < model.indices.size(); ++j)
            psi(i, static_cast<Eigen::Index>(j)) = pce::basis_value(model.indices[j], xi);
        y[i] = ds.outputs[i];
    }
    const double loo_refit = oracles::explicit_loo(psi, y);
    const double var = (y.array() - y.mean()).square().mean();
    CHECK(model.loo_error == Catch::Approx(loo_refit / var).epsilon(1e-9));
}

TEST_CASE("polynomial targets of selectable degree are reproduced") {
    const InputDistribution dist{{{0.0, 2.0}, {1.0, 3.0}}};
    const Dataset ds = dataset_from_target(dist, 40, 13, [](const std::vector<double>& x) {
        return 4.0 - 2.0 * x[0] + 0.5 * x[1] + 0.25 * x[0] * x[1] - 0.1 * x[1] * x[1];
    });
    const auto model = pce::fit(ds);
    const auto probes = doe::lhs_sample(15, dist, 99);
    for (const auto& p : probes.points) {
        const double expected = 4.0 - 2.0 * p[0] + 0.5 * p[1] + 0.25 * p[0] * p[1] - 0.1 * p[1] * p[1];
        CHECK(pce::predict(model, p) == Catch::Approx(expected).epsilon(1e-8));
    }
}

TEST_CASE("mean and variance match Monte Carlo on a closed-form target") {
    const InputDistribution dist{{{0.0, 1.0}, {0.0, 1.0}}};
    auto target = [](const std::vector<double>& x) {
        return std::exp(x[0]) + 2.0 * x[1];
    };
    const Dataset ds = dataset_from_target(dist, 60, 21, target);
    const auto model = pce::fit(ds);

    std::mt19937_64 rng(1234);
    const int n_mc = 100000;
    double mean = 0, m2 = 0;
    for (int i = 0; i < n_mc; ++i) {
        const double v = target({doe::unit_double(rng), doe::unit_double(rng)});
        mean += v;
        m2 += v * v;
    }
    mean /= n_mc;
    const double variance = m2 / n_mc - mean * mean;

    // c0 is the expansion mean; Parseval gives the variance
    CHECK(model.coefficients[0] == Catch::Approx(mean).epsilon(0.01));
    double parseval = 0;
    for (Eigen::Index j = 1; j < model.coefficients.size(); ++j)
        parseval += model.coefficients[j] * model.coefficients[j];
    CHECK(parseval == Catch::Approx(variance).epsilon(0.02));
}

TEST_CASE("degree selection never exceeds the basis-size guard") {
    const InputDistribution dist = InputDistribution::bridge_default();
    const Dataset ds = dataset_from_target(dist, 10, 31, [](const std::vector<double>& x) {
        return x[0] * x[3];
    });
    const auto model = pce::fit(ds);
    // n-1 = 9 admits only degrees with C(p+4,4) <= 9, i.e. p <= 1
    CHECK(model.degree <= 1);
    CHECK(pce::binomial(model.degree + 4, 4) <= 9);
}

TEST_CASE("pce rejects out-of-bounds prediction points") {
    const InputDistribution dist{{{0.0, 1.0}}};
    const Dataset ds = dataset_from_target(dist, 10, 41, [](const std::vector<double>& x) {
        return x[0];
    });
    const auto model = pce::fit(ds);
    CHECK_THROWS_AS(pce::predict(model, {1.5}), ValidationError);
    CHECK_THROWS_AS(pce::predict(model, {-0.2}), ValidationError);
}

TEST_CASE("pce serialization round-trips bit-exactly") {
    const InputDistribution dist{{{0.0, 1.0}, {0.0, 1.0}}};
    const Dataset ds = dataset_from_target(dist, 25, 51, [](const std::vector<double>& x) {
        return std::sin(3.0 * x[0]) * (1.0 + x[1]);
    });
    const auto model = pce::fit(ds);
    const std::string first = pce::to_json(model).dump();
    const auto loaded = pce::from_json(nlohmann::json::parse(first));
    CHECK(pce::to_json(loaded).dump() == first);
    for (const auto& p : doe::lhs_sample(6, dist, 2).points)
        CHECK(pce::predict(loaded, p) == pce::predict(model, p));
}

TEST_CASE("unfitted pce model refuses to predict") {
    pce::PceModel empty;
    CHECK_THROWS_AS(pce::predict(empty, {0.5}), StateError);
    CHECK_THROWS_AS(pce::fit(Dataset{}), ValidationError);
}
