#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "surrobridge/errors.hpp"

namespace surrobridge {
namespace doe {

// Name of the generator recorded in dataset sidecars. mt19937_64 has a fully
// specified algorithm, and the helpers below avoid std::uniform_*_distribution
// so the draw sequence is identical across standard libraries.
inline constexpr const char* kGeneratorName = "mt19937_64";

inline double unit_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53; // [0, 1)
}

inline std::uint64_t bounded_uint(std::mt19937_64& rng, std::uint64_t bound) {
    // rejection sampling, exact uniformity
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do { v = rng(); } while (v >= limit);
    return v % bound;
}

template <typename T>
void shuffle(std::vector<T>& values, std::mt19937_64& rng) {
    for (std::size_t i = values.size(); i > 1; --i)
        std::swap(values[i - 1], values[bounded_uint(rng, i)]);
}

// Independent uniform bounds per variable. Defaults give the four-variable
// bridge space: pier positions in meters plus deck thickness.
struct InputDistribution {
    std::vector<std::pair<double, double>> bounds; // (lower, upper) per variable

    static InputDistribution bridge_default() {
        return {{{5.0, 15.0}, {15.0, 25.0}, {25.0, 35.0}, {0.30, 0.60}}};
    }

    int dimension() const { return static_cast<int>(bounds.size()); }

    void validate() const {
        if (bounds.empty()) throw ValidationError("input distribution needs at least one variable");
        for (std::size_t k = 0; k < bounds.size(); ++k)
            if (!(bounds[k].first < bounds[k].second)) {
                std::ostringstream os;
                os << "input distribution: lower >= upper for variable " << k + 1;
                throw ValidationError(os.str());
            }
    }

    bool operator==(const InputDistribution&) const = default;
};

struct SampleSet {
    std::vector<std::vector<double>> points; // n x d, physical units
    std::uint64_t seed = 0;
    InputDistribution distribution;

    int size() const { return static_cast<int>(points.size()); }
};

// Latin Hypercube Sampling: per dimension, the n samples occupy the n
// equiprobable strata exactly once; stratum order is an independent seeded
// permutation and the intra-stratum position is uniform.
inline SampleSet lhs_sample(int n, const InputDistribution& dist, std::uint64_t seed) {
    if (n < 1) throw ValidationError("lhs_sample: n must be >= 1");
    dist.validate();
    const int d = dist.dimension();

    std::mt19937_64 rng(seed);
    SampleSet set;
    set.seed = seed;
    set.distribution = dist;
    set.points.assign(n, std::vector<double>(d, 0.0));

    std::vector<int> strata(n);
    for (int k = 0; k < d; ++k) {
        for (int i = 0; i < n; ++i) strata[i] = i;
        shuffle(strata, rng);
        const double lo = dist.bounds[k].first;
        const double range = dist.bounds[k].second - lo;
        for (int i = 0; i < n; ++i) {
            const double u = (strata[i] + unit_double(rng)) / n;
            set.points[i][k] = lo + range * u;
        }
    }
    return set;
}

namespace detail {

inline void check_in_bounds(const std::vector<double>& point, const InputDistribution& dist) {
    if (static_cast<int>(point.size()) != dist.dimension())
        throw ValidationError("point dimension does not match the input distribution");
    for (std::size_t k = 0; k < point.size(); ++k) {
        const auto [lo, hi] = dist.bounds[k];
        const double tol = 1e-12 * (hi - lo);
        if (point[k] < lo - tol || point[k] > hi + tol) {
            std::ostringstream os;
            os << "coordinate " << k + 1 << " = " << point[k] << " outside [" << lo << ", " << hi << "]";
            throw ValidationError(os.str());
        }
    }
}

} // namespace detail

// Unchecked affine map for consumers that tolerate extrapolation (kriging,
// SVR). The checked maps below reject out-of-bounds coordinates.
inline std::vector<double> to_unit_unchecked(const std::vector<double>& point,
                                             const InputDistribution& dist) {
    if (static_cast<int>(point.size()) != dist.dimension())
        throw ValidationError("point dimension does not match the input distribution");
    std::vector<double> u(point.size());
    for (std::size_t k = 0; k < point.size(); ++k) {
        const auto [lo, hi] = dist.bounds[k];
        u[k] = (point[k] - lo) / (hi - lo);
    }
    return u;
}

// Affine maps between physical space, the unit hypercube, and [-1,1]^d.
inline std::vector<double> to_unit(const std::vector<double>& point, const InputDistribution& dist) {
    detail::check_in_bounds(point, dist);
    std::vector<double> u(point.size());
    for (std::size_t k = 0; k < point.size(); ++k) {
        const auto [lo, hi] = dist.bounds[k];
        u[k] = (point[k] - lo) / (hi - lo);
    }
    return u;
}

inline std::vector<double> from_unit(const std::vector<double>& u, const InputDistribution& dist) {
    if (static_cast<int>(u.size()) != dist.dimension())
        throw ValidationError("point dimension does not match the input distribution");
    std::vector<double> x(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
        const auto [lo, hi] = dist.bounds[k];
        x[k] = lo + (hi - lo) * u[k];
    }
    return x;
}

inline std::vector<double> to_standard(const std::vector<double>& point, const InputDistribution& dist) {
    std::vector<double> xi = to_unit(point, dist);
    for (double& v : xi) v = 2.0 * v - 1.0;
    return xi;
}

inline std::vector<double> from_standard(const std::vector<double>& xi, const InputDistribution& dist) {
    std::vector<double> u(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k) u[k] = 0.5 * (xi[k] + 1.0);
    return from_unit(u, dist);
}

} // namespace doe
} // namespace surrobridge
