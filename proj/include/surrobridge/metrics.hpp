#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "surrobridge/errors.hpp"

namespace surrobridge {
namespace metrics {

struct Scores {
    double mae = 0;
    double maxae = 0;
    double rmse = 0;
    double r2 = 0;
};

struct MetricsRow {
    std::string model_id;
    int training_size = 0;
    double mae = 0;
    double maxae = 0;
    double rmse = 0;
    double r2 = 0;
};

// MAE, MaxAE, RMSE, R^2 with population normalization. R^2 may be negative.
inline Scores evaluate(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
    if (y_true.size() != y_pred.size())
        throw ValidationError("metrics: y_true and y_pred lengths differ");
    const std::size_t n = y_true.size();
    if (n < 2) throw ValidationError("metrics: need at least two points");

    double mean = 0;
    for (double v : y_true) mean += v;
    mean /= static_cast<double>(n);

    double abs_sum = 0, abs_max = 0, sq_sum = 0, var_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y_pred[i] - y_true[i];
        abs_sum += std::abs(e);
        abs_max = std::max(abs_max, std::abs(e));
        sq_sum += e * e;
        var_sum += (y_true[i] - mean) * (y_true[i] - mean);
    }
    if (var_sum == 0)
        throw ValidationError("metrics: y_true has zero variance, R^2 undefined");

    Scores s;
    s.mae = abs_sum / static_cast<double>(n);
    s.maxae = abs_max;
    s.rmse = std::sqrt(sq_sum / static_cast<double>(n));
    s.r2 = 1.0 - sq_sum / var_sum;
    return s;
}

} // namespace metrics
} // namespace surrobridge
