#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "surrobridge/bridge.hpp"
#include "surrobridge/dataset.hpp"
#include "surrobridge/doe.hpp"
#include "surrobridge/errors.hpp"
#include "surrobridge/fe.hpp"
#include "surrobridge/kriging.hpp"
#include "surrobridge/metrics.hpp"
#include "surrobridge/pce.hpp"
#include "surrobridge/surrogate.hpp"
#include "surrobridge/svr.hpp"

namespace surrobridge {
namespace pipeline {

using Simulator = std::function<double(const DesignPoint&)>;

inline Simulator make_simulator(const BridgeConfig& config) {
    return [config](const DesignPoint& p) { return fe::max_steel_stress(p, config); };
}

inline DesignPoint design_point_from_row(const std::vector<double>& row) {
    if (row.size() != 4)
        throw ValidationError("design points need exactly 4 coordinates (x1,x2,x3,h)");
    return DesignPoint{row[0], row[1], row[2], row[3]};
}

// LHS sample -> simulator evaluation per point, keyed by index.
inline Dataset generate_dataset(int n, std::uint64_t seed, const BridgeConfig& config,
                                const doe::InputDistribution& dist,
                                const Simulator& simulator) {
    config.validate();
    const doe::SampleSet samples = doe::lhs_sample(n, dist, seed);
    Dataset ds;
    ds.inputs = samples.points;
    ds.outputs.resize(samples.points.size());
    ds.distribution = dist;
    ds.seed = seed;
    ds.config_hash = config_hash(config);
    ds.target_element_length = config.target_element_length;
    ds.sweep_step = config.load_model.sweep_step;
    for (std::size_t i = 0; i < samples.points.size(); ++i) {
        const DesignPoint p = design_point_from_row(samples.points[i]);
        try {
            ds.outputs[i] = simulator(p);
        } catch (const std::exception& e) {
            std::ostringstream os;
            os << "simulator failed at point " << i + 1 << " (x1=" << p.x1 << ", x2=" << p.x2
               << ", x3=" << p.x3 << ", h=" << p.h << "): " << e.what();
            throw NumericalError(os.str());
        }
    }
    return ds;
}

inline Dataset generate_dataset(int n, std::uint64_t seed, const BridgeConfig& config) {
    return generate_dataset(n, seed, config, doe::InputDistribution::bridge_default(),
                            make_simulator(config));
}

// --- campaign ----------------------------------------------------------------

struct ModelSpec {
    std::string family;   // kriging | pce | svr
    int trend_degree = 0; // kriging only

    std::string id() const {
        if (family == "kriging") return "kriging_p" + std::to_string(trend_degree);
        return family;
    }
};

inline std::vector<ModelSpec> default_roster() {
    std::vector<ModelSpec> roster;
    for (int p = 0; p <= 4; ++p) roster.push_back({"kriging", p});
    roster.push_back({"pce", 0});
    roster.push_back({"svr", 0});
    return roster;
}

struct CampaignPlan {
    std::vector<int> training_sizes = {50, 100, 150, 200, 250, 300};
    int validation_size = 50;
    std::vector<ModelSpec> roster = default_roster();
    std::uint64_t seed_base = 42; // validation seed; training seeds are seed_base + size
    BridgeConfig config;
    doe::InputDistribution distribution = doe::InputDistribution::bridge_default();
    std::optional<Simulator> simulator; // test hook; defaults to the FE solver
    kriging::KrigingOptions kriging_options;
    svr::SvrOptions svr_options;
    std::optional<std::vector<svr::HyperParams>> svr_grid;
    int svr_cv_folds = 5;
    double kriging_ridge_fallback = 1e-6; // used when the trend basis outgrows n

    std::uint64_t validation_seed() const { return seed_base; }
    std::uint64_t training_seed(int size) const { return seed_base + static_cast<std::uint64_t>(size); }

    void validate() const {
        config.validate();
        distribution.validate();
        if (training_sizes.empty()) throw ValidationError("campaign: no training sizes");
        if (validation_size < 2) throw ValidationError("campaign: validation size must be >= 2");
        if (roster.empty()) throw ValidationError("campaign: empty model roster");
        for (const auto& spec : roster)
            if (spec.family != "kriging" && spec.family != "pce" && spec.family != "svr")
                throw ValidationError("campaign: unknown surrogate family '" + spec.family + "'");
        for (int size : training_sizes)
            if (training_seed(size) == validation_seed())
                throw ValidationError("campaign: training seed collides with the validation seed");
    }
};

struct CellResult {
    std::string model_id;
    int training_size = 0;
    std::string status = "ok"; // "ok" or "failed: <reason>"
    bool ridge = false;        // kriging fell back to ridge-regularized trend GLS
};

struct CampaignResult {
    std::vector<metrics::MetricsRow> rows;
    std::vector<CellResult> cells;
    std::string config_hash;
};

inline void export_report(const CampaignResult& result, const std::string& out_dir);

namespace detail {

inline Surrogate fit_spec(const ModelSpec& spec, const Dataset& train, const CampaignPlan& plan,
                          bool* used_ridge) {
    if (spec.family == "kriging") {
        kriging::KrigingOptions opts = plan.kriging_options;
        const std::int64_t m =
            pce::binomial(spec.trend_degree + train.dimension(), train.dimension());
        if (m >= train.size() && opts.ridge <= 0) {
            opts.ridge = plan.kriging_ridge_fallback;
            if (used_ridge) *used_ridge = true;
        }
        return Surrogate(kriging::fit(train, spec.trend_degree, opts));
    }
    if (spec.family == "pce") return Surrogate(pce::fit(train));
    if (spec.family == "svr") {
        const auto grid = plan.svr_grid ? *plan.svr_grid : svr::default_grid(train.dimension());
        const std::uint64_t cv_seed = plan.seed_base + 7777 + static_cast<std::uint64_t>(train.size());
        const svr::HyperParams hp =
            svr::cross_validate(train, grid, plan.svr_cv_folds, cv_seed, plan.svr_options);
        return Surrogate(svr::fit(train, hp, plan.svr_options));
    }
    throw ValidationError("unknown surrogate family '" + spec.family + "'");
}

} // namespace detail

// Fit the full roster on each training size against one fixed validation set.
// Cell failures are recorded and do not stop the campaign. When out_dir is
// non-empty, datasets, models, and the report files are persisted there.
inline CampaignResult run_campaign(const CampaignPlan& plan, const std::string& out_dir = "") {
    plan.validate();
    const Simulator sim = plan.simulator ? *plan.simulator : make_simulator(plan.config);

    namespace fs = std::filesystem;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        fs::create_directories(fs::path(out_dir) / "models");
    }

    const Dataset validation = generate_dataset(plan.validation_size, plan.validation_seed(),
                                                plan.config, plan.distribution, sim);
    if (!out_dir.empty())
        write_dataset((fs::path(out_dir) / "validation.csv").string(), validation);

    CampaignResult result;
    result.config_hash = config_hash(plan.config);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    for (int size : plan.training_sizes) {
        const Dataset train = generate_dataset(size, plan.training_seed(size), plan.config,
                                               plan.distribution, sim);
        if (!out_dir.empty())
            write_dataset((fs::path(out_dir) / ("train_" + std::to_string(size) + ".csv")).string(),
                          train);
        for (const auto& spec : plan.roster) {
            CellResult cell;
            cell.model_id = spec.id();
            cell.training_size = size;
            metrics::MetricsRow row;
            row.model_id = cell.model_id;
            row.training_size = size;
            try {
                const Surrogate model = detail::fit_spec(spec, train, plan, &cell.ridge);
                const std::vector<double> pred = model.predict_all(validation.inputs);
                const metrics::Scores s = metrics::evaluate(validation.outputs, pred);
                row.mae = s.mae;
                row.maxae = s.maxae;
                row.rmse = s.rmse;
                row.r2 = s.r2;
                if (!out_dir.empty())
                    save_model(model, (fs::path(out_dir) / "models" /
                                       (cell.model_id + "_n" + std::to_string(size) + ".json"))
                                          .string());
            } catch (const std::exception& e) {
                cell.status = std::string("failed: ") + e.what();
                row.mae = row.maxae = row.rmse = row.r2 = nan;
            }
            result.rows.push_back(row);
            result.cells.push_back(cell);
        }
    }

    if (!out_dir.empty()) export_report(result, out_dir);
    return result;
}

// --- limit-state post-processing ----------------------------------------------

struct ClassificationResult {
    std::vector<double> g;     // L - q_hat, Pa
    std::vector<bool> failure; // g <= 0
    double limit = 0;
    int safe_count = 0;
    int failure_count = 0;
};

inline ClassificationResult classify(const Surrogate& model,
                                     const std::vector<std::vector<double>>& points,
                                     double limit) {
    if (limit <= 0) throw ValidationError("classify: stress limit must be > 0");
    ClassificationResult out;
    out.limit = limit;
    out.g.reserve(points.size());
    out.failure.reserve(points.size());
    for (const auto& p : points) {
        const double g = limit - model.predict(p);
        out.g.push_back(g);
        out.failure.push_back(g <= 0);
        if (g <= 0) ++out.failure_count;
        else ++out.safe_count;
    }
    return out;
}

struct FailureProbability {
    double pf = 0;
    double cov = std::numeric_limits<double>::quiet_NaN(); // undefined when pf == 0
    long n_samples = 0;
    long n_failures = 0;
};

// Crude Monte Carlo on the surrogate: pf = mean of 1[g <= 0] over independent
// uniform draws from the input distribution.
inline FailureProbability failure_probability(const Surrogate& model,
                                              const doe::InputDistribution& dist, double limit,
                                              long n_mc, std::uint64_t seed) {
    if (n_mc < 1000) throw ValidationError("failure_probability: n_mc must be >= 1000");
    if (limit <= 0) throw ValidationError("failure_probability: stress limit must be > 0");
    dist.validate();
    const int d = dist.dimension();

    std::mt19937_64 rng(seed);
    std::vector<double> x(d);
    long failures = 0;
    for (long i = 0; i < n_mc; ++i) {
        for (int k = 0; k < d; ++k) {
            const auto [lo, hi] = dist.bounds[k];
            x[k] = lo + (hi - lo) * doe::unit_double(rng);
        }
        if (limit - model.predict(x) <= 0) ++failures;
    }

    FailureProbability out;
    out.n_samples = n_mc;
    out.n_failures = failures;
    out.pf = static_cast<double>(failures) / static_cast<double>(n_mc);
    if (out.pf > 0)
        out.cov = std::sqrt((1.0 - out.pf) / (static_cast<double>(n_mc) * out.pf));
    return out;
}

// --- report emission -----------------------------------------------------------

inline nlohmann::json report_json(const CampaignResult& result) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        const auto& r = result.rows[i];
        const auto& c = result.cells[i];
        rows.push_back({{"model_id", r.model_id},
                        {"training_size", r.training_size},
                        {"mae", r.mae},
                        {"maxae", r.maxae},
                        {"rmse", r.rmse},
                        {"r2", r.r2},
                        {"status", c.status},
                        {"ridge", c.ridge}});
    }
    return nlohmann::json{{"config_hash", result.config_hash}, {"rows", rows}};
}

// report.csv: one row per (model, size). Per-metric pivot CSVs: one column
// per model, one row per training size, ready to plot metric vs. size.
inline void export_report(const CampaignResult& result, const std::string& out_dir) {
    if (result.rows.empty()) throw ValidationError("export_report: no metric rows");
    if (result.rows.size() != result.cells.size())
        throw ValidationError("export_report: rows and cell metadata out of sync");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    {
        std::ofstream out(fs::path(out_dir) / "report.csv", std::ios::binary);
        if (!out) throw IoError("cannot write report.csv");
        out << "model_id,training_size,mae,maxae,rmse,r2\n";
        for (const auto& r : result.rows)
            out << r.model_id << "," << r.training_size << "," << format_double(r.mae) << ","
                << format_double(r.maxae) << "," << format_double(r.rmse) << ","
                << format_double(r.r2) << "\n";
    }

    {
        std::ofstream out(fs::path(out_dir) / "report.json", std::ios::binary);
        if (!out) throw IoError("cannot write report.json");
        out << report_json(result).dump(2) << "\n";
    }

    // stable orderings: sizes ascending, models in first-appearance order
    std::vector<int> sizes;
    std::vector<std::string> ids;
    for (const auto& r : result.rows) {
        if (std::find(sizes.begin(), sizes.end(), r.training_size) == sizes.end())
            sizes.push_back(r.training_size);
        if (std::find(ids.begin(), ids.end(), r.model_id) == ids.end())
            ids.push_back(r.model_id);
    }
    std::sort(sizes.begin(), sizes.end());

    const struct {
        const char* name;
        double metrics::MetricsRow::*field;
    } series[] = {{"mae", &metrics::MetricsRow::mae},
                  {"maxae", &metrics::MetricsRow::maxae},
                  {"rmse", &metrics::MetricsRow::rmse},
                  {"r2", &metrics::MetricsRow::r2}};

    for (const auto& metric : series) {
        std::ofstream out(fs::path(out_dir) / (std::string(metric.name) + ".csv"),
                          std::ios::binary);
        if (!out) throw IoError(std::string("cannot write ") + metric.name + ".csv");
        out << "training_size";
        for (const auto& id : ids) out << "," << id;
        out << "\n";
        for (int size : sizes) {
            out << size;
            for (const auto& id : ids) {
                double v = std::numeric_limits<double>::quiet_NaN();
                for (const auto& r : result.rows)
                    if (r.training_size == size && r.model_id == id) v = r.*metric.field;
                out << "," << format_double(v);
            }
            out << "\n";
        }
    }
}

} // namespace pipeline
} // namespace surrobridge
