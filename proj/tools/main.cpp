// surrobridge CLI: sampling, simulation, surrogate training, and the full
// training-size comparison campaign, glued together by CSV/JSON files.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "surrobridge/bridge.hpp"
#include "surrobridge/dataset.hpp"
#include "surrobridge/doe.hpp"
#include "surrobridge/errors.hpp"
#include "surrobridge/fe.hpp"
#include "surrobridge/kriging.hpp"
#include "surrobridge/metrics.hpp"
#include "surrobridge/pce.hpp"
#include "surrobridge/pipeline.hpp"
#include "surrobridge/surrogate.hpp"
#include "surrobridge/svr.hpp"

namespace sb = surrobridge;

namespace {

sb::BridgeConfig config_from_arg(const std::string& config_path) {
    if (config_path.empty()) return sb::BridgeConfig{};
    return sb::load_config(config_path);
}

sb::doe::InputDistribution bounds_from_arg(const std::string& arg) {
    if (arg.empty()) return sb::doe::InputDistribution::bridge_default();
    nlohmann::json j;
    if (arg.front() == '[' || arg.front() == '{') {
        try {
            j = nlohmann::json::parse(arg);
        } catch (const nlohmann::json::exception& e) {
            throw sb::ValidationError(std::string("--bounds is not valid JSON: ") + e.what());
        }
    } else {
        std::ifstream in(arg);
        if (!in) throw sb::IoError("cannot open bounds file '" + arg + "'");
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw sb::ValidationError("bounds file '" + arg + "' is not valid JSON: " + e.what());
        }
    }
    return sb::bounds_from_json(j);
}

void write_predictions_csv(const std::string& path,
                           const std::vector<std::vector<double>>& points,
                           const std::vector<double>& predictions) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw sb::IoError("cannot write '" + path + "'");
    const auto names = sb::default_input_names(static_cast<int>(points.front().size()));
    for (const auto& n : names) out << n << ",";
    out << "q_pred\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (double v : points[i]) out << sb::format_double(v) << ",";
        out << sb::format_double(predictions[i]) << "\n";
    }
}

std::vector<sb::pipeline::ModelSpec> roster_from_arg(const std::string& arg) {
    if (arg.empty()) return sb::pipeline::default_roster();
    std::vector<sb::pipeline::ModelSpec> roster;
    std::istringstream is(arg);
    std::string id;
    while (std::getline(is, id, ',')) {
        if (id == "pce" || id == "svr") {
            roster.push_back({id, 0});
        } else if (id.rfind("kriging_p", 0) == 0 && id.size() == 10 &&
                   id[9] >= '0' && id[9] <= '4') {
            roster.push_back({"kriging", id[9] - '0'});
        } else {
            throw sb::ValidationError("unknown roster entry '" + id +
                                      "' (expected kriging_p0..kriging_p4, pce, svr)");
        }
    }
    if (roster.empty()) throw sb::ValidationError("--models produced an empty roster");
    return roster;
}

int error_code(const std::exception& e) {
    if (dynamic_cast<const sb::ValidationError*>(&e)) return 2;
    if (dynamic_cast<const sb::NumericalError*>(&e)) return 3;
    if (dynamic_cast<const sb::StateError*>(&e)) return 4;
    if (dynamic_cast<const sb::IoError*>(&e)) return 5;
    return 1;
}

const char* error_type(const std::exception& e) {
    if (dynamic_cast<const sb::ValidationError*>(&e)) return "validation";
    if (dynamic_cast<const sb::NumericalError*>(&e)) return "numerical";
    if (dynamic_cast<const sb::StateError*>(&e)) return "state";
    if (dynamic_cast<const sb::IoError*>(&e)) return "io";
    return "internal";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Surrogate-assisted serviceability analysis of a multi-span "
                 "reinforced-concrete rail bridge"};
    app.require_subcommand(1);

    std::string config_path, bounds_arg, out_path, points_path, data_path, model_path;
    std::string model_family = "kriging", models_arg, rows_path, sizes_arg;
    int n = 0, trend_degree = 3, validation_size = 50, training_size = 0;
    long n_mc = 100000;
    std::uint64_t seed = 42;
    double limit = 0;

    // doe
    auto* doe_cmd = app.add_subcommand("doe", "Latin Hypercube sample of the design space");
    doe_cmd->add_option("--n", n, "number of samples")->required();
    doe_cmd->add_option("--seed", seed, "generator seed");
    doe_cmd->add_option("--bounds", bounds_arg, "bounds JSON (inline or file path)");
    doe_cmd->add_option("--out", out_path, "output points CSV")->required();

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "evaluate max rebar stress per design point");
    sim_cmd->add_option("--config", config_path, "bridge config JSON");
    sim_cmd->add_option("--points", points_path, "input points CSV (x1,x2,x3,h)")->required();
    sim_cmd->add_option("--out", out_path, "output dataset CSV (+ .meta.json sidecar)")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "fit a surrogate on a dataset CSV");
    train_cmd->add_option("--data", data_path, "training dataset CSV")->required();
    train_cmd->add_option("--model", model_family, "kriging|pce|svr")
        ->check(CLI::IsMember({"kriging", "pce", "svr"}));
    train_cmd->add_option("--trend-degree", trend_degree, "kriging trend degree 0..4")
        ->check(CLI::Range(0, 4));
    train_cmd->add_option("--bounds", bounds_arg, "bounds JSON overriding the dataset sidecar");
    train_cmd->add_option("--seed", seed, "seed for SVR cross-validation folds");
    train_cmd->add_option("--out", out_path, "output model JSON")->required();

    // predict
    auto* pred_cmd = app.add_subcommand("predict", "evaluate a trained surrogate");
    pred_cmd->add_option("--model-file", model_path, "model JSON")->required();
    pred_cmd->add_option("--points", points_path, "points CSV")->required();
    pred_cmd->add_option("--out", out_path, "output CSV with q_pred column")->required();

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "metrics of a surrogate on a labeled dataset");
    eval_cmd->add_option("--model-file", model_path, "model JSON")->required();
    eval_cmd->add_option("--data", data_path, "validation dataset CSV")->required();
    eval_cmd->add_option("--training-size", training_size, "training size recorded in the row");
    eval_cmd->add_option("--out", out_path, "output metrics CSV (stdout when omitted)");

    // campaign
    auto* camp_cmd = app.add_subcommand("campaign", "full training-size sweep and model comparison");
    camp_cmd->add_option("--config", config_path, "bridge config JSON");
    camp_cmd->add_option("--seed", seed, "base seed (validation seed; training adds the size)");
    camp_cmd->add_option("--sizes", sizes_arg, "comma-separated training sizes");
    camp_cmd->add_option("--validation-size", validation_size, "validation set size");
    camp_cmd->add_option("--models", models_arg, "comma-separated roster subset");
    camp_cmd->add_option("--out", out_path, "output directory")->required();

    // classify
    auto* cls_cmd = app.add_subcommand("classify", "safe/failure labels from a surrogate");
    cls_cmd->add_option("--model-file", model_path, "model JSON")->required();
    cls_cmd->add_option("--points", points_path, "points CSV")->required();
    cls_cmd->add_option("--limit", limit, "allowable rebar stress L in Pa");
    cls_cmd->add_option("--config", config_path, "bridge config JSON (provides L when --limit absent)");
    cls_cmd->add_option("--out", out_path, "output CSV (g and label per point)")->required();

    // pf
    auto* pf_cmd = app.add_subcommand("pf", "Monte Carlo failure probability on a surrogate");
    pf_cmd->add_option("--model-file", model_path, "model JSON")->required();
    pf_cmd->add_option("--limit", limit, "allowable rebar stress L in Pa");
    pf_cmd->add_option("--config", config_path, "bridge config JSON (provides L when --limit absent)");
    pf_cmd->add_option("--n-mc", n_mc, "Monte Carlo sample count (>= 1000)");
    pf_cmd->add_option("--seed", seed, "Monte Carlo seed");
    pf_cmd->add_option("--out", out_path, "output JSON (stdout when omitted)");

    // report
    auto* rep_cmd = app.add_subcommand("report", "pivot a flat metrics CSV into per-metric series");
    rep_cmd->add_option("--rows", rows_path, "flat metrics CSV (report.csv layout)")->required();
    rep_cmd->add_option("--out", out_path, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        nlohmann::json err{{"error", {{"type", "usage"}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
    }

    try {
        if (*doe_cmd) {
            const auto dist = bounds_from_arg(bounds_arg);
            const auto set = sb::doe::lhs_sample(n, dist, seed);
            sb::write_points_csv(out_path, set.points, sb::default_input_names(dist.dimension()));
            nlohmann::json meta{{"n", n},
                                {"seed", seed},
                                {"generator", sb::doe::kGeneratorName},
                                {"bounds", sb::bounds_to_json(dist)},
                                {"columns", sb::default_input_names(dist.dimension())}};
            std::ofstream meta_out(sb::sidecar_path(out_path), std::ios::binary);
            if (!meta_out) throw sb::IoError("cannot write '" + sb::sidecar_path(out_path) + "'");
            meta_out << meta.dump(2) << "\n";
        } else if (*sim_cmd) {
            const auto config = config_from_arg(config_path);
            const auto points = sb::read_points_csv(points_path, 4);
            sb::Dataset ds;
            ds.inputs = points;
            ds.distribution = sb::doe::InputDistribution::bridge_default();
            ds.config_hash = sb::config_hash(config);
            ds.target_element_length = config.target_element_length;
            ds.sweep_step = config.load_model.sweep_step;
            // carry sampling provenance through when the points carry a sidecar
            std::ifstream meta_in(sb::sidecar_path(points_path));
            if (meta_in) {
                nlohmann::json meta;
                meta_in >> meta;
                if (meta.contains("bounds"))
                    ds.distribution = sb::bounds_from_json(meta["bounds"]);
                if (meta.contains("seed")) ds.seed = meta["seed"].get<std::uint64_t>();
            }
            ds.outputs.resize(points.size());
            for (std::size_t i = 0; i < points.size(); ++i)
                ds.outputs[i] = sb::fe::max_steel_stress(
                    sb::pipeline::design_point_from_row(points[i]), config);
            sb::write_dataset(out_path, ds);
        } else if (*train_cmd) {
            sb::Dataset ds = sb::read_dataset(data_path);
            if (!bounds_arg.empty()) ds.distribution = bounds_from_arg(bounds_arg);
            sb::Surrogate model;
            if (model_family == "kriging") {
                model = sb::Surrogate(sb::kriging::fit(ds, trend_degree));
            } else if (model_family == "pce") {
                model = sb::Surrogate(sb::pce::fit(ds));
            } else {
                const auto grid = sb::svr::default_grid(ds.dimension());
                const auto hp = sb::svr::cross_validate(ds, grid, 5, seed);
                model = sb::Surrogate(sb::svr::fit(ds, hp));
            }
            sb::save_model(model, out_path);
        } else if (*pred_cmd) {
            const auto model = sb::load_model(model_path);
            const auto points = sb::read_points_csv(points_path, model.distribution().dimension());
            write_predictions_csv(out_path, points, model.predict_all(points));
        } else if (*eval_cmd) {
            const auto model = sb::load_model(model_path);
            const sb::Dataset ds = sb::read_dataset(data_path);
            const auto scores = sb::metrics::evaluate(ds.outputs, model.predict_all(ds.inputs));
            std::ostringstream row;
            row << "model_id,training_size,mae,maxae,rmse,r2\n"
                << model.family() << "," << training_size << "," << sb::format_double(scores.mae)
                << "," << sb::format_double(scores.maxae) << "," << sb::format_double(scores.rmse)
                << "," << sb::format_double(scores.r2) << "\n";
            if (out_path.empty()) {
                std::cout << row.str();
            } else {
                std::ofstream out(out_path, std::ios::binary);
                if (!out) throw sb::IoError("cannot write '" + out_path + "'");
                out << row.str();
            }
        } else if (*camp_cmd) {
            sb::pipeline::CampaignPlan plan;
            plan.config = config_from_arg(config_path);
            plan.seed_base = seed;
            plan.validation_size = validation_size;
            plan.roster = roster_from_arg(models_arg);
            if (!sizes_arg.empty()) {
                plan.training_sizes.clear();
                std::istringstream is(sizes_arg);
                std::string tok;
                while (std::getline(is, tok, ','))
                    plan.training_sizes.push_back(std::stoi(tok));
            }
            sb::pipeline::run_campaign(plan, out_path);
        } else if (*cls_cmd) {
            const auto model = sb::load_model(model_path);
            if (limit <= 0)
                limit = config_from_arg(config_path).stress_limit;
            const auto points = sb::read_points_csv(points_path, model.distribution().dimension());
            const auto cls = sb::pipeline::classify(model, points, limit);
            std::ofstream out(out_path, std::ios::binary);
            if (!out) throw sb::IoError("cannot write '" + out_path + "'");
            const auto names = sb::default_input_names(static_cast<int>(points.front().size()));
            for (const auto& nm : names) out << nm << ",";
            out << "g,label\n";
            for (std::size_t i = 0; i < points.size(); ++i) {
                for (double v : points[i]) out << sb::format_double(v) << ",";
                out << sb::format_double(cls.g[i]) << ","
                    << (cls.failure[i] ? "failure" : "safe") << "\n";
            }
        } else if (*pf_cmd) {
            const auto model = sb::load_model(model_path);
            if (limit <= 0)
                limit = config_from_arg(config_path).stress_limit;
            const auto result = sb::pipeline::failure_probability(model, model.distribution(),
                                                                  limit, n_mc, seed);
            nlohmann::json j{{"pf", result.pf},
                             {"n_mc", result.n_samples},
                             {"n_failures", result.n_failures},
                             {"limit", limit}};
            if (std::isnan(result.cov)) j["cov"] = nullptr;
            else j["cov"] = result.cov;
            if (out_path.empty()) {
                std::cout << j.dump(2) << "\n";
            } else {
                std::ofstream out(out_path, std::ios::binary);
                if (!out) throw sb::IoError("cannot write '" + out_path + "'");
                out << j.dump(2) << "\n";
            }
        } else if (*rep_cmd) {
            const auto rows_csv = sb::detail::read_csv(rows_path);
            sb::detail::require_header(rows_csv.front(),
                                       {"model_id", "training_size", "mae", "maxae", "rmse", "r2"},
                                       rows_path);
            sb::pipeline::CampaignResult result;
            for (std::size_t r = 1; r < rows_csv.size(); ++r) {
                if (rows_csv[r].size() != 6)
                    throw sb::ValidationError("metrics CSV row " + std::to_string(r + 1) +
                                              " has wrong field count");
                sb::metrics::MetricsRow row;
                row.model_id = rows_csv[r][0];
                row.training_size = static_cast<int>(sb::parse_double(rows_csv[r][1]));
                row.mae = sb::parse_double(rows_csv[r][2]);
                row.maxae = sb::parse_double(rows_csv[r][3]);
                row.rmse = sb::parse_double(rows_csv[r][4]);
                row.r2 = sb::parse_double(rows_csv[r][5]);
                result.rows.push_back(row);
                result.cells.push_back({row.model_id, row.training_size, "ok", false});
            }
            sb::pipeline::export_report(result, out_path);
        }
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", {{"type", error_type(e)}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return error_code(e);
    }
    return 0;
}
