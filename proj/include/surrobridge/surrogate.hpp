#pragma once

#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "surrobridge/errors.hpp"
#include "surrobridge/kriging.hpp"
#include "surrobridge/pce.hpp"
#include "surrobridge/svr.hpp"

namespace surrobridge {

// One trained predictor behind a uniform mean-prediction interface, whatever
// the family. Serialization dispatches on the "family" tag.
class Surrogate {
public:
    Surrogate() = default;
    explicit Surrogate(kriging::KrigingModel m) : model_(std::move(m)) {}
    explicit Surrogate(pce::PceModel m) : model_(std::move(m)) {}
    explicit Surrogate(svr::SvrModel m) : model_(std::move(m)) {}

    std::string family() const {
        if (std::holds_alternative<kriging::KrigingModel>(model_)) return "kriging";
        if (std::holds_alternative<pce::PceModel>(model_)) return "pce";
        if (std::holds_alternative<svr::SvrModel>(model_)) return "svr";
        return "none";
    }

    double predict(const std::vector<double>& point) const {
        if (const auto* k = std::get_if<kriging::KrigingModel>(&model_))
            return kriging::predict(*k, point).mean;
        if (const auto* p = std::get_if<pce::PceModel>(&model_))
            return pce::predict(*p, point);
        if (const auto* s = std::get_if<svr::SvrModel>(&model_))
            return svr::predict(*s, point);
        throw StateError("surrogate holds no model");
    }

    std::vector<double> predict_all(const std::vector<std::vector<double>>& points) const {
        std::vector<double> out;
        out.reserve(points.size());
        for (const auto& p : points) out.push_back(predict(p));
        return out;
    }

    const doe::InputDistribution& distribution() const {
        if (const auto* k = std::get_if<kriging::KrigingModel>(&model_)) return k->distribution;
        if (const auto* p = std::get_if<pce::PceModel>(&model_)) return p->distribution;
        if (const auto* s = std::get_if<svr::SvrModel>(&model_)) return s->distribution;
        throw StateError("surrogate holds no model");
    }

    const kriging::KrigingModel* as_kriging() const {
        return std::get_if<kriging::KrigingModel>(&model_);
    }
    const pce::PceModel* as_pce() const { return std::get_if<pce::PceModel>(&model_); }
    const svr::SvrModel* as_svr() const { return std::get_if<svr::SvrModel>(&model_); }

    nlohmann::json to_json() const {
        if (const auto* k = std::get_if<kriging::KrigingModel>(&model_))
            return kriging::to_json(*k);
        if (const auto* p = std::get_if<pce::PceModel>(&model_)) return pce::to_json(*p);
        if (const auto* s = std::get_if<svr::SvrModel>(&model_)) return svr::to_json(*s);
        throw StateError("cannot serialize an empty surrogate");
    }

    static Surrogate from_json(const nlohmann::json& j) {
        const std::string family = j.at("family").get<std::string>();
        if (family == "kriging") return Surrogate(kriging::from_json(j));
        if (family == "pce") return Surrogate(pce::from_json(j));
        if (family == "svr") return Surrogate(svr::from_json(j));
        throw ValidationError("unknown surrogate family '" + family + "'");
    }

private:
    std::variant<std::monostate, kriging::KrigingModel, pce::PceModel, svr::SvrModel> model_;
};

inline void save_model(const Surrogate& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model file '" + path + "'");
    out << model.to_json().dump(2) << "\n";
}

inline Surrogate load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return Surrogate::from_json(j);
}

} // namespace surrobridge
