#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "surrobridge/errors.hpp"

namespace surrobridge {

// LM-71 rail loading, doubled for two loaded tracks (EN 1991-2 values x 2).
struct LoadModel {
    int axle_count = 4;
    double axle_load = 500e3;   // N per axle
    double axle_spacing = 1.6;  // m
    double udl = 160e3;         // N/m over the full length
    bool include_self_weight = true;
    double sweep_step = 0.1;    // m, axle-group sweep increment

    double group_length() const { return (axle_count - 1) * axle_spacing; }

    void validate() const {
        if (axle_count < 1) throw ValidationError("load_model.axle_count must be >= 1");
        if (axle_load < 0) throw ValidationError("load_model.axle_load must be >= 0");
        if (axle_spacing <= 0) throw ValidationError("load_model.axle_spacing must be > 0");
        if (udl < 0) throw ValidationError("load_model.udl must be >= 0");
        if (sweep_step <= 0) throw ValidationError("load_model.sweep_step must be > 0");
    }
};

// Fixed description of the four-span deck. End supports sit at 0 and
// total_length; the three interior pier positions and the thickness are the
// design variables (DesignPoint).
struct BridgeConfig {
    double total_length = 40.0;          // m
    double width = 8.0;                  // m
    double concrete_modulus = 30e9;      // Pa (C30/37)
    double concrete_poisson = 0.2;
    double steel_modulus = 200e9;        // Pa (B500)
    double unit_weight = 25e3;           // N/m^3 reinforced concrete
    double reinforcement_ratio = 0.01;   // fraction of gross area, split top/bottom
    double cover_to_bar_centroid = 0.05; // m
    double stress_limit = 400e6;         // Pa, allowable rebar stress L
    double target_element_length = 0.25; // m, FE discretization target
    LoadModel load_model;

    double shear_modulus() const { return concrete_modulus / (2.0 * (1.0 + concrete_poisson)); }
    double modular_ratio() const { return steel_modulus / concrete_modulus; }

    void validate() const {
        if (total_length <= 0) throw ValidationError("total_length must be > 0");
        if (width <= 0) throw ValidationError("width must be > 0");
        if (concrete_modulus <= 0) throw ValidationError("concrete_modulus must be > 0");
        if (steel_modulus <= concrete_modulus)
            throw ValidationError("steel_modulus must exceed concrete_modulus");
        if (concrete_poisson < 0 || concrete_poisson >= 0.5)
            throw ValidationError("concrete_poisson must lie in [0, 0.5)");
        if (unit_weight < 0) throw ValidationError("unit_weight must be >= 0");
        if (reinforcement_ratio <= 0 || reinforcement_ratio >= 0.08)
            throw ValidationError("reinforcement_ratio must lie in (0, 0.08)");
        if (cover_to_bar_centroid < 0)
            throw ValidationError("cover_to_bar_centroid must be >= 0");
        if (stress_limit <= 0) throw ValidationError("stress_limit must be > 0");
        if (target_element_length <= 0)
            throw ValidationError("target_element_length must be > 0");
        load_model.validate();
    }
};

// One realization of the random design vector: interior pier positions plus
// deck thickness.
struct DesignPoint {
    double x1 = 10.0; // m, 2nd pier
    double x2 = 20.0; // m, 3rd pier
    double x3 = 30.0; // m, 4th pier
    double h = 0.45;  // m, deck thickness

    void validate(const BridgeConfig& config) const {
        if (!(x1 > 0)) throw ValidationError("design point: x1 must be > 0");
        if (!(x2 > x1)) throw ValidationError("design point: x2 must exceed x1");
        if (!(x3 > x2)) throw ValidationError("design point: x3 must exceed x2");
        if (!(x3 < config.total_length))
            throw ValidationError("design point: x3 must be below total_length");
        if (!(h > 0)) throw ValidationError("design point: h must be > 0");
    }
};

// Rectangular gross section plus the two rebar layers, ready for cracked
// analysis. Steel split equally between top and bottom layers at
// cover_to_bar_centroid from each face.
struct SectionProperties {
    double width = 0;            // b, m
    double thickness = 0;        // h, m
    double area = 0;             // A = b*h
    double inertia = 0;          // I = b*h^3/12 (gross)
    double shear_correction = 5.0 / 6.0;
    double steel_area_top = 0;   // m^2
    double steel_area_bot = 0;   // m^2
    double effective_depth = 0;  // d = h - cover, depth of the far steel layer
    double cover = 0;            // d' of the near layer
    double modular_ratio = 0;    // n = E_s/E_c
};

enum class BendingSign { sagging, hogging };

inline SectionProperties section_properties(const BridgeConfig& config, double h) {
    if (!(h >= 0.05 && h <= 2.0)) {
        std::ostringstream os;
        os << "section thickness h = " << h << " m outside the supported band [0.05, 2] m";
        throw ValidationError(os.str());
    }
    if (config.cover_to_bar_centroid >= h / 2.0)
        throw ValidationError("cover_to_bar_centroid must be below h/2");
    SectionProperties s;
    s.width = config.width;
    s.thickness = h;
    s.area = config.width * h;
    s.inertia = config.width * h * h * h / 12.0;
    s.shear_correction = 5.0 / 6.0;
    s.steel_area_top = 0.5 * config.reinforcement_ratio * s.area;
    s.steel_area_bot = s.steel_area_top;
    s.effective_depth = h - config.cover_to_bar_centroid;
    s.cover = config.cover_to_bar_centroid;
    s.modular_ratio = config.modular_ratio();
    return s;
}

namespace detail {

// Tension/compression layer split for a given bending sign. Sagging puts the
// bottom layer in tension; the section is built symmetric so both signs give
// the same numbers, but the split is kept general.
struct CrackedLayers {
    double steel_tension = 0;      // A_s on the tension side
    double steel_compression = 0;  // A_s on the compression side
    double d = 0;                  // depth of the tension layer from the compressed face
    double dp = 0;                 // depth of the compression layer
};

inline CrackedLayers cracked_layers(const SectionProperties& s, BendingSign sign) {
    CrackedLayers layers;
    if (sign == BendingSign::sagging) {
        layers.steel_tension = s.steel_area_bot;
        layers.steel_compression = s.steel_area_top;
    } else {
        layers.steel_tension = s.steel_area_top;
        layers.steel_compression = s.steel_area_bot;
    }
    layers.d = s.effective_depth;
    layers.dp = s.cover;
    return layers;
}

} // namespace detail

// Depth of the cracked-section neutral axis from the compressed face.
// Solves b*c^2/2 + (n-1)*A_sc*(c - d') = n*A_st*(d - c) for the positive root.
inline double cracked_neutral_axis(const SectionProperties& s, BendingSign sign) {
    const auto layers = detail::cracked_layers(s, sign);
    const double n = s.modular_ratio;
    if (layers.steel_tension <= 0) return 0.0; // no tension steel, no compression block

    const double a2 = s.width / 2.0;
    const double a1 = (n - 1.0) * layers.steel_compression + n * layers.steel_tension;
    const double a0 = -((n - 1.0) * layers.steel_compression * layers.dp +
                        n * layers.steel_tension * layers.d);
    const double disc = a1 * a1 - 4.0 * a2 * a0;
    if (disc < 0) throw NumericalError("cracked section: no real neutral-axis root");
    const double c = (-a1 + std::sqrt(disc)) / (2.0 * a2);
    if (!(c > 0 && c < layers.d))
        throw NumericalError("cracked section: neutral axis outside (0, d)");
    return c;
}

// Cracked transformed inertia about the neutral axis: concrete compression
// block plus both steel layers weighted by (n-1) and n.
inline double cracked_inertia(const SectionProperties& s, BendingSign sign, double c) {
    const auto layers = detail::cracked_layers(s, sign);
    const double n = s.modular_ratio;
    const double dc = c - layers.dp;
    const double dt = layers.d - c;
    return s.width * c * c * c / 3.0 +
           (n - 1.0) * layers.steel_compression * dc * dc +
           n * layers.steel_tension * dt * dt;
}

// Rebar tensile stress for a bending moment magnitude in the given sign.
inline double steel_stress_from_moment(const SectionProperties& s, double moment,
                                       BendingSign sign) {
    if (moment < 0)
        throw ValidationError("steel_stress_from_moment: moment magnitude must be >= 0");
    if (moment == 0) return 0.0;
    const double c = cracked_neutral_axis(s, sign);
    const double icr = cracked_inertia(s, sign, c);
    const auto layers = detail::cracked_layers(s, sign);
    return s.modular_ratio * moment * (layers.d - c) / icr;
}

// --- JSON config ------------------------------------------------------------

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                                const std::string& scope) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool found = false;
        for (const char* k : known)
            if (it.key() == k) { found = true; break; }
        if (!found)
            throw ValidationError("unknown config key '" + scope + it.key() + "'");
    }
}

template <typename T>
void assign_if_present(const nlohmann::json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

} // namespace detail

inline LoadModel load_model_from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(j,
        {"axle_count", "axle_load", "axle_spacing", "udl", "include_self_weight", "sweep_step"},
        "load_model.");
    LoadModel lm;
    detail::assign_if_present(j, "axle_count", lm.axle_count);
    detail::assign_if_present(j, "axle_load", lm.axle_load);
    detail::assign_if_present(j, "axle_spacing", lm.axle_spacing);
    detail::assign_if_present(j, "udl", lm.udl);
    detail::assign_if_present(j, "include_self_weight", lm.include_self_weight);
    detail::assign_if_present(j, "sweep_step", lm.sweep_step);
    return lm;
}

inline BridgeConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("bridge config must be a JSON object");
    detail::reject_unknown_keys(j,
        {"total_length", "width", "concrete_modulus", "concrete_poisson", "steel_modulus",
         "unit_weight", "reinforcement_ratio", "cover_to_bar_centroid", "stress_limit",
         "target_element_length", "load_model"},
        "");
    BridgeConfig c;
    detail::assign_if_present(j, "total_length", c.total_length);
    detail::assign_if_present(j, "width", c.width);
    detail::assign_if_present(j, "concrete_modulus", c.concrete_modulus);
    detail::assign_if_present(j, "concrete_poisson", c.concrete_poisson);
    detail::assign_if_present(j, "steel_modulus", c.steel_modulus);
    detail::assign_if_present(j, "unit_weight", c.unit_weight);
    detail::assign_if_present(j, "reinforcement_ratio", c.reinforcement_ratio);
    detail::assign_if_present(j, "cover_to_bar_centroid", c.cover_to_bar_centroid);
    detail::assign_if_present(j, "stress_limit", c.stress_limit);
    detail::assign_if_present(j, "target_element_length", c.target_element_length);
    if (auto it = j.find("load_model"); it != j.end())
        c.load_model = load_model_from_json(*it);
    c.validate();
    return c;
}

inline nlohmann::json config_to_json(const BridgeConfig& c) {
    nlohmann::json lm = {
        {"axle_count", c.load_model.axle_count},
        {"axle_load", c.load_model.axle_load},
        {"axle_spacing", c.load_model.axle_spacing},
        {"udl", c.load_model.udl},
        {"include_self_weight", c.load_model.include_self_weight},
        {"sweep_step", c.load_model.sweep_step},
    };
    return nlohmann::json{
        {"total_length", c.total_length},
        {"width", c.width},
        {"concrete_modulus", c.concrete_modulus},
        {"concrete_poisson", c.concrete_poisson},
        {"steel_modulus", c.steel_modulus},
        {"unit_weight", c.unit_weight},
        {"reinforcement_ratio", c.reinforcement_ratio},
        {"cover_to_bar_centroid", c.cover_to_bar_centroid},
        {"stress_limit", c.stress_limit},
        {"target_element_length", c.target_element_length},
        {"load_model", lm},
    };
}

inline BridgeConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

// Stable hash of the canonical JSON serialization; embedded in every dataset,
// model, and report for traceability.
inline std::string config_hash(const BridgeConfig& c) {
    const std::uint64_t h = fnv1a64(config_to_json(c).dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace surrobridge
