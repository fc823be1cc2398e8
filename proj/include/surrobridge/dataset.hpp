#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "surrobridge/doe.hpp"
#include "surrobridge/errors.hpp"

namespace surrobridge {

// Shortest round-trip decimal form. Keeps CSV output byte-stable across runs
// and exactly re-parseable.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ValidationError("cannot parse number '" + s + "'");
    return v;
}

inline std::vector<std::string> default_input_names(int d) {
    if (d == 4) return {"x1", "x2", "x3", "h"};
    std::vector<std::string> names;
    for (int k = 1; k <= d; ++k) names.push_back("x" + std::to_string(k));
    return names;
}

// Paired inputs/outputs of simulator runs, with the provenance needed to
// reproduce them: sampling seed, generator, bounds, and the config hash.
struct Dataset {
    std::vector<std::vector<double>> inputs; // n x d
    std::vector<double> outputs;             // q per point, Pa
    doe::InputDistribution distribution;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string generator = doe::kGeneratorName;
    double target_element_length = 0;
    double sweep_step = 0;

    int size() const { return static_cast<int>(inputs.size()); }
    int dimension() const { return inputs.empty() ? distribution.dimension()
                                                  : static_cast<int>(inputs.front().size()); }

    // surrogates only need paired rows; simulator outputs must also be
    // non-negative stresses
    void check_consistent() const {
        if (inputs.size() != outputs.size())
            throw ValidationError("dataset: input and output counts differ");
    }

    void validate() const {
        check_consistent();
        for (double q : outputs)
            if (!(q >= 0)) throw ValidationError("dataset: outputs must be >= 0");
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open CSV file '" + path + "'");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(split_csv_line(line));
    }
    if (rows.empty()) throw ValidationError("CSV file '" + path + "' is empty (header required)");
    return rows;
}

inline void require_header(const std::vector<std::string>& header,
                           const std::vector<std::string>& expected, const std::string& path) {
    if (header != expected) {
        std::string want;
        for (std::size_t i = 0; i < expected.size(); ++i)
            want += (i ? "," : "") + expected[i];
        throw ValidationError("CSV '" + path + "' must start with header '" + want + "'");
    }
}

} // namespace detail

// --- points CSV (x1,x2,x3,h) -------------------------------------------------

inline void write_points_csv(const std::string& path,
                             const std::vector<std::vector<double>>& points,
                             const std::vector<std::string>& names) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
    out << "\n";
    for (const auto& p : points) {
        for (std::size_t k = 0; k < p.size(); ++k)
            out << (k ? "," : "") << format_double(p[k]);
        out << "\n";
    }
}

inline std::vector<std::vector<double>> read_points_csv(const std::string& path, int dimension) {
    const auto rows = detail::read_csv(path);
    detail::require_header(rows.front(), default_input_names(dimension), path);
    std::vector<std::vector<double>> points;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (static_cast<int>(rows[r].size()) != dimension)
            throw ValidationError("CSV '" + path + "': row " + std::to_string(r + 1) +
                                  " has wrong field count");
        std::vector<double> p(dimension);
        for (int k = 0; k < dimension; ++k) p[k] = parse_double(rows[r][k]);
        points.push_back(std::move(p));
    }
    return points;
}

// --- dataset CSV (x1,x2,x3,h,q) + JSON sidecar -------------------------------

inline std::string sidecar_path(const std::string& csv_path) {
    const auto dot = csv_path.rfind('.');
    const std::string stem = dot == std::string::npos ? csv_path : csv_path.substr(0, dot);
    return stem + ".meta.json";
}

inline nlohmann::json bounds_to_json(const doe::InputDistribution& dist) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [lo, hi] : dist.bounds) arr.push_back({lo, hi});
    return arr;
}

inline doe::InputDistribution bounds_from_json(const nlohmann::json& j) {
    doe::InputDistribution dist;
    if (j.is_array()) {
        for (const auto& pair : j) {
            if (!pair.is_array() || pair.size() != 2)
                throw ValidationError("bounds: each entry must be a [lower, upper] pair");
            dist.bounds.emplace_back(pair[0].get<double>(), pair[1].get<double>());
        }
    } else if (j.is_object()) {
        // named form {"x1": [5,15], ...}; keys must be the default names
        std::vector<std::pair<double, double>> named;
        const auto names = default_input_names(static_cast<int>(j.size()));
        for (const auto& name : names) {
            auto it = j.find(name);
            if (it == j.end())
                throw ValidationError("bounds object is missing key '" + name + "'");
            if (!it->is_array() || it->size() != 2)
                throw ValidationError("bounds['" + name + "'] must be a [lower, upper] pair");
            named.emplace_back((*it)[0].get<double>(), (*it)[1].get<double>());
        }
        dist.bounds = std::move(named);
    } else {
        throw ValidationError("bounds must be a JSON array of pairs or a named object");
    }
    dist.validate();
    return dist;
}

inline void write_dataset(const std::string& csv_path, const Dataset& ds) {
    ds.validate();
    const auto names = default_input_names(ds.dimension());
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + csv_path + "'");
    for (const auto& n : names) out << n << ",";
    out << "q\n";
    for (int i = 0; i < ds.size(); ++i) {
        for (double v : ds.inputs[i]) out << format_double(v) << ",";
        out << format_double(ds.outputs[i]) << "\n";
    }
    out.close();

    nlohmann::json meta{
        {"n", ds.size()},
        {"seed", ds.seed},
        {"generator", ds.generator},
        {"bounds", bounds_to_json(ds.distribution)},
        {"columns", names},
        {"config_hash", ds.config_hash},
        {"solver", {{"target_element_length", ds.target_element_length},
                    {"sweep_step", ds.sweep_step}}},
    };
    std::ofstream meta_out(sidecar_path(csv_path), std::ios::binary);
    if (!meta_out) throw IoError("cannot write '" + sidecar_path(csv_path) + "'");
    meta_out << meta.dump(2) << "\n";
}

inline Dataset read_dataset(const std::string& csv_path) {
    const auto rows = detail::read_csv(csv_path);
    const int d = static_cast<int>(rows.front().size()) - 1;
    if (d < 1) throw ValidationError("dataset CSV '" + csv_path + "' needs input columns and q");
    auto expected = default_input_names(d);
    expected.push_back("q");
    detail::require_header(rows.front(), expected, csv_path);

    Dataset ds;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (static_cast<int>(rows[r].size()) != d + 1)
            throw ValidationError("dataset CSV '" + csv_path + "': row " + std::to_string(r + 1) +
                                  " has wrong field count");
        std::vector<double> p(d);
        for (int k = 0; k < d; ++k) p[k] = parse_double(rows[r][k]);
        ds.inputs.push_back(std::move(p));
        ds.outputs.push_back(parse_double(rows[r].back()));
    }

    std::ifstream meta_in(sidecar_path(csv_path));
    if (meta_in) {
        nlohmann::json meta;
        try {
            meta_in >> meta;
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("sidecar '" + sidecar_path(csv_path) + "' is not valid JSON: " +
                                  e.what());
        }
        if (meta.contains("bounds")) ds.distribution = bounds_from_json(meta["bounds"]);
        if (meta.contains("seed")) ds.seed = meta["seed"].get<std::uint64_t>();
        if (meta.contains("generator")) ds.generator = meta["generator"].get<std::string>();
        if (meta.contains("config_hash")) ds.config_hash = meta["config_hash"].get<std::string>();
        if (meta.contains("solver")) {
            const auto& s = meta["solver"];
            if (s.contains("target_element_length"))
                ds.target_element_length = s["target_element_length"].get<double>();
            if (s.contains("sweep_step")) ds.sweep_step = s["sweep_step"].get<double>();
        }
    }
    ds.validate();
    return ds;
}

} // namespace surrobridge
