// Scan data container with CSV and JSON serialization.
//
// CSV layout:
//   # nv0 dataset
//   # <meta key> = <meta value>        (zero or more, in insertion order)
//   <x name> [<x unit>],<col name> [<col unit>],...
//   <x>,<y>,...                        (shortest round-trip doubles)

#ifndef NV0_DATASET_HPP
#define NV0_DATASET_HPP

#include "nv0/kvfile.hpp"
#include "nv0/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nv0 {

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Column {
    std::string name;
    std::string unit;
    std::vector<double> values;

    bool operator==(const Column&) const = default;
};

struct Dataset {
    std::string x_name = "x";
    std::string x_unit = "1";
    std::vector<double> x;
    std::vector<Column> columns;
    std::vector<std::pair<std::string, std::string>> meta;

    bool operator==(const Dataset&) const = default;

    Column& add_column(std::string name, std::string unit, std::vector<double> values = {}) {
        columns.push_back({std::move(name), std::move(unit), std::move(values)});
        return columns.back();
    }

    const Column& column(const std::string& name) const {
        for (const auto& c : columns)
            if (c.name == name) return c;
        std::string known;
        for (const auto& c : columns) known += " " + c.name;
        throw DatasetError("dataset has no column '" + name + "'; columns:" + known);
    }

    const Column& first_column() const {
        if (columns.empty()) throw DatasetError("dataset has no y columns");
        return columns.front();
    }

    void set_meta(const std::string& key, const std::string& value) {
        for (auto& [k, v] : meta)
            if (k == key) {
                v = value;
                return;
            }
        meta.emplace_back(key, value);
    }

    std::string meta_value(const std::string& key, const std::string& fallback = "") const {
        for (const auto& [k, v] : meta)
            if (k == key) return v;
        return fallback;
    }

    void validate() const {
        auto bad_label = [](const std::string& s) {
            return s.empty() || s.find_first_of(",[]\n\r") != std::string::npos;
        };
        if (bad_label(x_name) || bad_label(x_unit)) throw DatasetError("dataset: invalid x label or unit");
        for (const auto& c : columns) {
            if (bad_label(c.name) || bad_label(c.unit))
                throw DatasetError("dataset: invalid label or unit for column '" + c.name + "'");
            if (c.values.size() != x.size())
                throw DatasetError("dataset: column '" + c.name + "' has " + std::to_string(c.values.size()) +
                                   " values, x has " + std::to_string(x.size()));
        }
        for (const auto& [k, v] : meta)
            if (k.empty() || k.find_first_of("=\n\r") != std::string::npos || v.find_first_of("\n\r") != std::string::npos)
                throw DatasetError("dataset: invalid meta entry '" + k + "'");
    }
};

// ---- CSV -------------------------------------------------------------------

inline std::string to_csv(const Dataset& d) {
    d.validate();
    std::ostringstream os;
    os << "# nv0 dataset\n";
    for (const auto& [k, v] : d.meta) os << "# " << k << " = " << v << "\n";
    os << d.x_name << " [" << d.x_unit << "]";
    for (const auto& c : d.columns) os << "," << c.name << " [" << c.unit << "]";
    os << "\n";
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        os << text::format_double(d.x[i]);
        for (const auto& c : d.columns) os << "," << text::format_double(c.values[i]);
        os << "\n";
    }
    return os.str();
}

namespace detail {
inline std::pair<std::string, std::string> split_label(const std::string& field) {
    const auto t = std::string(text::trim(field));
    const auto open = t.rfind('[');
    if (open == std::string::npos || t.back() != ']') return {t, "1"};
    return {std::string(text::trim(std::string_view(t).substr(0, open))), t.substr(open + 1, t.size() - open - 2)};
}
}  // namespace detail

inline Dataset from_csv(std::string_view content) {
    Dataset d;
    bool header_seen = false;
    int lineno = 0;
    for (const auto& raw : text::split(content, '\n')) {
        ++lineno;
        std::string_view line = raw;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (text::trim(line).empty()) continue;
        if (line.front() == '#') {
            const auto body = line.substr(1);
            const auto eq = body.find(" = ");
            if (eq != std::string_view::npos && !header_seen)
                d.meta.emplace_back(std::string(text::trim(body.substr(0, eq))), std::string(body.substr(eq + 3)));
            continue;
        }
        const auto fields = text::split(line, ',');
        if (!header_seen) {
            header_seen = true;
            std::tie(d.x_name, d.x_unit) = detail::split_label(fields[0]);
            for (std::size_t i = 1; i < fields.size(); ++i) {
                auto [n, u] = detail::split_label(fields[i]);
                d.columns.push_back({n, u, {}});
            }
            continue;
        }
        if (fields.size() != d.columns.size() + 1)
            throw DatasetError("csv line " + std::to_string(lineno) + ": expected " +
                               std::to_string(d.columns.size() + 1) + " fields");
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const auto v = text::parse_double(text::trim(fields[i]));
            if (!v) throw DatasetError("csv line " + std::to_string(lineno) + ": bad number '" + fields[i] + "'");
            if (i == 0)
                d.x.push_back(*v);
            else
                d.columns[i - 1].values.push_back(*v);
        }
    }
    if (!header_seen) throw DatasetError("csv: missing header line");
    d.validate();
    return d;
}

// ---- JSON --------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const Dataset& d) {
    d.validate();
    nlohmann::ordered_json j;
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    for (const auto& [k, v] : d.meta) meta[k] = v;
    j["meta"] = meta;
    j["x"] = {{"name", d.x_name}, {"unit", d.x_unit}, {"values", d.x}};
    j["columns"] = nlohmann::ordered_json::array();
    for (const auto& c : d.columns)
        j["columns"].push_back({{"name", c.name}, {"unit", c.unit}, {"values", c.values}});
    return j;
}

inline Dataset dataset_from_json(const nlohmann::ordered_json& j) {
    Dataset d;
    try {
        for (const auto& [k, v] : j.at("meta").items()) d.meta.emplace_back(k, v.get<std::string>());
        d.x_name = j.at("x").at("name").get<std::string>();
        d.x_unit = j.at("x").at("unit").get<std::string>();
        d.x = j.at("x").at("values").get<std::vector<double>>();
        for (const auto& c : j.at("columns"))
            d.columns.push_back({c.at("name").get<std::string>(), c.at("unit").get<std::string>(),
                                 c.at("values").get<std::vector<double>>()});
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(std::string("json dataset: ") + e.what());
    }
    d.validate();
    return d;
}

}  // namespace nv0

#endif  // NV0_DATASET_HPP
