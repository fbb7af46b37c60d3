#pragma once

// Tabular experiment results and their CSV / JSON serializations.

#include <cmath>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mesofluct/error.hpp"
#include "mesofluct/experiments/config.hpp"

namespace mesofluct::experiments {

struct Provenance {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version;
    std::string config_text;  // canonical form, enough to rerun
};

/// A named pass/fail assertion over the rows of a run.
struct Check {
    std::string name;
    bool passed;
    std::string detail;
};

struct RunResult {
    std::string experiment;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    Provenance provenance;
    std::vector<std::pair<std::string, double>> summary;
    std::vector<Check> checks;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw InvalidArgument("RunResult: no column '" + name + "'");
    }

    std::vector<double> column_values(const std::string& name) const {
        const auto c = column(name);
        std::vector<double> out;
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }

    double summary_value(const std::string& key) const {
        for (const auto& [k, v] : summary)
            if (k == key) return v;
        throw InvalidArgument("RunResult: no summary entry '" + key + "'");
    }

    const Check& check(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return c;
        throw InvalidArgument("RunResult: no check '" + name + "'");
    }

    bool passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }

    void add_row(std::vector<double> r) {
        mesofluct::detail::require(r.size() == columns.size(), "RunResult: row width differs from the header");
        rows.push_back(std::move(r));
    }
};

inline Provenance make_provenance(const ExperimentConfig& cfg) {
    return {config_hash(cfg), cfg.seed, std::string(version), canonical_text(cfg)};
}

/// Header row, then one line per row with 17 significant digits.
inline void write_csv(std::ostream& os, const RunResult& r) {
    for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << r.columns[i];
    os << "\n";
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << detail::fmt17(row[i]);
        os << "\n";
    }
}

inline nlohmann::json provenance_json(const RunResult& r) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    nlohmann::json summary = nlohmann::json::object();
    for (const auto& [k, v] : r.summary) summary[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json();
    return {{"experiment", r.experiment},
            {"config_hash", r.provenance.config_hash},
            {"seed", r.provenance.seed},
            {"version", r.provenance.version},
            {"config", r.provenance.config_text},
            {"summary", summary},
            {"checks", checks},
            {"passed", r.passed()}};
}

/// Rows as an array of {column: value} objects (non-finite values become null).
inline nlohmann::json to_json(const RunResult& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        nlohmann::json obj = nlohmann::json::object();
        for (std::size_t i = 0; i < row.size(); ++i)
            obj[r.columns[i]] = std::isfinite(row[i]) ? nlohmann::json(row[i]) : nlohmann::json();
        rows.push_back(std::move(obj));
    }
    auto out = provenance_json(r);
    out["columns"] = r.columns;
    out["rows"] = std::move(rows);
    return out;
}

enum class OutputFormat { csv, json };

inline OutputFormat parse_format(const std::string& s) {
    if (s == "csv") return OutputFormat::csv;
    if (s == "json") return OutputFormat::json;
    throw ConfigError("unknown output format '" + s + "' (expected csv or json)");
}

inline void write_result(std::ostream& os, const RunResult& r, OutputFormat fmt) {
    if (fmt == OutputFormat::csv) {
        write_csv(os, r);
    } else {
        os << to_json(r).dump(2) << "\n";
    }
}

/// Writes the table to `path` and the provenance to `path + ".meta.json"`.
inline void write_result_files(const std::string& path, const RunResult& r, OutputFormat fmt) {
    {
        std::ofstream out(path);
        if (!out) throw ConfigError("cannot open output file '" + path + "'");
        write_result(out, r, fmt);
    }
    std::ofstream meta(path + ".meta.json");
    if (!meta) throw ConfigError("cannot open output file '" + path + ".meta.json'");
    meta << provenance_json(r).dump(2) << "\n";
}

}  // namespace mesofluct::experiments
