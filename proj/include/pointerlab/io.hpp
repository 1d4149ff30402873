#pragma once

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "experiments.hpp"

namespace pointerlab {

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string table_csv(const Table& t) {
    std::string out;
    for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? "," : "") + t.columns[c];
    out += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_number(row[c]);
        out += "\n";
    }
    return out;
}

/// {"columns": [...], "rows": [[...], ...]}; non-finite entries become null.
inline json table_json(const Table& t) {
    json rows = json::array();
    for (const auto& row : t.rows) {
        json r = json::array();
        for (double v : row) r.push_back(std::isfinite(v) ? json(v) : json(nullptr));
        rows.push_back(std::move(r));
    }
    return {{"name", t.name}, {"columns", t.columns}, {"rows", std::move(rows)}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

inline json criteria_json(const std::vector<CriterionResult>& criteria) {
    json out = json::array();
    for (const auto& c : criteria)
        out.push_back({{"id", c.id}, {"description", c.description}, {"passed", c.passed}, {"detail", c.detail}});
    return out;
}

inline json summary_json(const ExperimentReport& r) {
    json s = r.summary;
    s["experiment"] = r.experiment;
    s["passed"] = r.passed();
    s["criteria"] = criteria_json(r.criteria);
    return s;
}

/// Writes tables, summary.json and JSON-lines logs; returns the file names.
inline std::vector<std::string> write_report(const ExperimentReport& r, const std::filesystem::path& dir, const std::string& format) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> files;
    for (const auto& t : r.tables) {
        const std::string name = t.name + (format == "json" ? ".json" : ".csv");
        write_text(dir / name, format == "json" ? table_json(t).dump(1) + "\n" : table_csv(t));
        files.push_back(name);
    }
    for (const auto& [name, lines] : r.logs) {
        std::string text;
        for (const auto& l : lines) text += l.dump() + "\n";
        write_text(dir / (name + ".jsonl"), text);
        files.push_back(name + ".jsonl");
    }
    write_text(dir / "summary.json", summary_json(r).dump(2) + "\n");
    files.push_back("summary.json");
    return files;
}

}  // namespace pointerlab
