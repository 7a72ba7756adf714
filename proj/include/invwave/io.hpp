#pragma once

// CSV and JSON readers/writers.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "grid.hpp"

namespace invwave::io {

using Json = nlohmann::ordered_json;

/// Shortest round-trip formatting, 17 significant digits.
inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Column-major table: one header per column, all columns equally long.
inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<const Vec*>& cols) {
    if (header.size() != cols.size()) throw InternalError("write_csv: header/column count mismatch");
    const std::size_t rows = cols.empty() ? 0 : cols.front()->size();
    for (const Vec* c : cols) {
        if (c->size() != rows) throw InternalError("write_csv: ragged columns");
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw Error("cannot open " + path.string() + " for writing");
    for (std::size_t j = 0; j < header.size(); ++j) f << (j ? "," : "") << header[j];
    f << '\n';
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) f << (j ? "," : "") << fmt((*cols[j])[i]);
        f << '\n';
    }
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<Vec> cols;

    const Vec& col(const std::string& name) const {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (header[j] == name) return cols[j];
        }
        throw ParameterError("csv: missing column '" + name + "'");
    }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ParameterError("cannot read " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(f, line)) throw ParameterError(path.string() + ": empty file");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    t.cols.resize(t.header.size());
    int row = 1;
    while (std::getline(f, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t j = 0;
        while (std::getline(ss, cell, ',')) {
            if (j >= t.cols.size()) throw ParameterError(path.string() + ": too many fields on row " + std::to_string(row));
            try {
                t.cols[j++].push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParameterError(path.string() + ": bad number '" + cell + "' on row " + std::to_string(row));
            }
        }
        if (j != t.cols.size()) throw ParameterError(path.string() + ": short row " + std::to_string(row));
    }
    return t;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw Error("cannot open " + path.string() + " for writing");
    f << j.dump(2) << '\n';
}

inline void write_text(const std::filesystem::path& path, const std::string& s) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw Error("cannot open " + path.string() + " for writing");
    f << s;
}

/// JSON numbers cannot carry NaN or infinity; those become null.
inline Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json array(const Vec& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

}  // namespace invwave::io
