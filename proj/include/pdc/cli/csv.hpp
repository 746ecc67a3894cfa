#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "pdc/cli/scenario.hpp"

namespace pdc::cli {

// Locale-independent shortest representation that reads back to the same double.
inline std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (v == 0.0)
        return "0";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

using Cell = std::variant<double, std::string>;

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }

    void write(std::ostream& out) const
    {
        for (std::size_t k = 0; k < header.size(); ++k)
            out << (k ? "," : "") << header[k];
        out << '\n';
        for (const auto& row : rows) {
            for (std::size_t k = 0; k < row.size(); ++k) {
                if (k)
                    out << ',';
                if (const auto* d = std::get_if<double>(&row[k]))
                    out << format_number(*d);
                else
                    out << std::get<std::string>(row[k]);
            }
            out << '\n';
        }
    }

    std::string str() const
    {
        std::ostringstream ss;
        write(ss);
        return ss.str();
    }
};

// Numeric CSV with a header row.
struct CsvData {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    // First column whose name is one of `names`.
    std::vector<double> column(std::initializer_list<const char*> names, const std::string& key) const
    {
        for (const char* name : names)
            for (std::size_t k = 0; k < header.size(); ++k)
                if (header[k] == name) {
                    std::vector<double> out;
                    for (const auto& r : rows)
                        out.push_back(r.at(k));
                    return out;
                }
        std::string want;
        for (const char* name : names)
            want += std::string(want.empty() ? "" : " or ") + name;
        throw ConfigError(key, "data file has no column named " + want);
    }
};

inline CsvData read_csv(const std::filesystem::path& path, const std::string& key)
{
    std::ifstream f(path);
    if (!f)
        throw ConfigError(key, "cannot read data file '" + path.string() + "'");
    CsvData data;
    std::string line;
    bool have_header = false;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty() || line.front() == '#')
            continue;
        const auto cells = detail::split(line, ',');
        if (!have_header) {
            data.header = cells;
            have_header = true;
            continue;
        }
        if (cells.size() != data.header.size())
            throw ConfigError(key, path.string() + ":" + std::to_string(lineno) + ": wrong number of columns");
        std::vector<double> row;
        for (const auto& c : cells) {
            const auto q = detail::parse_quantity(c);
            if (!q || !q->unit.empty())
                throw ConfigError(key, path.string() + ":" + std::to_string(lineno) + ": '" + c + "' is not a number");
            row.push_back(q->value);
        }
        data.rows.push_back(std::move(row));
    }
    if (!have_header)
        throw ConfigError(key, "data file '" + path.string() + "' is empty");
    return data;
}

} // namespace pdc::cli
