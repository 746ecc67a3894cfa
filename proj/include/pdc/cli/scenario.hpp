#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// Flat `key = value [unit]` scenario files.
//
//     # reconstructed source
//     pump_fwhm   = 2.5 nm
//     theta       = 54.7 deg
//     aspect_ratios = 1.7, 4.2, 95
//
// Values are converted to SI at lookup time; a unit from the wrong dimension
// is an error that names the key.

namespace pdc::cli {

// Configuration problem attributable to one key (or the file itself).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& msg)
        : std::runtime_error(key.empty() ? msg : "key '" + key + "': " + msg), key_(std::move(key))
    {
    }
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

enum class Dimension { dimensionless, length, angle, time, angular_frequency, dispersion };

inline const char* dimension_name(Dimension d)
{
    switch (d) {
    case Dimension::dimensionless: return "dimensionless";
    case Dimension::length: return "length";
    case Dimension::angle: return "angle";
    case Dimension::time: return "time";
    case Dimension::angular_frequency: return "angular frequency";
    case Dimension::dispersion: return "group-delay mismatch";
    }
    return "?";
}

struct UnitInfo {
    Dimension dim;
    double scale;
};

inline std::optional<UnitInfo> lookup_unit(const std::string& u)
{
    static const std::map<std::string, UnitInfo> table = {
        {"", {Dimension::dimensionless, 1.0}},
        {"%", {Dimension::dimensionless, 1e-2}},
        {"m", {Dimension::length, 1.0}},
        {"mm", {Dimension::length, 1e-3}},
        {"um", {Dimension::length, 1e-6}},
        {"nm", {Dimension::length, 1e-9}},
        {"pm", {Dimension::length, 1e-12}},
        {"rad", {Dimension::angle, 1.0}},
        {"deg", {Dimension::angle, std::numbers::pi / 180.0}},
        {"s", {Dimension::time, 1.0}},
        {"ms", {Dimension::time, 1e-3}},
        {"us", {Dimension::time, 1e-6}},
        {"ns", {Dimension::time, 1e-9}},
        {"ps", {Dimension::time, 1e-12}},
        {"fs", {Dimension::time, 1e-15}},
        {"rad/s", {Dimension::angular_frequency, 1.0}},
        {"rad/ps", {Dimension::angular_frequency, 1e12}},
        {"s/m", {Dimension::dispersion, 1.0}},
        {"ps/mm", {Dimension::dispersion, 1e-9}},
        {"fs/mm", {Dimension::dispersion, 1e-12}},
    };
    const auto it = table.find(u);
    if (it == table.end())
        return std::nullopt;
    return it->second;
}

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        out.push_back(trim(cur));
    return out;
}

struct RawQuantity {
    double value;
    std::string unit;
};

inline std::optional<RawQuantity> parse_quantity(const std::string& token)
{
    const std::string t = trim(token);
    if (t.empty())
        return std::nullopt;
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc())
        return std::nullopt;
    return RawQuantity{v, trim(std::string(res.ptr, t.data() + t.size()))};
}

} // namespace detail

struct Scenario {
    std::string command;
    std::map<std::string, std::string> values;
    std::filesystem::path base_dir = ".";       // relative data paths resolve here
    std::optional<std::size_t> grid_points;
    bool verbose = false;

    static Scenario parse(const std::string& text, const std::string& command = {})
    {
        Scenario sc;
        sc.command = command;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            line = detail::trim(line);
            if (line.empty())
                continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("", "line " + std::to_string(lineno) + ": expected 'key = value'");
            const std::string key = detail::trim(line.substr(0, eq));
            const std::string value = detail::trim(line.substr(eq + 1));
            if (key.empty())
                throw ConfigError("", "line " + std::to_string(lineno) + ": empty key");
            if (!sc.values.emplace(key, value).second)
                throw ConfigError(key, "defined twice");
        }
        return sc;
    }

    static Scenario load(const std::filesystem::path& path, const std::string& command = {})
    {
        std::ifstream f(path);
        if (!f)
            throw ConfigError("", "cannot read config file '" + path.string() + "'");
        std::stringstream ss;
        ss << f.rdbuf();
        Scenario sc = parse(ss.str(), command);
        sc.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
        return sc;
    }

    bool has(const std::string& key) const { return values.count(key) != 0; }

    const std::string& raw(const std::string& key) const
    {
        const auto it = values.find(key);
        if (it == values.end())
            throw ConfigError(key, "missing required key");
        return it->second;
    }

    std::vector<double> list(const std::string& key, Dimension dim) const
    {
        const auto tokens = detail::split(raw(key), ',');
        std::vector<detail::RawQuantity> q;
        for (const auto& tok : tokens) {
            auto parsed = detail::parse_quantity(tok);
            if (!parsed)
                throw ConfigError(key, "cannot parse '" + tok + "' as a number");
            q.push_back(*parsed);
        }
        if (q.empty())
            throw ConfigError(key, "empty value");
        // unit-less entries inherit the last unit given ("0.5, 1, 2 mm")
        std::string unit = q.back().unit;
        std::vector<double> out;
        for (auto& item : q) {
            const std::string& u = item.unit.empty() ? unit : item.unit;
            const auto info = lookup_unit(u);
            if (!info)
                throw ConfigError(key, "unknown unit '" + u + "'");
            if (info->dim != dim)
                throw ConfigError(key, std::string("unit mismatch: expected ") + dimension_name(dim) + ", got '" +
                                           (u.empty() ? "no unit" : u) + "'");
            out.push_back(item.value * info->scale);
        }
        return out;
    }

    double get(const std::string& key, Dimension dim) const
    {
        const auto v = list(key, dim);
        if (v.size() != 1)
            throw ConfigError(key, "expected a single value");
        return v.front();
    }

    double get_or(const std::string& key, Dimension dim, double fallback) const
    {
        return has(key) ? get(key, dim) : fallback;
    }

    std::size_t integer(const std::string& key) const
    {
        const double v = get(key, Dimension::dimensionless);
        if (!(v >= 0.0) || v != std::floor(v))
            throw ConfigError(key, "expected a non-negative integer");
        return static_cast<std::size_t>(v);
    }

    std::size_t integer_or(const std::string& key, std::size_t fallback) const
    {
        return has(key) ? integer(key) : fallback;
    }

    std::string text_or(const std::string& key, const std::string& fallback) const
    {
        return has(key) ? raw(key) : fallback;
    }

    bool flag_or(const std::string& key, bool fallback) const
    {
        if (!has(key))
            return fallback;
        const std::string& v = raw(key);
        if (v == "true" || v == "yes" || v == "1")
            return true;
        if (v == "false" || v == "no" || v == "0")
            return false;
        throw ConfigError(key, "expected true or false, got '" + v + "'");
    }

    std::filesystem::path path(const std::string& key) const
    {
        std::filesystem::path p = raw(key);
        return p.is_absolute() ? p : base_dir / p;
    }

    // Either `key` as an explicit list, or `key_min`, `key_max`, `key_steps`.
    std::vector<double> sweep(const std::string& key, Dimension dim) const
    {
        if (has(key))
            return list(key, dim);
        const double lo = get(key + "_min", dim);
        const double hi = get(key + "_max", dim);
        const std::size_t n = integer(key + "_steps");
        if (n < 1)
            throw ConfigError(key + "_steps", "needs at least one step");
        if (n == 1)
            return {lo};
        if (!(hi > lo))
            throw ConfigError(key + "_max", "must exceed " + key + "_min");
        std::vector<double> out(n);
        for (std::size_t k = 0; k < n; ++k)
            out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
        return out;
    }
};

} // namespace pdc::cli
