#pragma once

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace pointerlab {

/// Sectioned `key = value` text. `#` and `;` start comments; values may
/// hold comma-separated lists.
struct ConfigEntry {
    std::string text;
    /// "file:line" or "--flag" for command-line overrides.
    std::string origin;
};

using ConfigSections = std::map<std::string, std::map<std::string, ConfigEntry>>;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Shortest %g text that reads back to the same double.
inline std::string format_real(double v) {
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

}  // namespace detail

inline ConfigSections parse_config(std::istream& in, const std::string& source) {
    ConfigSections out;
    std::string line, section;
    for (std::size_t number = 1; std::getline(in, line); ++number) {
        const std::string where = source + ":" + std::to_string(number);
        if (const auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(where + ": empty section name");
            out[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        if (section.empty()) throw ConfigError(where + ": key outside of a section");
        const std::string key = detail::trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(where + ": missing key");
        auto& slot = out[section];
        if (slot.count(key)) throw ConfigError(where + ": duplicate key " + section + "." + key);
        slot[key] = {detail::trim(line.substr(eq + 1)), where};
    }
    return out;
}

inline ConfigSections load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    return parse_config(in, path);
}

enum class KeyType { real, integer, text, real_list, choice };

struct KeySpec {
    std::string section;
    std::string key;
    KeyType type;
    std::string fallback;
    double min = -std::numeric_limits<double>::infinity();
    double max = std::numeric_limits<double>::infinity();
    bool min_open = false;
    bool max_open = false;
    std::vector<std::string> choices{};
};

namespace detail {

constexpr double inf = std::numeric_limits<double>::infinity();

inline KeySpec real_key(std::string s, std::string k, std::string d, double lo = -inf, double hi = inf, bool lo_open = false,
                        bool hi_open = false) {
    return {std::move(s), std::move(k), KeyType::real, std::move(d), lo, hi, lo_open, hi_open};
}
inline KeySpec list_key(std::string s, std::string k, std::string d, double lo = -inf, double hi = inf, bool lo_open = false,
                        bool hi_open = false) {
    return {std::move(s), std::move(k), KeyType::real_list, std::move(d), lo, hi, lo_open, hi_open};
}
inline KeySpec int_key(std::string s, std::string k, std::string d, double lo = 0.0, double hi = 1.8e19) {
    return {std::move(s), std::move(k), KeyType::integer, std::move(d), lo, hi};
}
inline KeySpec choice_key(std::string s, std::string k, std::string d, std::vector<std::string> options) {
    return {std::move(s), std::move(k), KeyType::choice, std::move(d), -inf, inf, false, false, std::move(options)};
}

}  // namespace detail

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"dephasing",  "soliton-formation", "tail-fit",   "width-sweep",   "potential-dynamics",
                                                "basin-map",  "weights-n2",        "weights-nN", "oracle-compare"};
    return names;
}

/// Every accepted key with its default and admissible range.
inline const std::vector<KeySpec>& config_schema() {
    using namespace detail;
    constexpr double pi = 3.14159265358979323846;
    static const std::vector<KeySpec> schema{
        choice_key("run", "experiment", "dephasing", experiment_names()),
        int_key("run", "seed", "1"),
        int_key("run", "threads", "1", 1, 1024),
        {"run", "out", KeyType::text, "pointerlab-out"},
        choice_key("run", "format", "csv", {"csv", "json"}),

        real_key("soliton", "tol", "1e-8", 0, 1, true),
        real_key("soliton", "t_max", "600", 0, inf, true),
        real_key("soliton", "resolution", "16", 2, inf),
        real_key("soliton", "dt_cap", "0.01", 0, inf, true),

        real_key("dephasing", "gamma", "1", 0, inf, true),
        real_key("dephasing", "theta0", "1", 0, pi),
        real_key("dephasing", "phi0", "0.3"),
        real_key("dephasing", "flow_theta0", "0.78539816339744828", 0, pi),
        real_key("dephasing", "flow_time", "10", 0, inf),
        int_key("dephasing", "n_trajectories", "10000", 1),

        real_key("soliton-formation", "kappa", "0.01", 0, inf, true),
        real_key("soliton-formation", "c1sq", "0.7", 0, 1, true, true),
        real_key("soliton-formation", "separation_widths", "10", 0, inf, true),
        real_key("soliton-formation", "momentum", "5"),
        real_key("soliton-formation", "t_max", "50", 0, inf, true),
        real_key("soliton-formation", "tol", "1e-6", 0, inf, true),
        choice_key("soliton-formation", "packet", "soliton", {"soliton", "gaussian"}),

        list_key("tail-fit", "kappas", "0.001, 0.01, 0.1", 0, inf, true),
        real_key("tail-fit", "suppression_kappa", "0.001", 0, inf, true),
        real_key("tail-fit", "superposition_separation", "10", 0, inf, true),
        real_key("tail-fit", "q_range", "2", 0, inf, true),

        list_key("width-sweep", "kappas", "0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1", 0, inf, true),

        real_key("potential-dynamics", "kappa", "0.001", 0, inf, true),
        real_key("potential-dynamics", "a", "1", 0, inf, true),
        real_key("potential-dynamics", "b", "2"),
        real_key("potential-dynamics", "x0", "1.6"),
        real_key("potential-dynamics", "sample_interval", "0.5", 0, inf, true),

        int_key("basin-map", "resolution", "100", 2, 2000),
        list_key("basin-map", "saturated_positions", "0, 20, 40"),
        list_key("basin-map", "unsaturated_positions", "1.4, 1.3, 0.8"),
        real_key("basin-map", "t_max", "1e6", 0, inf, true),

        list_key("weights-n2", "c1sq", "0.1, 0.3, 0.45", 0, 1, true, true),
        int_key("weights-n2", "n_trajectories", "10000", 1),
        real_key("weights-n2", "separation", "20", 0, inf, true),

        int_key("weights-nN", "states", "100", 1),
        int_key("weights-nN", "n_trajectories", "10000", 1),
        int_key("weights-nN", "n_min", "3", 2, 64),
        int_key("weights-nN", "n_max", "10", 2, 64),
        int_key("weights-nN", "calibration_trajectories", "100", 1),
        real_key("weights-nN", "separation", "20", 0, inf, true),
        real_key("weights-nN", "entropy_bound", "4e-3", 0, inf, true),

        int_key("oracle-compare", "n_points", "128", 4, 256),
        real_key("oracle-compare", "length", "16", 0, inf, true),
        real_key("oracle-compare", "kappa", "0.1", 0, inf, true),
        real_key("oracle-compare", "dt", "0.005", 0, inf, true),
        int_key("oracle-compare", "n_trajectories", "500", 2),
        list_key("oracle-compare", "times", "1, 3", 0, inf),
        real_key("oracle-compare", "separation", "3", 0, inf),
        real_key("oracle-compare", "packet_width", "0.5", 0, inf, true),
        real_key("oracle-compare", "c1sq", "0.6", 0, 1),
        int_key("oracle-compare", "bootstrap", "50", 2),
    };
    return schema;
}

/// Validated configuration: every schema key present, typed and in range.
class ExperimentConfig {
public:
    explicit ExperimentConfig(const ConfigSections& raw = {}) {
        const auto& schema = config_schema();
        for (const auto& [section, keys] : raw)
            for (const auto& [key, entry] : keys) {
                bool known = false;
                for (const auto& spec : schema) known = known || (spec.section == section && spec.key == key);
                if (!known) throw ConfigError(entry.origin + ": unknown key " + section + "." + key);
            }
        for (const auto& [section, keys] : raw) {
            bool known = false;
            for (const auto& spec : schema) known = known || spec.section == section;
            if (!known) throw ConfigError((keys.empty() ? std::string() : keys.begin()->second.origin + ": ") + "unknown section [" + section + "]");
        }
        for (const auto& spec : schema) {
            ConfigEntry entry{spec.fallback, "default"};
            if (auto s = raw.find(spec.section); s != raw.end())
                if (auto k = s->second.find(spec.key); k != s->second.end()) entry = k->second;
            values_[spec.section][spec.key] = canonical(spec, entry);
        }
    }

    double real(const std::string& section, const std::string& key) const { return std::strtod(get(section, key).c_str(), nullptr); }

    std::uint64_t integer(const std::string& section, const std::string& key) const {
        return std::strtoull(get(section, key).c_str(), nullptr, 10);
    }

    std::vector<double> reals(const std::string& section, const std::string& key) const {
        std::vector<double> out;
        std::stringstream ss(get(section, key));
        for (std::string item; std::getline(ss, item, ',');) out.push_back(std::strtod(item.c_str(), nullptr));
        return out;
    }

    const std::string& text(const std::string& section, const std::string& key) const { return get(section, key); }

    /// Normalized `[section]` / `key = value` listing in schema order.
    std::string canonical_text() const {
        std::string out, current;
        for (const auto& spec : config_schema()) {
            if (spec.section != current) {
                out += (current.empty() ? "[" : "\n[") + spec.section + "]\n";
                current = spec.section;
            }
            out += spec.key + " = " + values_.at(spec.section).at(spec.key) + "\n";
        }
        return out;
    }

    /// 64-bit FNV-1a of the canonical text without run.threads and run.out,
    /// which never change results, as 16 hex digits.
    std::string hash() const {
        std::string text;
        std::stringstream ss(canonical_text());
        for (std::string line; std::getline(ss, line);)
            if (line.rfind("threads = ", 0) != 0 && line.rfind("out = ", 0) != 0) text += line + "\n";
        std::uint64_t h = 14695981039346656037ull;
        for (unsigned char c : text) {
            h ^= c;
            h *= 1099511628211ull;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    const std::map<std::string, std::map<std::string, std::string>>& values() const noexcept { return values_; }

private:
    const std::string& get(const std::string& section, const std::string& key) const {
        const auto s = values_.find(section);
        if (s == values_.end() || !s->second.count(key)) throw ConfigError("no config key " + section + "." + key);
        return s->second.at(key);
    }

    static std::string canonical(const KeySpec& spec, const ConfigEntry& entry) {
        const std::string field = spec.section + "." + spec.key;
        auto fail = [&](const std::string& why) -> ConfigError { return ConfigError(entry.origin + ": " + field + " " + why); };
        auto check_range = [&](double v) {
            const bool low = spec.min_open ? v <= spec.min : v < spec.min;
            const bool high = spec.max_open ? v >= spec.max : v > spec.max;
            if (low || high) {
                std::string range = std::string(spec.min_open ? "(" : "[") + detail::format_real(spec.min) + ", " +
                                    detail::format_real(spec.max) + (spec.max_open ? ")" : "]");
                throw fail("= " + detail::trim(entry.text) + " is outside " + range);
            }
        };
        auto parse_real = [&](const std::string& text) {
            const std::string t = detail::trim(text);
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(t.c_str(), &end);
            if (t.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v)) throw fail("expects a finite number, got '" + t + "'");
            check_range(v);
            return v;
        };
        switch (spec.type) {
            case KeyType::real:
                return detail::format_real(parse_real(entry.text));
            case KeyType::integer: {
                const std::string t = detail::trim(entry.text);
                char* end = nullptr;
                errno = 0;
                if (t.empty() || t.front() == '-') throw fail("expects a non-negative integer, got '" + t + "'");
                const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
                if (*end != '\0' || errno == ERANGE) throw fail("expects a non-negative integer, got '" + t + "'");
                check_range(static_cast<double>(v));
                return std::to_string(v);
            }
            case KeyType::real_list: {
                std::string out;
                std::stringstream ss(entry.text);
                for (std::string item; std::getline(ss, item, ',');) out += (out.empty() ? "" : ", ") + detail::format_real(parse_real(item));
                if (out.empty()) throw fail("expects a comma-separated list of numbers");
                return out;
            }
            case KeyType::choice: {
                const std::string t = detail::trim(entry.text);
                for (const auto& c : spec.choices)
                    if (c == t) return t;
                std::string options;
                for (const auto& c : spec.choices) options += (options.empty() ? "" : ", ") + c;
                throw fail("must be one of {" + options + "}, got '" + t + "'");
            }
            case KeyType::text: {
                const std::string t = detail::trim(entry.text);
                if (t.empty()) throw fail("must not be empty");
                return t;
            }
        }
        return entry.text;
    }

    std::map<std::string, std::map<std::string, std::string>> values_;
};

}  // namespace pointerlab
