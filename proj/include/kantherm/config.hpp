// Line-oriented "key = value" configuration files with [section] headers.
// Sections may repeat (a scenario roster is a list of [scenario] sections).
// '#' starts a comment. Keys and values are trimmed.
#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "kantherm/errors.hpp"

namespace kantherm {

struct ConfigSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    [[nodiscard]] bool has(const std::string& key) const {
        for (const auto& [k, v] : entries)
            if (k == key) return true;
        return false;
    }

    [[nodiscard]] std::string get(const std::string& key) const {
        for (const auto& [k, v] : entries)
            if (k == key) return v;
        throw config_error("missing key '" + key + "' in section [" + name + "]");
    }

    [[nodiscard]] std::string get_or(const std::string& key, const std::string& fallback) const {
        return has(key) ? get(key) : fallback;
    }

    [[nodiscard]] double get_double(const std::string& key) const {
        return to_double(get(key), key);
    }

    [[nodiscard]] double get_double_or(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    [[nodiscard]] long get_long(const std::string& key) const {
        const std::string v = get(key);
        try {
            std::size_t pos = 0;
            // stod first so "1e5" style counts are accepted.
            double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return static_cast<long>(d);
        } catch (const std::exception&) {
            throw config_error("key '" + key + "': cannot parse '" + v + "' as an integer");
        }
    }

    [[nodiscard]] long get_long_or(const std::string& key, long fallback) const {
        return has(key) ? get_long(key) : fallback;
    }

    void set(const std::string& key, const std::string& value) {
        for (auto& [k, v] : entries) {
            if (k == key) {
                v = value;
                return;
            }
        }
        entries.emplace_back(key, value);
    }

    static double to_double(const std::string& v, const std::string& key) {
        try {
            std::size_t pos = 0;
            double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw config_error("key '" + key + "': cannot parse '" + v + "' as a number");
        }
    }
};

struct Config {
    std::vector<ConfigSection> sections;

    /// First section with the given name; throws if absent.
    [[nodiscard]] const ConfigSection& section(const std::string& name) const {
        for (const auto& s : sections)
            if (s.name == name) return s;
        throw config_error("missing section [" + name + "]");
    }

    [[nodiscard]] bool has_section(const std::string& name) const {
        for (const auto& s : sections)
            if (s.name == name) return true;
        return false;
    }

    [[nodiscard]] std::vector<const ConfigSection*> all(const std::string& name) const {
        std::vector<const ConfigSection*> out;
        for (const auto& s : sections)
            if (s.name == name) out.push_back(&s);
        return out;
    }
};

namespace detail {
inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}
} // namespace detail

inline Config parse_config(std::istream& in, const std::string& origin = "<stream>") {
    Config cfg;
    // Keys before any [section] land in an unnamed section.
    ConfigSection current;
    bool current_open = false;
    std::string line;
    long lineno = 0;
    auto flush = [&] {
        if (current_open || !current.entries.empty()) cfg.sections.push_back(std::move(current));
        current = ConfigSection{};
    };
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw parse_error(origin + ": unterminated section header", lineno);
            flush();
            current.name = detail::trim(line.substr(1, line.size() - 2));
            current_open = true;
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw parse_error(origin + ": expected 'key = value'", lineno);
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw parse_error(origin + ": empty key", lineno);
        current.entries.emplace_back(std::move(key), std::move(value));
    }
    flush();
    return cfg;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

inline void write_config(const Config& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    for (const auto& s : cfg.sections) {
        if (!s.name.empty()) out << '[' << s.name << "]\n";
        for (const auto& [k, v] : s.entries) out << k << " = " << v << '\n';
        out << '\n';
    }
}

/// Comma-separated list of numbers ("1, 2.5, 3e-4").
inline std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = detail::trim(item);
        if (item.empty()) continue;
        out.push_back(ConfigSection::to_double(item, key));
    }
    return out;
}

} // namespace kantherm
