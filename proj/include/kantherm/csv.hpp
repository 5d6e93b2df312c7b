// Minimal CSV reading/writing for the tabular artifacts (trajectories,
// datasets, reports). No quoting: the formats used here are purely numeric
// plus simple identifiers.
#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "kantherm/errors.hpp"

namespace kantherm {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw io_error("csv: no column named '" + name + "'");
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    CsvTable t;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (lineno == 1) {
            t.header = std::move(fields);
        } else {
            if (fields.size() != t.header.size())
                throw parse_error("'" + path + "': expected " + std::to_string(t.header.size()) +
                                      " fields, got " + std::to_string(fields.size()),
                                  lineno);
            t.rows.push_back(std::move(fields));
        }
    }
    return t;
}

/// Row-by-row CSV writer. Numeric fields are written with enough digits to
/// round-trip a double exactly.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw io_error("cannot open '" + path + "' for writing");
        out_ << std::setprecision(17);
    }

    void header(const std::vector<std::string>& names) { write_strings(names); }

    template <typename... Ts>
    void row(const Ts&... fields) {
        bool first = true;
        ((write_field(fields, first), first = false), ...);
        out_ << '\n';
    }

    void row_strings(const std::vector<std::string>& fields) { write_strings(fields); }

    void flush() { out_.flush(); }

private:
    void write_strings(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }

    template <typename T>
    void write_field(const T& v, bool first) {
        if (!first) out_ << ',';
        out_ << v;
    }

    std::ofstream out_;
};

inline double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw parse_error("cannot parse '" + s + "' as a number for " + what);
    }
}

inline long parse_long(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw parse_error("cannot parse '" + s + "' as an integer for " + what);
    }
}

} // namespace kantherm
