#ifndef NETMIG_CSV_HPP
#define NETMIG_CSV_HPP

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "netmig/errors.hpp"

namespace netmig::csv {

/// Split one CSV line. Handles double-quoted fields and trailing CR.
inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c == '\r' && i + 1 == line.size()) {
            // trailing CR from CRLF files
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers; // 1-based source line per row
};

inline Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    Table t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto fields = split_line(line);
        if (line_no == 1 || t.header.empty()) {
            t.header = std::move(fields);
        } else {
            if (fields.size() != t.header.size()) {
                throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                                 std::to_string(t.header.size()) + " fields, got " +
                                 std::to_string(fields.size()));
            }
            t.rows.push_back(std::move(fields));
            t.line_numbers.push_back(line_no);
        }
    }
    if (t.header.empty()) throw ParseError(path + ": empty file");
    return t;
}

inline double parse_double(const std::string& s, const std::string& context) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError(context + ": not a number: '" + s + "'");
    }
    return value;
}

inline long parse_long(const std::string& s, const std::string& context) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    long value = 0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError(context + ": not an integer: '" + s + "'");
    }
    return value;
}

} // namespace netmig::csv

#endif // NETMIG_CSV_HPP
