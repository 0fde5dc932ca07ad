#pragma once

// Minimal strict CSV reader/writer (RFC-4180 quoting) plus locale-free
// numeric cell conversion. Errors carry 1-based row/column positions.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "tte/errors.hpp"

namespace tte {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) return j;
        throw IoError("csv: unknown column '" + name + "'");
    }

    bool has_column(const std::string& name) const {
        for (const auto& h : header)
            if (h == name) return true;
        return false;
    }
};

namespace detail {

inline std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

}  // namespace detail

inline std::string write_csv(const CsvTable& table) {
    std::string out;
    auto emit_row = [&out](const std::vector<std::string>& row) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j > 0) out += ',';
            out += detail::csv_quote(row[j]);
        }
        out += '\n';
    };
    emit_row(table.header);
    for (const auto& row : table.rows) emit_row(row);
    return out;
}

inline CsvTable parse_csv(const std::string& text) {
    if (text.empty()) throw IoError("csv: empty input");

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_open = true;  // false only right after a record break
    std::size_t line = 1;

    auto end_field = [&]() {
        row.push_back(field);
        field.clear();
    };
    auto end_record = [&]() {
        end_field();
        records.push_back(std::move(row));
        row.clear();
        field_open = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (ch == '\n') ++line;
                field += ch;
            }
            continue;
        }
        switch (ch) {
            case '"':
                if (!field.empty())
                    throw IoError("csv: stray quote at line " + std::to_string(line));
                quoted = true;
                field_open = true;
                break;
            case ',':
                end_field();
                field_open = true;
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                ++line;
                break;
            default:
                field += ch;
                field_open = true;
                break;
        }
    }
    if (quoted) throw IoError("csv: unterminated quote at end of input");
    if (field_open || !row.empty()) end_record();

    if (records.empty()) throw IoError("csv: no header row");
    CsvTable table;
    table.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header.size())
            throw IoError("csv: row " + std::to_string(r + 1) + " has " +
                          std::to_string(records[r].size()) + " fields, expected " +
                          std::to_string(table.header.size()));
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Atomic write: temp file in the same directory, then rename over the target.
inline void write_text_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp + "' for writing");
        out << content;
        if (!out) throw IoError("write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
}

// Shortest decimal digits that round-trip to the same double.
inline std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& cell, const std::string& where) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last)
        throw IoError("unparseable number '" + cell + "' at " + where);
    return value;
}

inline long parse_long(const std::string& cell, const std::string& where) {
    long value = 0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last)
        throw IoError("unparseable integer '" + cell + "' at " + where);
    return value;
}

}  // namespace tte
