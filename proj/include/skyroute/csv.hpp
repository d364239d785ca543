#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "skyroute/errors.hpp"

namespace skyroute {

// Render a double with the shortest representation that round-trips; keeps
// CSV artifacts byte-stable across runs.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& file, std::size_t line) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError(file, line, "invalid number '" + s + "'");
    return v;
}

inline std::int64_t parse_int(const std::string& s, const std::string& file, std::size_t line) {
    std::int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError(file, line, "invalid integer '" + s + "'");
    return v;
}

// Line-oriented CSV reader. The formats in this project never quote fields,
// so a plain comma split is the whole grammar. Lines starting with '#'
// (provenance headers) are skipped.
class CsvReader {
public:
    CsvReader(const std::string& path, const std::vector<std::string>& expected_header);

    // Returns false at EOF; on success `fields` has exactly one entry per
    // header column.
    bool next(std::vector<std::string>& fields);

    std::size_t line_number() const { return line_; }
    const std::string& path() const { return path_; }

private:
    std::ifstream in_;
    std::string path_;
    std::size_t line_ = 0;
    std::size_t n_columns_ = 0;
};

inline void split_csv_line(const std::string& line, std::vector<std::string>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
}

inline CsvReader::CsvReader(const std::string& path, const std::vector<std::string>& expected_header)
    : in_(path), path_(path) {
    if (!in_) throw DataError("cannot open file: " + path);
    std::string line;
    std::vector<std::string> fields;
    while (std::getline(in_, line)) {
        ++line_;
        if (!line.empty() && line[0] == '#') continue;
        split_csv_line(line, fields);
        if (fields != expected_header) {
            std::string want;
            for (std::size_t i = 0; i < expected_header.size(); ++i)
                want += (i ? "," : "") + expected_header[i];
            throw ParseError(path_, line_, "unexpected header (want '" + want + "')");
        }
        n_columns_ = expected_header.size();
        return;
    }
    throw ParseError(path_, line_, "missing header");
}

inline bool CsvReader::next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (line.empty() || line[0] == '#') continue;
        split_csv_line(line, fields);
        if (fields.size() != n_columns_)
            throw ParseError(path_, line_,
                             "expected " + std::to_string(n_columns_) + " fields, got " +
                                 std::to_string(fields.size()));
        return true;
    }
    return false;
}

} // namespace skyroute
