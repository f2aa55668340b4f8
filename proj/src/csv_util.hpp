#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "sigdet/errors.hpp"

namespace sigdet::csv {

// Line-oriented reader for the small fixed-schema CSV files this project
// exchanges. No quoting: every field is numeric or a single letter.
class Reader {
  public:
    Reader(const std::string& path, const std::string& expected_header)
        : path_(path), in_(path) {
        if (!in_) throw DataError("cannot open " + path);
        std::string header;
        if (!std::getline(in_, header)) throw DataError(path + ": missing header row");
        strip_cr(header);
        if (header != expected_header)
            throw DataError(path + ": expected header '" + expected_header + "', got '" +
                            header + "'");
        columns_ = size_t(std::count(expected_header.begin(), expected_header.end(), ',')) + 1;
        line_no_ = 1;
    }

    // Returns false at EOF. Skips blank lines. Enforces the column count.
    bool next(std::vector<std::string>& fields) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            strip_cr(line);
            if (line.empty()) continue;
            split(line, fields);
            if (fields.size() != columns_)
                throw DataError(where() + ": expected " + std::to_string(columns_) +
                                " columns, got " + std::to_string(fields.size()));
            return true;
        }
        return false;
    }

    std::string where() const { return path_ + ":" + std::to_string(line_no_); }
    size_t line() const { return line_no_; }

    int64_t to_int(const std::string& field) const {
        int64_t value = 0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc() || ptr != field.data() + field.size())
            throw DataError(where() + ": not an integer: '" + field + "'");
        return value;
    }

    double to_double(const std::string& field) const {
        double value = 0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc() || ptr != field.data() + field.size())
            throw DataError(where() + ": not a number: '" + field + "'");
        return value;
    }

  private:
    static void strip_cr(std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    }
    static void split(const std::string& line, std::vector<std::string>& out) {
        out.clear();
        size_t start = 0;
        while (true) {
            size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                out.emplace_back(line.substr(start));
                return;
            }
            out.emplace_back(line.substr(start, comma - start));
            start = comma + 1;
        }
    }

    std::string path_;
    std::ifstream in_;
    size_t columns_ = 0;
    size_t line_no_ = 0;
};

class Writer {
  public:
    Writer(const std::string& path, const std::string& header) : path_(path), out_(path) {
        if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
        out_ << header << '\n';
    }

    std::ofstream& stream() { return out_; }

    void close() {
        out_.close();
        if (!out_) throw std::runtime_error("write failed: " + path_);
    }

  private:
    std::string path_;
    std::ofstream out_;
};

// Fixed 6-decimal score formatting shared by every exported matrix/report.
inline std::string format_score(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

}  // namespace sigdet::csv
