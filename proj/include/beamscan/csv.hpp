#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace beamscan {

// RFC 4180 quoting: fields containing commas, quotes, or newlines are wrapped
// in double quotes with embedded quotes doubled.
inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

// Numeric cell text: 12 significant digits round-trips every value the
// experiment runner produces while keeping files human-readable.
inline std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

class csv_writer {
  public:
    explicit csv_writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open output file: " + path);
        path_ = path;
    }

    void header(const std::vector<std::string>& names) {
        if (n_columns_ != 0) throw std::logic_error("csv header already written");
        if (names.empty()) throw std::invalid_argument("csv header must not be empty");
        n_columns_ = names.size();
        write_row(names);
    }

    void row(const std::vector<std::string>& fields) {
        if (n_columns_ == 0) throw std::logic_error("csv header not written");
        if (fields.size() != n_columns_)
            throw std::invalid_argument("csv row has " + std::to_string(fields.size()) +
                                        " fields, header has " + std::to_string(n_columns_));
        write_row(fields);
    }

    void flush() {
        out_.flush();
        if (!out_) throw std::runtime_error("write failed: " + path_);
    }

    const std::string& path() const { return path_; }

  private:
    void write_row(const std::vector<std::string>& fields) {
        std::string line;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) line += ',';
            line += csv_escape(fields[i]);
        }
        line += '\n';
        out_ << line;
        if (!out_) throw std::runtime_error("write failed: " + path_);
    }

    std::ofstream out_;
    std::string path_;
    std::size_t n_columns_ = 0;
};

// Minimal reader used by tests to compare reruns; understands the quoting
// rules csv_writer emits.
inline std::vector<std::vector<std::string>> csv_parse(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            any = true;
        } else if (c == '"' && field.empty()) {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(field);
            field.clear();
            any = true;
        } else if (c == '\n') {
            if (any || !field.empty() || !row.empty()) {
                row.push_back(field);
                rows.push_back(row);
            }
            field.clear();
            row.clear();
            any = false;
        } else if (c == '\r') {
            // swallowed; writer emits \n only
        } else {
            field += c;
            any = true;
        }
    }
    if (any || !field.empty() || !row.empty()) {
        row.push_back(field);
        rows.push_back(row);
    }
    return rows;
}

} // namespace beamscan
