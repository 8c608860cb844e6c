#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace spdelab::csv {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

/// CSV with a '#'-prefixed metadata block, then a header row, then data rows.
/// Comma separators, '.' decimal point.
class Writer {
public:
    explicit Writer(const std::string& path) : out_(path) {
        if (!out_) throw std::runtime_error("csv::Writer: cannot open " + path);
    }

    void metadata(const std::string& key, const std::string& value) {
        out_ << "# " << key << ": " << value << '\n';
    }

    void header(const std::vector<std::string>& columns) {
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << columns[i] << (i + 1 < columns.size() ? "," : "");
        out_ << '\n';
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << cells[i] << (i + 1 < cells.size() ? "," : "");
        out_ << '\n';
    }

    bool good() const { return static_cast<bool>(out_); }

private:
    std::ofstream out_;
};

}  // namespace spdelab::csv
