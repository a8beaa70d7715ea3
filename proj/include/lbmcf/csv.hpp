#pragma once

#include <cstdio>
#include <string>
#include <variant>
#include <vector>

namespace lbmcf {

// Numbers are written with %.17g so a CSV round-trips to the same doubles.
class CsvWriter {
public:
    using Cell = std::variant<double, long long, std::string>;

    explicit CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out_ += ',';
            out_ += header[i];
        }
        out_ += '\n';
    }

    void row(const std::vector<double>& values) {
        std::vector<Cell> cells(values.begin(), values.end());
        row_cells(cells);
    }

    void row_cells(const std::vector<Cell>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ += ',';
            out_ += format(cells[i]);
        }
        out_ += '\n';
    }

    const std::string& str() const { return out_; }
    std::size_t columns() const { return columns_; }

    static std::string format(const Cell& c) {
        if (const auto* s = std::get_if<std::string>(&c)) return *s;
        if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(c));
        return buf;
    }

private:
    std::size_t columns_;
    std::string out_;
};

}  // namespace lbmcf
