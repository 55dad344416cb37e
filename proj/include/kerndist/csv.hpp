#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kerndist/estimators.hpp"
#include "kerndist/matrix.hpp"

namespace kerndist {

namespace detail {

inline std::optional<double> parse_cell(std::string_view cell) {
    // trim ascii whitespace
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t'))
        cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' ||
                             cell.back() == '\r'))
        cell.remove_suffix(1);
    if (cell.empty()) return std::nullopt;
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return value;
}

inline std::vector<std::string_view> split_cells(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace detail

// Rows are observations, columns coordinates. A non-numeric first line is
// treated as a header and skipped.
inline Matrix load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_csv: cannot open " + path.string());

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t expected_cols = 0;
    bool first_content_line = true;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
        if (view.empty()) continue;

        const auto cells = detail::split_cells(view);
        std::vector<double> row;
        row.reserve(cells.size());
        bool all_numeric = true;
        for (const auto cell : cells) {
            const auto v = detail::parse_cell(cell);
            if (!v.has_value()) {
                all_numeric = false;
                break;
            }
            row.push_back(*v);
        }
        if (!all_numeric) {
            if (first_content_line) {  // header
                first_content_line = false;
                continue;
            }
            throw std::invalid_argument("load_csv: non-numeric cell at line " +
                                        std::to_string(line_no) + " of " + path.string());
        }
        if (rows.empty())
            expected_cols = row.size();
        else if (row.size() != expected_cols)
            throw std::invalid_argument(
                "load_csv: ragged row at line " + std::to_string(line_no) + " of " +
                path.string() + " (got " + std::to_string(row.size()) + " columns, expected " +
                std::to_string(expected_cols) + ")");
        first_content_line = false;
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw std::invalid_argument("load_csv: no data rows in " + path.string());

    Matrix out(rows.size(), expected_cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < expected_cols; ++j) out(i, j) = rows[i][j];
    return out;
}

// Columns [0, split) become x, the rest y.
inline PairedSample load_csv_paired(const std::filesystem::path& path, std::size_t split) {
    const Matrix all = load_csv(path);
    if (split == 0 || split >= all.cols())
        throw std::invalid_argument("load_csv: split must fall strictly inside the columns");
    return {all.slice_cols(0, split), all.slice_cols(split, all.cols())};
}

// 17 significant digits: doubles round-trip exactly through the text form.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void save_csv(const Matrix& x, std::ostream& out) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            if (j) out << ',';
            out << format_double(x(i, j));
        }
        out << '\n';
    }
}

inline void save_csv(const Matrix& x, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("save_csv: cannot open " + path.string());
    save_csv(x, out);
}

}  // namespace kerndist
