#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace kerndist {

// Dense row-major matrix. When it carries a sample, rows are observations
// and columns are coordinates.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
        std::size_t i = 0;
        for (const auto& r : rows) {
            if (r.size() != m.cols_)
                throw std::invalid_argument("from_rows: ragged initializer");
            std::size_t j = 0;
            for (double v : r) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    static Matrix column(std::initializer_list<double> values) {
        Matrix m(values.size(), 1);
        std::size_t i = 0;
        for (double v : values) m(i++, 0) = v;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool all_finite() const noexcept {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    // Stack two samples vertically (pooling); column counts must agree.
    static Matrix vstack(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.cols_)
            throw std::invalid_argument("vstack: column counts differ");
        Matrix out(a.rows_ + b.rows_, a.cols_);
        std::copy(a.data_.begin(), a.data_.end(), out.data_.begin());
        std::copy(b.data_.begin(), b.data_.end(), out.data_.begin() + a.data_.size());
        return out;
    }

    // Columns [from, to) as a new matrix.
    Matrix slice_cols(std::size_t from, std::size_t to) const {
        if (from > to || to > cols_)
            throw std::invalid_argument("slice_cols: bad column range");
        Matrix out(rows_, to - from);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = from; j < to; ++j) out(i, j - from) = (*this)(i, j);
        return out;
    }

    bool operator==(const Matrix& o) const noexcept {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

using SampleMatrix = Matrix;

// Symmetric n x n matrix; set() writes both (i,j) and (j,i) so the stored
// representation stays exactly symmetric.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {
        if (n == 0) throw std::invalid_argument("SymMatrix: dimension must be >= 1");
    }

    std::size_t size() const noexcept { return n_; }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

    void set(std::size_t i, std::size_t j, double v) {
        data_[i * n_ + j] = v;
        data_[j * n_ + i] = v;
    }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    double trace() const noexcept {
        double t = 0;
        for (std::size_t i = 0; i < n_; ++i) t += data_[i * n_ + i];
        return t;
    }

    double frobenius_norm() const noexcept {
        double s = 0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

    double max_abs() const noexcept {
        double m = 0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    bool all_finite() const noexcept {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

}  // namespace kerndist
