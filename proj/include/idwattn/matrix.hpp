#pragma once

#include <cstddef>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace idw {

/// Dense row-major matrix of 64-bit floats. Small and deterministic on
/// purpose: every reduction runs in a fixed serial order, so repeated runs
/// are bit-identical.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    /// Build from nested braces: Matrix::of({{1,2},{3,4}}).
    static Matrix of(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool all_finite() const;
    /// Throws NumericError naming `what` if any entry is NaN/Inf.
    void require_finite(std::string_view what) const;

    Matrix transposed() const;

    /// Index of the largest entry in a row; ties go to the lowest index.
    std::size_t row_argmax(std::size_t r) const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Standard product, 64-bit accumulation, ascending-k summation per entry.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Entry (b,i) = sum_j (q(b,j) - k(i,j))^2. Computed by direct subtraction
/// and squaring, not the expanded norm identity: the expanded form cancels
/// catastrophically when q is close to k, which is exactly where the
/// inverse-distance weights are largest.
Matrix pairwise_sq_dist(const Matrix& q, const Matrix& k);

/// Column means / population standard deviations, each returned as 1 x cols.
Matrix col_mean(const Matrix& m);
Matrix col_std(const Matrix& m);

} // namespace idw
