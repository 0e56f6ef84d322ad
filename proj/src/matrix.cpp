#include "idwattn/matrix.hpp"

#include "idwattn/error.hpp"

#include <cmath>
#include <string>

namespace idw {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::of(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
    std::size_t r = 0;
    for (const auto& row : rows) {
        if (row.size() != m.cols_)
            throw ShapeError("Matrix::of: ragged initializer rows");
        std::size_t c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Matrix::require_finite(std::string_view what) const {
    if (!all_finite())
        throw NumericError("non-finite value in " + std::string(what));
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

std::size_t Matrix::row_argmax(std::size_t r) const {
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols_; ++c)
        if ((*this)(r, c) > (*this)(r, best)) best = c;
    return best;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    Matrix out(a.rows(), b.cols());
    // i,k,j loop order: per output entry the summation still runs over
    // ascending k, which the determinism contract pins down.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = arow[k];
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix pairwise_sq_dist(const Matrix& q, const Matrix& k) {
    if (q.cols() != k.cols())
        throw ShapeError("pairwise_sq_dist: feature dims differ (" + std::to_string(q.cols()) +
                         " vs " + std::to_string(k.cols()) + ")");
    Matrix out(q.rows(), k.rows());
    for (std::size_t b = 0; b < q.rows(); ++b) {
        const double* qrow = q.row(b);
        for (std::size_t i = 0; i < k.rows(); ++i) {
            const double* krow = k.row(i);
            double acc = 0.0;
            for (std::size_t j = 0; j < q.cols(); ++j) {
                const double d = qrow[j] - krow[j];
                acc += d * d;
            }
            out(b, i) = acc;
        }
    }
    return out;
}

Matrix col_mean(const Matrix& m) {
    if (m.rows() == 0) throw ValueError("col_mean: empty matrix");
    Matrix mean(1, m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) mean(0, c) += m(r, c);
    for (std::size_t c = 0; c < m.cols(); ++c) mean(0, c) /= double(m.rows());
    return mean;
}

Matrix col_std(const Matrix& m) {
    const Matrix mean = col_mean(m);
    Matrix var(1, m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const double d = m(r, c) - mean(0, c);
            var(0, c) += d * d;
        }
    Matrix sd(1, m.cols());
    for (std::size_t c = 0; c < m.cols(); ++c) sd(0, c) = std::sqrt(var(0, c) / double(m.rows()));
    return sd;
}

} // namespace idw
