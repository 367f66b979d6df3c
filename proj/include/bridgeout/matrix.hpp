#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "bridgeout/rng.hpp"

namespace bridgeout {

// Dense row-major matrix of doubles. The single numeric carrier for
// weights, activations, masks and datasets. Values are treated as
// immutable once handed out of an operation; sharing across threads is
// safe as long as nobody mutates in place.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
    static Matrix full(std::size_t rows, std::size_t cols, double value);
    static Matrix identity(std::size_t n);
    static Matrix row(std::vector<double> values);
    static Matrix column(std::vector<double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator[](std::size_t flat) { return data_[flat]; }
    double operator[](std::size_t flat) const { return data_[flat]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    double max_abs() const;
    double sum() const;
    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Throws ShapeError naming both shapes when the inner dimensions disagree.
Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T and a^T * b; the workhorses of the backward pass.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
// Adds a 1 x cols row vector to every row of a.
Matrix add_row_broadcast(const Matrix& a, const Matrix& row);
// 1 x cols vector of column sums.
Matrix column_sums(const Matrix& a);

// Elementwise |w|^e. For e < 0 the magnitude is floored at eps before
// exponentiation so the result stays finite; for e >= 0 the value is
// |w|^e exactly.
Matrix signed_power(const Matrix& w, double exponent, double eps = 1e-8);

// Elementwise sign with sgn(0) = 0.
Matrix sign_of(const Matrix& w);

// Entries are independently 1 with probability p, else 0. Requires
// 0 < p <= 1.
Matrix sample_bernoulli(std::size_t rows, std::size_t cols, double p, RngStream& rng);

Matrix sample_gaussian(std::size_t rows, std::size_t cols, RngStream& rng);

// Uniform on [lo, hi).
Matrix sample_uniform(std::size_t rows, std::size_t cols, double lo, double hi, RngStream& rng);

}  // namespace bridgeout
