#include "bridgeout/matrix.hpp"

#include <cmath>
#include <string>

#include "bridgeout/errors.hpp"

namespace bridgeout {
namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

double pow_abs(double w, double e, double eps) {
    double a = std::fabs(w);
    if (e < 0.0 && a < eps) a = eps;
    if (e == 1.0) return a;
    if (e == 0.5) return std::sqrt(a);
    if (e == -0.5) return 1.0 / std::sqrt(a);
    if (e == 2.0) return a * a;
    if (e == 0.0) return 1.0;
    return std::pow(a, e);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str(*this));
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer rows");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::full(std::size_t rows, std::size_t cols, double value) {
    Matrix m(rows, cols);
    for (auto& x : m.data_) x = value;
    return m;
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::row(std::vector<double> values) {
    const std::size_t n = values.size();
    return Matrix(1, n, std::move(values));
}

Matrix Matrix::column(std::vector<double> values) {
    const std::size_t n = values.size();
    return Matrix(n, 1, std::move(values));
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::fabs(x));
    return m;
}

double Matrix::sum() const {
    double s = 0.0;
    for (double x : data_) s += x;
    return s;
}

bool Matrix::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a) + " x " +
                         shape_str(b));
    Matrix out(a.rows(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        double* out_row = out.data() + i * m;
        const double* a_row = a.data() + i * k;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = a_row[l];
            const double* b_row = b.data() + l * m;
            for (std::size_t j = 0; j < m; ++j) out_row[j] += av * b_row[j];
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw ShapeError("matmul_nt: inner dimensions disagree, " + shape_str(a) + " x " +
                         shape_str(b) + "^T");
    Matrix out(a.rows(), b.rows());
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
    for (std::size_t i = 0; i < n; ++i) {
        const double* a_row = a.data() + i * k;
        double* out_row = out.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) {
            const double* b_row = b.data() + j * k;
            double acc = 0.0;
            for (std::size_t l = 0; l < k; ++l) acc += a_row[l] * b_row[l];
            out_row[j] = acc;
        }
    }
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw ShapeError("matmul_tn: inner dimensions disagree, " + shape_str(a) + "^T x " +
                         shape_str(b));
    Matrix out(a.cols(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t l = 0; l < n; ++l) {
        const double* a_row = a.data() + l * k;
        const double* b_row = b.data() + l * m;
        for (std::size_t i = 0; i < k; ++i) {
            const double av = a_row[i];
            if (av == 0.0) continue;
            double* out_row = out.data() + i * m;
            for (std::size_t j = 0; j < m; ++j) out_row[j] += av * b_row[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch, " + shape_str(a) + " vs " +
                         shape_str(b));
}

}  // namespace

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "sub");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}

Matrix scale(const Matrix& a, double s) {
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
    return out;
}

Matrix add_row_broadcast(const Matrix& a, const Matrix& row) {
    if (row.rows() != 1 || row.cols() != a.cols())
        throw ShapeError("add_row_broadcast: row is " + shape_str(row) + ", want 1x" +
                         std::to_string(a.cols()));
    Matrix out = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) += row(0, j);
    return out;
}

Matrix column_sums(const Matrix& a) {
    Matrix out(1, a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(0, j) += a(i, j);
    return out;
}

Matrix signed_power(const Matrix& w, double exponent, double eps) {
    if (eps <= 0.0) throw ConfigError("signed_power: eps must be positive");
    Matrix out(w.rows(), w.cols());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = pow_abs(w[i], exponent, eps);
    return out;
}

Matrix sign_of(const Matrix& w) {
    Matrix out(w.rows(), w.cols());
    for (std::size_t i = 0; i < w.size(); ++i)
        out[i] = w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0);
    return out;
}

Matrix sample_bernoulli(std::size_t rows, std::size_t cols, double p, RngStream& rng) {
    if (!(p > 0.0 && p <= 1.0))
        throw ConfigError("sample_bernoulli: p must be in (0, 1], got " + std::to_string(p));
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rng.next_double() < p ? 1.0 : 0.0;
    return out;
}

Matrix sample_gaussian(std::size_t rows, std::size_t cols, RngStream& rng) {
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rng.next_gaussian();
    return out;
}

Matrix sample_uniform(std::size_t rows, std::size_t cols, double lo, double hi, RngStream& rng) {
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = lo + (hi - lo) * rng.next_double();
    return out;
}

}  // namespace bridgeout
