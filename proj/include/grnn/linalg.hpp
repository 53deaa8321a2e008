#pragma once

// Small dense real linear algebra. Row-major, double precision throughout.
//
// The hot training loops use the *_into / *_add kernels, which write into
// caller-owned storage and never allocate.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "grnn/errors.hpp"

namespace grnn {

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> values);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Matrix column(std::span<const double> values);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }
    [[nodiscard]] bool is_square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    [[nodiscard]] std::span<double> values() noexcept { return data_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return data_; }
    [[nodiscard]] double* data() noexcept { return data_.data(); }
    [[nodiscard]] const double* data() const noexcept { return data_.data(); }

    void fill(double value);
    void set_zero() { fill(0.0); }
    // Reinterpret the row-major storage with a new shape of equal size.
    void reshape(std::size_t rows, std::size_t cols);

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double alpha);

    // this += alpha * other
    void add_scaled(const Matrix& other, double alpha);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

[[nodiscard]] Matrix operator+(Matrix a, const Matrix& b);
[[nodiscard]] Matrix operator-(Matrix a, const Matrix& b);
[[nodiscard]] Matrix operator*(double alpha, Matrix m);
[[nodiscard]] Matrix operator*(const Matrix& a, const Matrix& b);

[[nodiscard]] Matrix transpose(const Matrix& m);
[[nodiscard]] Matrix hadamard(const Matrix& a, const Matrix& b);

[[nodiscard]] double frobenius_norm(const Matrix& m);
[[nodiscard]] double trace(const Matrix& m);
[[nodiscard]] double max_abs(const Matrix& m);
[[nodiscard]] bool all_finite(const Matrix& m);
[[nodiscard]] bool is_symmetric(const Matrix& m, double tol);
// Sum of products of corresponding entries, i.e. trace(a^T b).
[[nodiscard]] double dot(const Matrix& a, const Matrix& b);
// x^T m x for a column vector stored as (n x 1) or flat row-major storage of size n.
[[nodiscard]] double quadratic_form(const Matrix& m, std::span<const double> x);

// out = a * b
void multiply_into(Matrix& out, const Matrix& a, const Matrix& b);
// out += alpha * a * b
void multiply_add(Matrix& out, const Matrix& a, const Matrix& b, double alpha = 1.0);
// out += alpha * a^T * b
void multiply_at_b_add(Matrix& out, const Matrix& a, const Matrix& b, double alpha = 1.0);
// out += alpha * a * b^T
void multiply_a_bt_add(Matrix& out, const Matrix& a, const Matrix& b, double alpha = 1.0);
// y = m x on flat vectors.
void matvec_into(std::span<double> y, const Matrix& m, std::span<const double> x);
// y += alpha * m^T x on flat vectors.
void matvec_t_add(std::span<double> y, const Matrix& m, std::span<const double> x, double alpha = 1.0);

struct SymmetricEigen {
    std::vector<double> values;  // ascending
    Matrix vectors;              // column j is the eigenvector for values[j]
};

// Cyclic Jacobi eigendecomposition; throws DegenerateInputError if m is not
// symmetric within 1e-10 (relative to its largest entry).
[[nodiscard]] SymmetricEigen sym_eig(const Matrix& m);

// Largest singular value via power iteration on m^T m.
[[nodiscard]] double spectral_norm(const Matrix& m);

// Solves m * x = rhs for symmetric positive definite m via Cholesky.
[[nodiscard]] Matrix solve_spd(const Matrix& m, const Matrix& rhs);

}  // namespace grnn
