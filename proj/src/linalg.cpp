#include "grnn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace grnn {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()) + ")");
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("Matrix: entry count " + std::to_string(data_.size()) + " does not match " +
                             std::to_string(rows_) + "x" + std::to_string(cols_));
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
    Matrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("Matrix::from_rows: ragged rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Matrix(r, c, std::move(data));
}

Matrix Matrix::column(std::span<const double> values) {
    return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void Matrix::reshape(std::size_t rows, std::size_t cols) {
    if (rows * cols != data_.size()) throw DimensionError("Matrix::reshape: size mismatch");
    rows_ = rows;
    cols_ = cols;
}

Matrix& Matrix::operator+=(const Matrix& other) {
    require_same_shape(*this, other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    require_same_shape(*this, other, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double alpha) {
    for (double& v : data_) v *= alpha;
    return *this;
}

void Matrix::add_scaled(const Matrix& other, double alpha) {
    require_same_shape(*this, other, "add_scaled");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += alpha * other.data_[i];
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double alpha, Matrix m) { return m *= alpha; }

Matrix operator*(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    multiply_add(out, a, b);
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out = a;
    auto o = out.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
    return out;
}

double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : m.values()) s += v * v;
    return std::sqrt(s);
}

double trace(const Matrix& m) {
    if (!m.is_square()) throw DimensionError("trace: matrix is not square");
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, i);
    return s;
}

double max_abs(const Matrix& m) {
    double s = 0.0;
    for (double v : m.values()) s = std::max(s, std::abs(v));
    return s;
}

bool all_finite(const Matrix& m) {
    return std::all_of(m.values().begin(), m.values().end(), [](double v) { return std::isfinite(v); });
}

bool is_symmetric(const Matrix& m, double tol) {
    if (!m.is_square()) return false;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > tol) return false;
    return true;
}

double dot(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "dot");
    return std::inner_product(a.values().begin(), a.values().end(), b.values().begin(), 0.0);
}

double quadratic_form(const Matrix& m, std::span<const double> x) {
    if (!m.is_square() || m.rows() != x.size()) throw DimensionError("quadratic_form: shape mismatch");
    const std::size_t n = x.size();
    const double* p = m.data();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += p[i * n + j] * x[j];
        s += x[i] * row;
    }
    return s;
}

void multiply_into(Matrix& out, const Matrix& a, const Matrix& b) {
    if (out.rows() != a.rows() || out.cols() != b.cols()) out = Matrix(a.rows(), b.cols());
    else out.set_zero();
    multiply_add(out, a, b);
}

void multiply_add(Matrix& out, const Matrix& a, const Matrix& b, double alpha) {
    if (a.cols() != b.rows() || out.rows() != a.rows() || out.cols() != b.cols())
        throw DimensionError("multiply_add: shape mismatch");
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        double* orow = po + i * m;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = alpha * pa[i * k + l];
            if (av == 0.0) continue;
            const double* brow = pb + l * m;
            for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
}

void multiply_at_b_add(Matrix& out, const Matrix& a, const Matrix& b, double alpha) {
    if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols())
        throw DimensionError("multiply_at_b_add: shape mismatch");
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t r = 0; r < n; ++r) {
        const double* arow = pa + r * k;
        const double* brow = pb + r * m;
        for (std::size_t i = 0; i < k; ++i) {
            const double av = alpha * arow[i];
            if (av == 0.0) continue;
            double* orow = po + i * m;
            for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
}

void multiply_a_bt_add(Matrix& out, const Matrix& a, const Matrix& b, double alpha) {
    if (a.cols() != b.cols() || out.rows() != a.rows() || out.cols() != b.rows())
        throw DimensionError("multiply_a_bt_add: shape mismatch");
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = pa + i * k;
        for (std::size_t j = 0; j < m; ++j) {
            const double* brow = pb + j * k;
            double s = 0.0;
            for (std::size_t l = 0; l < k; ++l) s += arow[l] * brow[l];
            po[i * m + j] += alpha * s;
        }
    }
}

void matvec_into(std::span<double> y, const Matrix& m, std::span<const double> x) {
    if (m.cols() != x.size() || m.rows() != y.size()) throw DimensionError("matvec_into: shape mismatch");
    const std::size_t n = m.rows(), k = m.cols();
    const double* p = m.data();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        const double* row = p + i * k;
        for (std::size_t j = 0; j < k; ++j) s += row[j] * x[j];
        y[i] = s;
    }
}

void matvec_t_add(std::span<double> y, const Matrix& m, std::span<const double> x, double alpha) {
    if (m.rows() != x.size() || m.cols() != y.size()) throw DimensionError("matvec_t_add: shape mismatch");
    const std::size_t n = m.rows(), k = m.cols();
    const double* p = m.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = alpha * x[i];
        if (xi == 0.0) continue;
        const double* row = p + i * k;
        for (std::size_t j = 0; j < k; ++j) y[j] += xi * row[j];
    }
}

SymmetricEigen sym_eig(const Matrix& m) {
    if (!m.is_square()) throw DimensionError("sym_eig: matrix is not square");
    const std::size_t n = m.rows();
    const double scale = std::max(max_abs(m), 1.0);
    if (!is_symmetric(m, 1e-10 * scale)) throw DegenerateInputError("sym_eig: matrix is not symmetric");

    Matrix a = m;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (m(i, j) + m(j, i));
    Matrix v = Matrix::identity(n);

    const double tol = 1e-12 * std::max(frobenius_norm(a), std::numeric_limits<double>::min());
    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    constexpr int kMaxSweeps = 100;
    int sweep = 0;
    for (; sweep < kMaxSweeps && off_norm() > tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (sweep == kMaxSweeps && off_norm() > tol) throw NumericalError("sym_eig: Jacobi sweeps did not converge");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    SymmetricEigen out{std::vector<double>(n), Matrix(n, n)};
    for (std::size_t c = 0; c < n; ++c) {
        out.values[c] = a(order[c], order[c]);
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
    }
    return out;
}

double spectral_norm(const Matrix& m) {
    if (m.empty() || max_abs(m) == 0.0) return 0.0;
    const std::size_t rows = m.rows(), cols = m.cols();

    // Start from the largest row: it has a nonzero component outside the null space of m.
    std::size_t best = 0;
    double best_norm = -1.0;
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) s += m(i, j) * m(i, j);
        if (s > best_norm) {
            best_norm = s;
            best = i;
        }
    }
    std::vector<double> v(cols), mv(rows), w(cols);
    for (std::size_t j = 0; j < cols; ++j) v[j] = m(best, j) / std::sqrt(best_norm);

    double mu = 0.0;
    constexpr int kMaxIterations = 10000;
    for (int it = 0; it < kMaxIterations; ++it) {
        matvec_into(mv, m, v);
        std::fill(w.begin(), w.end(), 0.0);
        matvec_t_add(w, m, mv);
        const double next = std::inner_product(v.begin(), v.end(), w.begin(), 0.0);
        const double wn = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
        if (!std::isfinite(next) || wn == 0.0) throw NumericalError("spectral_norm: power iteration broke down");
        for (std::size_t j = 0; j < cols; ++j) v[j] = w[j] / wn;
        if (it > 0 && std::abs(next - mu) <= 1e-12 * next) return std::sqrt(next);
        mu = next;
    }
    // A near-tie between the two largest singular values stalls the iteration;
    // diagonalize the Gram matrix instead.
    const Matrix gram = rows >= cols ? transpose(m) * m : m * transpose(m);
    const double top = sym_eig(gram).values.back();
    if (!std::isfinite(top) || top < 0.0) throw NumericalError("spectral_norm: power iteration did not converge");
    return std::sqrt(top);
}

Matrix solve_spd(const Matrix& m, const Matrix& rhs) {
    if (!m.is_square() || rhs.rows() != m.rows()) throw DimensionError("solve_spd: shape mismatch");
    const std::size_t n = m.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = m(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) throw NotSpdError("solve_spd: non-positive pivot at column " + std::to_string(j));
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }

    Matrix x = rhs;
    for (std::size_t c = 0; c < rhs.cols(); ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = x(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
            x(i, c) = s / l(i, i);
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = x(i, c);
            for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x(k, c);
            x(i, c) = s / l(i, i);
        }
    }
    return x;
}

}  // namespace grnn
