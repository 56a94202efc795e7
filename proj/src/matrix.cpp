#include "lft/matrix.hpp"

#include <cmath>
#include <cstddef>
#include <string>

#include "lft/rng.hpp"

namespace lft {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string(op) + ": shape mismatch " +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                             " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
}

void require_square(const Matrix& a, const char* op) {
    if (!a.is_square())
        throw DimensionError(std::string(op) + ": matrix is not square (" +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                             ")");
}

constexpr double kPivotFloor = 1e-300;

// max absolute row sum
double inf_norm(const Matrix& a) {
    double norm = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j)
            row += std::abs(a(i, j));
        norm = std::max(norm, row);
    }
    return norm;
}

} // namespace

Matrix& Matrix::operator+=(const Matrix& rhs) {
    require_same_shape(*this, rhs, "add");
    for (std::size_t k = 0; k < data_.size(); ++k)
        data_[k] += rhs.data_[k];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& rhs) {
    require_same_shape(*this, rhs, "sub");
    for (std::size_t k = 0; k < data_.size(); ++k)
        data_[k] -= rhs.data_[k];
    return *this;
}

Matrix& Matrix::operator*=(const Complex& s) {
    for (auto& z : data_)
        z *= s;
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (auto& z : data_)
        z = Complex(z.real() * s, z.imag() * s);
    return *this;
}

Matrix& Matrix::operator/=(double s) {
    for (auto& z : data_)
        z = Complex(z.real() / s, z.imag() / s);
    return *this;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    Matrix r = a;
    r += b;
    return r;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    Matrix r = a;
    r -= b;
    return r;
}

Matrix operator-(const Matrix& a) {
    Matrix r = a;
    for (auto& z : r.data())
        z = -z;
    return r;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw DimensionError("mul: inner dimensions " + std::to_string(a.cols()) +
                             " and " + std::to_string(b.rows()) + " differ");
    Matrix r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            Complex acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k)
                acc += a(i, k) * b(k, j);
            r(i, j) = acc;
        }
    return r;
}

Matrix operator*(const Complex& s, const Matrix& a) {
    Matrix r = a;
    r *= s;
    return r;
}

Matrix operator*(const Matrix& a, const Complex& s) {
    Matrix r = a;
    r *= s;
    return r;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix r = a;
    r *= s;
    return r;
}

Matrix operator*(const Matrix& a, double s) {
    Matrix r = a;
    r *= s;
    return r;
}

Matrix operator/(const Matrix& a, const Complex& s) {
    Matrix r = a;
    for (auto& z : r.data())
        z /= s;
    return r;
}

Matrix operator/(const Matrix& a, double s) {
    Matrix r = a;
    r /= s;
    return r;
}

Matrix operator+(const Matrix& a, const Complex& s) {
    require_square(a, "scalar add");
    Matrix r = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        r(i, i) += s;
    return r;
}

Matrix operator+(const Complex& s, const Matrix& a) {
    return a + s;
}

Matrix operator-(const Matrix& a, const Complex& s) {
    return a + (-s);
}

Matrix operator-(const Complex& s, const Matrix& a) {
    return (-a) + s;
}

Matrix hermitian(const Matrix& a) {
    Matrix r(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            r(j, i) = std::conj(a(i, j));
    return r;
}

Matrix inv(const Matrix& a) {
    require_square(a, "inv");
    const std::size_t n = a.rows();
    Matrix work = a;
    Matrix result = Matrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        // partial pivot: strictly larger magnitude wins, so ties keep the
        // lowest row index
        std::size_t pivot = col;
        double best = std::abs(work(col, col));
        for (std::size_t row = col + 1; row < n; ++row) {
            const double mag = std::abs(work(row, col));
            if (mag > best) {
                best = mag;
                pivot = row;
            }
        }
        if (best < kPivotFloor)
            throw SingularError("inv: zero pivot in column " + std::to_string(col));
        if (pivot != col)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(work(col, j), work(pivot, j));
                std::swap(result(col, j), result(pivot, j));
            }
        const Complex p = work(col, col);
        for (std::size_t j = 0; j < n; ++j) {
            work(col, j) /= p;
            result(col, j) /= p;
        }
        for (std::size_t row = 0; row < n; ++row) {
            if (row == col)
                continue;
            const Complex f = work(row, col);
            if (f == Complex(0.0))
                continue;
            for (std::size_t j = 0; j < n; ++j) {
                work(row, j) -= f * work(col, j);
                result(row, j) -= f * result(col, j);
            }
        }
    }
    return result;
}

Matrix exp(const Matrix& a) {
    require_square(a, "exp");
    const std::size_t n = a.rows();

    const double norm = inf_norm(a);
    int squarings = 0;
    if (norm > 0.0)
        squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm))));

    Matrix scaled = a;
    if (squarings > 0)
        scaled /= std::ldexp(1.0, squarings);

    Matrix sum = Matrix::identity(n);
    Matrix term = Matrix::identity(n);
    for (int k = 1; k <= 100; ++k) {
        term = term * scaled;
        term /= static_cast<double>(k);
        sum += term;
        if (max_abs(term) < 1e-16)
            break;
    }

    for (int s = 0; s < squarings; ++s)
        sum = sum * sum;
    return sum;
}

Complex det(const Matrix& a) {
    require_square(a, "det");
    const std::size_t n = a.rows();
    Matrix work = a;
    Complex result = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(work(col, col));
        for (std::size_t row = col + 1; row < n; ++row) {
            const double mag = std::abs(work(row, col));
            if (mag > best) {
                best = mag;
                pivot = row;
            }
        }
        if (best < kPivotFloor)
            return Complex(0.0);
        if (pivot != col) {
            for (std::size_t j = col; j < n; ++j)
                std::swap(work(col, j), work(pivot, j));
            result = -result;
        }
        result *= work(col, col);
        for (std::size_t row = col + 1; row < n; ++row) {
            const Complex f = work(row, col) / work(col, col);
            for (std::size_t j = col + 1; j < n; ++j)
                work(row, j) -= f * work(col, j);
        }
    }
    return result;
}

Matrix random_su(std::size_t n, RngStream& rng) {
    if (n == 0)
        throw DimensionError("random_su: n must be at least 1");
    Matrix u(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double re = rng.gaussian();
            const double im = rng.gaussian();
            u(i, j) = Complex(re, im);
        }
    // modified Gram-Schmidt on rows, in order
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) {
            Complex proj = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                proj += std::conj(u(k, j)) * u(i, j);
            for (std::size_t j = 0; j < n; ++j)
                u(i, j) -= proj * u(k, j);
        }
        double norm2 = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            norm2 += std::norm(u(i, j));
        const double norm = std::sqrt(norm2);
        for (std::size_t j = 0; j < n; ++j)
            u(i, j) /= norm;
    }
    // |det| is 1 after orthonormalization; rotating row 0 by conj(det)
    // brings the determinant to 1
    const Complex d = det(u);
    for (std::size_t j = 0; j < n; ++j)
        u(0, j) *= std::conj(d);
    return u;
}

double max_abs(const Matrix& a) {
    double best = 0.0;
    for (const auto& z : a.data())
        best = std::max(best, std::abs(z));
    return best;
}

} // namespace lft
