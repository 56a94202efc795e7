#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "lft/errors.hpp"

namespace lft {

using Complex = std::complex<double>;

/// The imaginary unit.
inline constexpr Complex I{0.0, 1.0};

class RngStream;

/// Dense complex rectangular matrix, row-major. Any shape can be assigned
/// to any matrix; the target is resized to the shape of the value.
///
/// Arithmetic reads naturally: given matrices A and B,
///     B = exp(inv(A)) * hermitian(A + 5.0);
/// computes B = e^(A^-1) (A + 5*1)^H. Scalars added to a matrix act as
/// scalar multiples of the identity, so the matrix must be square.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols) {}
    Matrix(std::size_t rows, std::size_t cols, std::initializer_list<Complex> values)
        : rows_(rows), cols_(cols), data_(values) {
        if (data_.size() != rows * cols)
            throw DimensionError("matrix initializer has wrong length");
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m.data_[i * n + i] = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool is_square() const { return rows_ == cols_; }

    Complex& operator()(std::size_t i, std::size_t j) {
        check_index(i, j);
        return data_[i * cols_ + j];
    }
    const Complex& operator()(std::size_t i, std::size_t j) const {
        check_index(i, j);
        return data_[i * cols_ + j];
    }

    std::span<const Complex> data() const { return data_; }
    std::span<Complex> data() { return data_; }

    Matrix& operator+=(const Matrix& rhs);
    Matrix& operator-=(const Matrix& rhs);
    Matrix& operator*=(const Complex& s);
    Matrix& operator*=(double s);
    Matrix& operator/=(double s);

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

  private:
    void check_index(std::size_t i, std::size_t j) const {
        if (i >= rows_ || j >= cols_)
            throw DomainError("matrix index out of range");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Complex> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a);

/// Matrix product; the inner sum runs in increasing index order so that
/// results are bitwise reproducible everywhere.
Matrix operator*(const Matrix& a, const Matrix& b);

Matrix operator*(const Complex& s, const Matrix& a);
Matrix operator*(const Matrix& a, const Complex& s);
Matrix operator*(double s, const Matrix& a);
Matrix operator*(const Matrix& a, double s);
Matrix operator/(const Matrix& a, const Complex& s);
Matrix operator/(const Matrix& a, double s);

// scalar + matrix means scalar*identity + matrix (square matrices only)
Matrix operator+(const Matrix& a, const Complex& s);
Matrix operator+(const Complex& s, const Matrix& a);
Matrix operator-(const Matrix& a, const Complex& s);
Matrix operator-(const Complex& s, const Matrix& a);

/// Conjugate transpose.
Matrix hermitian(const Matrix& a);

/// Inverse by Gaussian elimination with partial pivoting. Throws
/// SingularError when a pivot magnitude falls below 1e-300.
Matrix inv(const Matrix& a);

/// Matrix exponential by scaling-and-squaring with a Taylor series.
Matrix exp(const Matrix& a);

/// Determinant by LU with partial pivoting, sign-tracked.
Complex det(const Matrix& a);

/// Haar-like random SU(n): Gaussian entries, modified Gram-Schmidt on the
/// rows, then the determinant phase is folded into row 0 so det == 1.
Matrix random_su(std::size_t n, RngStream& rng);

/// Largest entry magnitude (0 for empty matrices).
double max_abs(const Matrix& a);

} // namespace lft
