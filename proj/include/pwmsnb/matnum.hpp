#pragma once

// =============================================================================
// Dense numerical kernels for small real systems (N <= 8): matrix algebra,
// matrix exponential with running integral, eigenvalues, and root finders.
// =============================================================================

#include "pwmsnb/error.hpp"

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace pwmsnb {

using Complex = std::complex<double>;
using Vector = std::vector<double>;
using ComplexList = std::vector<Complex>;

/// Row-major dense real matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
    /// Column matrix built from a vector.
    static Matrix column(std::span<const double> v);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool is_square() const noexcept { return rows_ == cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    Vector col(std::size_t j) const;
    Vector row(std::size_t i) const;
    void set_col(std::size_t j, std::span<const double> v);

    Matrix transpose() const;
    /// Largest absolute entry.
    double max_abs() const noexcept;
    /// Induced 1-norm (max column sum).
    double norm1() const noexcept;
    bool all_finite() const noexcept;

    Matrix& operator+=(const Matrix& rhs);
    Matrix& operator-=(const Matrix& rhs);
    Matrix& operator*=(double s) noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Vector operator*(const Matrix& a, std::span<const double> x);

Vector operator+(Vector a, std::span<const double> b);
Vector operator-(Vector a, std::span<const double> b);
Vector operator*(double s, Vector a);
double dot(std::span<const double> a, std::span<const double> b);
/// Row vector times matrix.
Vector row_times(std::span<const double> row, const Matrix& a);
Matrix outer(std::span<const double> a, std::span<const double> b);
double norm_inf(std::span<const double> v) noexcept;

/// Partial-pivoting LU factorisation of a square matrix.
class LuDecomposition {
public:
    explicit LuDecomposition(Matrix a);

    /// True when a pivot fell below 1e-13 of the largest entry of the input.
    bool singular() const noexcept { return singular_; }
    double determinant() const noexcept;
    /// Throws Error(Singular) when singular().
    Vector solve(std::span<const double> b) const;
    Matrix solve(const Matrix& b) const;

private:
    Matrix lu_;
    std::vector<std::size_t> perm_;
    int sign_ = 1;
    bool singular_ = false;
};

Vector solve(const Matrix& a, std::span<const double> b);
Matrix solve(const Matrix& a, const Matrix& b);
Matrix inverse(const Matrix& a);
double determinant(const Matrix& a);

/// e^{A}, scaling and squaring around the [13/13] Pade approximant.
Matrix expm(const Matrix& a);

struct ExpmPair {
    Matrix E;    ///< e^{A t}
    Matrix Psi;  ///< integral_0^t e^{A s} ds
};

/// Exponential and its running integral from one exponential of the block
/// [[A, I], [0, 0]] t. Works for singular A.
ExpmPair expm_pair(const Matrix& a, double t);

/// All eigenvalues with multiplicity (balancing, Hessenberg reduction,
/// Francis double-shift QR). Sorted by descending modulus.
ComplexList eigenvalues(const Matrix& a, int max_iterations_per_root = 60);

using ScalarFunction = std::function<double(double)>;

/// Roots isolated by sign changes of f on a uniform n_grid scan of [lo, hi],
/// each refined by bisection to a bracket of width <= tol. Tangential roots
/// are not detected.
std::vector<double> bracketed_roots(const ScalarFunction& f, double lo, double hi,
                                    int n_grid = 2000, double tol = 1e-12);

using Point2 = std::array<double, 2>;
using Function2 = std::function<Point2(const Point2&)>;

struct Newton2Options {
    double tol = 1e-10;
    int max_iter = 50;
    double fd_relative_step = 1e-6;
};

/// Damped Newton iteration for F(x) = 0 with a central finite-difference
/// Jacobian. Returns x with max|F(x)| <= tol.
Point2 newton_2d(const Function2& f, Point2 x0, const Newton2Options& opts = {});

}  // namespace pwmsnb
