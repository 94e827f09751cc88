#include "pwmsnb/matnum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace pwmsnb {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Dimension: return "dimension";
        case ErrorKind::Overflow: return "overflow";
        case ErrorKind::NonConvergence: return "non-convergence";
        case ErrorKind::Evaluation: return "evaluation";
        case ErrorKind::Singular: return "singular";
        case ErrorKind::UnsupportedScheme: return "unsupported-scheme";
        case ErrorKind::UnsupportedParameter: return "unsupported-parameter";
        case ErrorKind::InvalidParameter: return "invalid-parameter";
        case ErrorKind::DegenerateOrbit: return "degenerate-orbit";
        case ErrorKind::Grazing: return "grazing";
        case ErrorKind::NoCriticalValue: return "no-critical-value";
        case ErrorKind::NoSnbInBracket: return "no-snb-in-bracket";
        case ErrorKind::ModelInvariant: return "model-invariant";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Schema: return "schema";
    }
    return "unknown";
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        std::ostringstream os;
        os << op << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows()
           << "x" << b.cols();
        throw Error(ErrorKind::Dimension, os.str());
    }
}

}  // namespace

// -----------------------------------------------------------------------------
// Matrix
// -----------------------------------------------------------------------------

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw Error(ErrorKind::Dimension, "ragged matrix initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::column(std::span<const double> v) {
    Matrix m(v.size(), 1);
    std::copy(v.begin(), v.end(), m.data_.begin());
    return m;
}

Vector Matrix::col(std::size_t j) const {
    Vector v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
}

Vector Matrix::row(std::size_t i) const {
    return Vector(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                  data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
}

void Matrix::set_col(std::size_t j, std::span<const double> v) {
    if (v.size() != rows_) throw Error(ErrorKind::Dimension, "set_col: length mismatch");
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double Matrix::max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

double Matrix::norm1() const noexcept {
    double best = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) s += std::abs((*this)(i, j));
        best = std::max(best, s);
    }
    return best;
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& rhs) {
    require_same_shape(*this, rhs, "operator+");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += rhs.data_[k];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& rhs) {
    require_same_shape(*this, rhs, "operator-");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= rhs.data_[k];
    return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw Error(ErrorKind::Dimension, "operator*: inner dimension mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw Error(ErrorKind::Dimension, "matrix-vector: length mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Vector operator+(Vector a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::Dimension, "vector+: length mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

Vector operator-(Vector a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::Dimension, "vector-: length mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

Vector operator*(double s, Vector a) {
    for (double& v : a) v *= s;
    return a;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::Dimension, "dot: length mismatch");
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

Vector row_times(std::span<const double> row, const Matrix& a) {
    if (row.size() != a.rows()) throw Error(ErrorKind::Dimension, "row_times: length mismatch");
    Vector out(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out[j] += row[i] * a(i, j);
    return out;
}

Matrix outer(std::span<const double> a, std::span<const double> b) {
    Matrix m(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
    return m;
}

double norm_inf(std::span<const double> v) noexcept {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// -----------------------------------------------------------------------------
// LU
// -----------------------------------------------------------------------------

LuDecomposition::LuDecomposition(Matrix a) : lu_(std::move(a)) {
    if (!lu_.is_square()) throw Error(ErrorKind::Dimension, "LU: matrix is not square");
    const std::size_t n = lu_.rows();
    perm_.resize(n);
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    const double scale = lu_.max_abs();
    const double threshold = 1e-13 * scale;
    if (scale == 0.0 && n > 0) singular_ = true;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu_(i, k)) > std::abs(lu_(p, k))) p = i;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
            std::swap(perm_[k], perm_[p]);
            sign_ = -sign_;
        }
        const double pivot = lu_(k, k);
        if (std::abs(pivot) <= threshold) {
            singular_ = true;
            continue;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = lu_(i, k) / pivot;
            lu_(i, k) = f;
            for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
        }
    }
}

double LuDecomposition::determinant() const noexcept {
    double det = sign_;
    for (std::size_t i = 0; i < lu_.rows(); ++i) det *= lu_(i, i);
    return det;
}

Vector LuDecomposition::solve(std::span<const double> b) const {
    const std::size_t n = lu_.rows();
    if (b.size() != n) throw Error(ErrorKind::Dimension, "LU solve: length mismatch");
    if (singular_) throw Error(ErrorKind::Singular, "LU solve: matrix is singular");
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[perm_[i]];
        for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
        x[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= lu_(ii, j) * x[j];
        x[ii] = s / lu_(ii, ii);
    }
    return x;
}

Matrix LuDecomposition::solve(const Matrix& b) const {
    if (b.rows() != lu_.rows()) throw Error(ErrorKind::Dimension, "LU solve: row mismatch");
    Matrix x(b.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) x.set_col(j, solve(b.col(j)));
    return x;
}

Vector solve(const Matrix& a, std::span<const double> b) { return LuDecomposition(a).solve(b); }
Matrix solve(const Matrix& a, const Matrix& b) { return LuDecomposition(a).solve(b); }
Matrix inverse(const Matrix& a) { return solve(a, Matrix::identity(a.rows())); }
double determinant(const Matrix& a) { return LuDecomposition(a).determinant(); }

// -----------------------------------------------------------------------------
// Matrix exponential
// -----------------------------------------------------------------------------

Matrix expm(const Matrix& a) {
    if (!a.is_square()) throw Error(ErrorKind::Dimension, "expm: matrix is not square");
    if (!a.all_finite()) throw Error(ErrorKind::Overflow, "expm: non-finite input");
    const std::size_t n = a.rows();
    if (n == 0) return a;

    // Higham (2005) degree-13 coefficients and scaling threshold.
    static constexpr std::array<double, 14> b = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
        129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
        1323241920.0,        40840800.0,          960960.0,           16380.0,
        182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;

    const double norm = a.norm1();
    int s = 0;
    if (norm > theta13) s = static_cast<int>(std::ceil(std::log2(norm / theta13)));
    const Matrix as = a * std::ldexp(1.0, -s);

    const Matrix id = Matrix::identity(n);
    const Matrix a2 = as * as;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;

    Matrix u_inner = b[13] * a6 + b[11] * a4 + b[9] * a2;
    u_inner = a6 * u_inner + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
    const Matrix u = as * u_inner;

    Matrix v = b[12] * a6 + b[10] * a4 + b[8] * a2;
    v = a6 * v + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

    Matrix r = solve(v - u, v + u);
    for (int k = 0; k < s; ++k) r = r * r;
    if (!r.all_finite()) throw Error(ErrorKind::Overflow, "expm: result is not finite");
    return r;
}

ExpmPair expm_pair(const Matrix& a, double t) {
    if (!a.is_square()) throw Error(ErrorKind::Dimension, "expm_pair: matrix is not square");
    if (!(t >= 0.0)) throw Error(ErrorKind::InvalidParameter, "expm_pair: t must be >= 0");
    const std::size_t n = a.rows();
    Matrix block(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) block(i, j) = a(i, j) * t;
        block(i, n + i) = t;
    }
    const Matrix e = expm(block);
    ExpmPair out{Matrix(n, n), Matrix(n, n)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            out.E(i, j) = e(i, j);
            out.Psi(i, j) = e(i, n + j);
        }
    return out;
}

// -----------------------------------------------------------------------------
// Eigenvalues
// -----------------------------------------------------------------------------

namespace {

void balance(Matrix& a) {
    constexpr double radix = 2.0;
    constexpr double sqrdx = radix * radix;
    const std::size_t n = a.rows();
    bool done = false;
    while (!done) {
        done = true;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0, c = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(a(j, i));
                r += std::abs(a(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                g = 1.0 / f;
                for (std::size_t j = 0; j < n; ++j) a(i, j) *= g;
                for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
            }
        }
    }
}

// Reduction to upper Hessenberg form by stabilised elementary similarity
// transforms; entries below the subdiagonal are zeroed on exit.
void to_hessenberg(Matrix& a) {
    const std::size_t n = a.rows();
    for (std::size_t m = 1; m + 1 < n; ++m) {
        double x = 0.0;
        std::size_t piv = m;
        for (std::size_t j = m; j < n; ++j)
            if (std::abs(a(j, m - 1)) > std::abs(x)) {
                x = a(j, m - 1);
                piv = j;
            }
        if (piv != m) {
            for (std::size_t j = m - 1; j < n; ++j) std::swap(a(piv, j), a(m, j));
            for (std::size_t j = 0; j < n; ++j) std::swap(a(j, piv), a(j, m));
        }
        if (x == 0.0) continue;
        for (std::size_t i = m + 1; i < n; ++i) {
            double y = a(i, m - 1);
            if (y == 0.0) continue;
            y /= x;
            a(i, m - 1) = y;
            for (std::size_t j = m; j < n; ++j) a(i, j) -= y * a(m, j);
            for (std::size_t j = 0; j < n; ++j) a(j, m) += y * a(j, i);
        }
    }
    for (std::size_t i = 2; i < n; ++i)
        for (std::size_t j = 0; j + 1 < i; ++j) a(i, j) = 0.0;
}

double copysign_abs(double magnitude, double sign_of) {
    return sign_of >= 0.0 ? std::abs(magnitude) : -std::abs(magnitude);
}

ComplexList hessenberg_qr(Matrix a, int max_its) {
    const int n = static_cast<int>(a.rows());
    ComplexList out(static_cast<std::size_t>(n));
    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));

    int nn = n - 1;
    double t = 0.0;
    double p = 0, q = 0, r = 0, s = 0, w = 0, x = 0, y = 0, z = 0;
    while (nn >= 0) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l >= 1; --l) {
                s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(a(l, l - 1)) + s == s) {
                    a(l, l - 1) = 0.0;
                    break;
                }
            }
            x = a(nn, nn);
            if (l == nn) {
                out[nn] = Complex(x + t, 0.0);
                --nn;
            } else {
                y = a(nn - 1, nn - 1);
                w = a(nn, nn - 1) * a(nn - 1, nn);
                if (l == nn - 1) {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + copysign_abs(z, p);
                        const double hi = x + z;
                        const double lo = z != 0.0 ? x - w / z : hi;
                        out[nn - 1] = Complex(hi, 0.0);
                        out[nn] = Complex(lo, 0.0);
                    } else {
                        out[nn - 1] = Complex(x + p, -z);
                        out[nn] = Complex(x + p, z);
                    }
                    nn -= 2;
                } else {
                    if (its == max_its) {
                        std::ostringstream os;
                        os << "eigenvalues: QR iteration did not converge after " << its
                           << " iterations (active block ends at row " << nn << ")";
                        throw Error(ErrorKind::NonConvergence, os.str());
                    }
                    if (its > 0 && its % 10 == 0) {
                        // Exceptional shift.
                        t += x;
                        for (int i = 0; i <= nn; ++i) a(i, i) -= x;
                        s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        w = -0.4375 * s * s;
                    }
                    ++its;
                    int m = nn - 2;
                    for (; m >= l; --m) {
                        z = a(m, m);
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
                        q = a(m + 1, m + 1) - z - r - s;
                        r = a(m + 2, m + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v =
                            std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
                        if (u + v == v) break;
                    }
                    for (int i = m + 2; i <= nn; ++i) {
                        a(i, i - 2) = 0.0;
                        if (i != m + 2) a(i, i - 3) = 0.0;
                    }
                    for (int k = m; k <= nn - 1; ++k) {
                        if (k != m) {
                            p = a(k, k - 1);
                            q = a(k + 1, k - 1);
                            r = 0.0;
                            if (k != nn - 1) r = a(k + 2, k - 1);
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        s = copysign_abs(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) continue;
                        if (k == m) {
                            if (l != m) a(k, k - 1) = -a(k, k - 1);
                        } else {
                            a(k, k - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) {
                            p = a(k, j) + q * a(k + 1, j);
                            if (k != nn - 1) {
                                p += r * a(k + 2, j);
                                a(k + 2, j) -= p * z;
                            }
                            a(k + 1, j) -= p * y;
                            a(k, j) -= p * x;
                        }
                        const int mmin = nn < k + 3 ? nn : k + 3;
                        for (int i = l; i <= mmin; ++i) {
                            p = x * a(i, k) + y * a(i, k + 1);
                            if (k != nn - 1) {
                                p += z * a(i, k + 2);
                                a(i, k + 2) -= p * r;
                            }
                            a(i, k + 1) -= p * q;
                            a(i, k) -= p;
                        }
                    }
                }
            }
        } while (l < nn - 1);
    }
    return out;
}

}  // namespace

ComplexList eigenvalues(const Matrix& a, int max_iterations_per_root) {
    if (!a.is_square()) throw Error(ErrorKind::Dimension, "eigenvalues: matrix is not square");
    if (a.rows() > 8) throw Error(ErrorKind::Dimension, "eigenvalues: dimension above 8");
    if (!a.all_finite()) throw Error(ErrorKind::Overflow, "eigenvalues: non-finite input");
    if (a.rows() == 0) return {};
    Matrix h = a;
    balance(h);
    to_hessenberg(h);
    ComplexList ev = hessenberg_qr(std::move(h), max_iterations_per_root);
    std::stable_sort(ev.begin(), ev.end(), [](const Complex& x, const Complex& y) {
        if (std::abs(x) != std::abs(y)) return std::abs(x) > std::abs(y);
        if (x.real() != y.real()) return x.real() > y.real();
        return x.imag() < y.imag();
    });
    return ev;
}

// -----------------------------------------------------------------------------
// Root finding
// -----------------------------------------------------------------------------

std::vector<double> bracketed_roots(const ScalarFunction& f, double lo, double hi, int n_grid,
                                    double tol) {
    if (!(lo < hi)) throw Error(ErrorKind::InvalidParameter, "bracketed_roots: need lo < hi");
    if (n_grid < 2) throw Error(ErrorKind::InvalidParameter, "bracketed_roots: n_grid < 2");
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidParameter, "bracketed_roots: tol must be > 0");

    auto eval = [&](double x) {
        const double v = f(x);
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os.precision(17);
            os << "bracketed_roots: f is not finite at x = " << x;
            throw Error(ErrorKind::Evaluation, os.str());
        }
        return v;
    };

    const double step = (hi - lo) / n_grid;
    std::vector<double> roots;
    double x0 = lo;
    double f0 = eval(x0);
    if (f0 == 0.0) roots.push_back(x0);
    for (int k = 1; k <= n_grid; ++k) {
        const double x1 = k == n_grid ? hi : lo + k * step;
        const double f1 = eval(x1);
        if (f1 == 0.0) {
            roots.push_back(x1);
        } else if (f0 != 0.0 && (f0 < 0.0) != (f1 < 0.0)) {
            double a = x0, b = x1, fa = f0, fb = f1;
            while (b - a > tol) {
                const double m = 0.5 * (a + b);
                if (m <= a || m >= b) break;
                const double fm = eval(m);
                if (fm == 0.0) {
                    a = b = m;
                    fa = fb = 0.0;
                    break;
                }
                if ((fm < 0.0) == (fa < 0.0)) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                    fb = fm;
                }
            }
            roots.push_back(std::abs(fa) <= std::abs(fb) ? a : b);
        }
        x0 = x1;
        f0 = f1;
    }
    return roots;
}

Point2 newton_2d(const Function2& f, Point2 x, const Newton2Options& opts) {
    auto eval = [&](const Point2& p) {
        const Point2 v = f(p);
        if (!std::isfinite(v[0]) || !std::isfinite(v[1]))
            throw Error(ErrorKind::Evaluation, "newton_2d: F is not finite");
        return v;
    };
    auto norm = [](const Point2& v) { return std::max(std::abs(v[0]), std::abs(v[1])); };

    Point2 fx = eval(x);
    Point2 best = x;
    double best_norm = norm(fx);
    for (int it = 0; it < opts.max_iter; ++it) {
        if (norm(fx) <= opts.tol) return x;

        double jac[2][2];
        for (int j = 0; j < 2; ++j) {
            const double h = opts.fd_relative_step * (x[j] != 0.0 ? std::abs(x[j]) : 1.0);
            Point2 xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const Point2 fp = eval(xp), fm = eval(xm);
            for (int i = 0; i < 2; ++i) jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
        const double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        const double scale = std::max({std::abs(jac[0][0] * jac[1][1]), std::abs(jac[0][1] * jac[1][0]),
                                       std::numeric_limits<double>::min()});
        if (!std::isfinite(det) || std::abs(det) <= 1e-14 * scale)
            throw Error(ErrorKind::Singular, "newton_2d: finite-difference Jacobian is singular");
        const Point2 dx = {(jac[1][1] * fx[0] - jac[0][1] * fx[1]) / det,
                           (-jac[1][0] * fx[0] + jac[0][0] * fx[1]) / det};

        // Backtracking on max|F|.
        double lambda = 1.0;
        Point2 xn{}, fn{};
        for (int k = 0; k < 20; ++k) {
            xn = {x[0] - lambda * dx[0], x[1] - lambda * dx[1]};
            try {
                fn = eval(xn);
                if (norm(fn) < norm(fx) || k == 19) break;
            } catch (const Error&) {
                if (k == 19) throw;
            }
            lambda *= 0.5;
        }
        x = xn;
        fx = fn;
        if (norm(fx) < best_norm) {
            best_norm = norm(fx);
            best = x;
        }
    }
    if (norm(fx) <= opts.tol) return x;
    std::ostringstream os;
    os << "newton_2d: no convergence after " << opts.max_iter << " iterations, best |F| = " << best_norm;
    throw NonConvergenceError(os.str(), {best[0], best[1]});
}

}  // namespace pwmsnb
