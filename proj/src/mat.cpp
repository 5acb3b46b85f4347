#include "loopalloc/mat.hpp"

#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace loopalloc::la {

namespace {

// Below this dimension the omp fork overhead dominates the kernel.
constexpr std::size_t kParallelDim = 48;

void check_same_dim(const Mat& a, const Mat& b) {
    if (a.dim() != b.dim()) throw std::domain_error("matrix dimension mismatch");
}

}  // namespace

Mat add(const Mat& a, const Mat& b) {
    check_same_dim(a, b);
    Mat c(a.dim());
    const std::size_t nn = a.dim() * a.dim();
    for (std::size_t i = 0; i < nn; ++i) c.data()[i] = a.data()[i] + b.data()[i];
    return c;
}

Mat sub(const Mat& a, const Mat& b) {
    check_same_dim(a, b);
    Mat c(a.dim());
    const std::size_t nn = a.dim() * a.dim();
    for (std::size_t i = 0; i < nn; ++i) c.data()[i] = a.data()[i] - b.data()[i];
    return c;
}

Mat scale(const Mat& a, double s) {
    Mat c(a.dim());
    const std::size_t nn = a.dim() * a.dim();
    for (std::size_t i = 0; i < nn; ++i) c.data()[i] = a.data()[i] * s;
    return c;
}

Mat transpose(const Mat& a) {
    const std::size_t n = a.dim();
    Mat c(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) c(j, i) = a(i, j);
    return c;
}

Mat sym(const Mat& a) {
    const std::size_t n = a.dim();
    Mat c(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) c(i, j) = 0.5 * (a(i, j) + a(j, i));
    return c;
}

Mat mul_serial(const Mat& a, const Mat& b) {
    check_same_dim(a, b);
    const std::size_t n = a.dim();
    Mat c(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    }
    return c;
}

Mat mul(const Mat& a, const Mat& b) {
#ifdef _OPENMP
    check_same_dim(a, b);
    const std::size_t n = a.dim();
    if (n >= kParallelDim) {
        Mat c(n);
        // Each output element is one serial dot product, so the result is
        // bit-identical to mul_serial for any thread count.
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    s += a(static_cast<std::size_t>(i), k) * b(k, j);
                c(static_cast<std::size_t>(i), j) = s;
            }
        }
        return c;
    }
#endif
    return mul_serial(a, b);
}

double trace(const Mat& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += a(i, i);
    return s;
}

double frobenius(const Mat& a) {
    double s = 0.0;
    const std::size_t nn = a.dim() * a.dim();
    for (std::size_t i = 0; i < nn; ++i) s += a.data()[i] * a.data()[i];
    return std::sqrt(s);
}

double max_abs(const Mat& a) {
    double s = 0.0;
    const std::size_t nn = a.dim() * a.dim();
    for (std::size_t i = 0; i < nn; ++i) s = std::max(s, std::abs(a.data()[i]));
    return s;
}

bool is_symmetric(const Mat& a, double tol) {
    const std::size_t n = a.dim();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol) return false;
    return true;
}

Lu lu_factor(const Mat& a) {
    const std::size_t n = a.dim();
    Lu f;
    f.lu = a;
    f.perm.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(f.lu(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(f.lu(r, col));
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best == 0.0) {
            f.singular = true;
            continue;
        }
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(f.lu(piv, j), f.lu(col, j));
            std::swap(f.perm[piv], f.perm[col]);
            f.sign = -f.sign;
        }
        const double d = f.lu(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double m = f.lu(r, col) / d;
            f.lu(r, col) = m;
            for (std::size_t j = col + 1; j < n; ++j) f.lu(r, j) -= m * f.lu(col, j);
        }
    }
    return f;
}

namespace {

void solve_one_column(const Lu& f, const Mat& b, std::size_t j, Mat& x) {
    const std::size_t n = f.lu.dim();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = b(f.perm[i], j);
    for (std::size_t i = 1; i < n; ++i) {
        double s = y[i];
        for (std::size_t k = 0; k < i; ++k) s -= f.lu(i, k) * y[k];
        y[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= f.lu(ii, k) * y[k];
        y[ii] = s / f.lu(ii, ii);
    }
    for (std::size_t i = 0; i < n; ++i) x(i, j) = y[i];
}

bool all_zero(const Mat& b) {
    const std::size_t nn = b.dim() * b.dim();
    for (std::size_t i = 0; i < nn; ++i)
        if (b.data()[i] != 0.0) return false;
    return true;
}

}  // namespace

Mat lu_solve_serial(const Lu& f, const Mat& b) {
    if (f.lu.dim() != b.dim()) throw std::domain_error("matrix dimension mismatch");
    if (f.singular) {
        if (all_zero(b)) return Mat(b.dim());
        throw std::domain_error("singular matrix in solve");
    }
    Mat x(b.dim());
    for (std::size_t j = 0; j < b.dim(); ++j) solve_one_column(f, b, j, x);
    return x;
}

Mat lu_solve(const Lu& f, const Mat& b) {
#ifdef _OPENMP
    if (f.lu.dim() != b.dim()) throw std::domain_error("matrix dimension mismatch");
    const std::size_t n = b.dim();
    if (!f.singular && n >= kParallelDim) {
        Mat x(n);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n); ++j)
            solve_one_column(f, b, static_cast<std::size_t>(j), x);
        return x;
    }
#endif
    return lu_solve_serial(f, b);
}

double log_abs_det(const Mat& a) {
    const Lu f = lu_factor(a);
    if (f.singular) return -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += std::log(std::abs(f.lu(i, i)));
    return s;
}

}  // namespace loopalloc::la
