#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace loopalloc::la {

// Dense square matrix, row-major. Sized at runtime; the fixed-point solvers
// in control.cpp run these kernels on m x m operands with m up to a few
// hundred, which is where the OpenMP paths pay off.
class Mat {
public:
    Mat() = default;
    explicit Mat(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

    static Mat identity(std::size_t n) {
        Mat m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t dim() const { return n_; }
    bool empty() const { return n_ == 0; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    const double* data() const { return a_.data(); }
    double* data() { return a_.data(); }

    bool operator==(const Mat& o) const = default;

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

Mat add(const Mat& a, const Mat& b);
Mat sub(const Mat& a, const Mat& b);
Mat scale(const Mat& a, double s);
Mat transpose(const Mat& a);
Mat sym(const Mat& a);  // (A + A^T)/2

// C = A * B. mul() dispatches to the OpenMP kernel for large dims; the
// serial kernel is the reference the parallel path is tested against.
// Both produce bit-identical results (per-element dot products are
// evaluated in the same order).
Mat mul(const Mat& a, const Mat& b);
Mat mul_serial(const Mat& a, const Mat& b);

double trace(const Mat& a);
double frobenius(const Mat& a);
double max_abs(const Mat& a);
bool is_symmetric(const Mat& a, double tol);

// LU decomposition with partial pivoting. Factorization is serial;
// multi-RHS substitution runs one column per thread.
struct Lu {
    Mat lu;
    std::vector<std::size_t> perm;
    int sign = 1;
    bool singular = false;
};

Lu lu_factor(const Mat& a);

// X = A^-1 * B via a precomputed factorization. Throws std::domain_error
// on a singular factor unless the RHS is exactly zero (then X = 0).
Mat lu_solve(const Lu& f, const Mat& b);
Mat lu_solve_serial(const Lu& f, const Mat& b);

// log|det A| (natural log) and its sign; singular -> -inf.
double log_abs_det(const Mat& a);

inline Mat solve(const Mat& a, const Mat& b) { return lu_solve(lu_factor(a), b); }

}  // namespace loopalloc::la
