#include "loopalloc/control.hpp"

#include <cmath>
#include <stdexcept>

#include "loopalloc/errors.hpp"
#include "loopalloc/fbl.hpp"

namespace loopalloc::control {

using la::Mat;

namespace {

constexpr double kFixedPointTol = 1e-12;
constexpr std::int64_t kMaxIterations = 1'000'000;
constexpr double kResidualTol = 1e-10;

double rel_change(const Mat& next, const Mat& prev) {
    return la::frobenius(la::sub(next, prev)) / std::max(1.0, la::frobenius(next));
}

double rel_residual(const Mat& lhs, const Mat& rhs) {
    return la::frobenius(la::sub(lhs, rhs)) / std::max(1.0, la::frobenius(lhs));
}

bool is_identity(const Mat& m) {
    for (std::size_t i = 0; i < m.dim(); ++i)
        for (std::size_t j = 0; j < m.dim(); ++j)
            if (m(i, j) != (i == j ? 1.0 : 0.0)) return false;
    return true;
}

bool is_zero(const Mat& m) { return la::max_abs(m) == 0.0; }

// M(S) = S^T B (R + B S B)^-1 B^T S; M = 0 whenever B^T S = 0, even if the
// inner matrix is singular.
Mat lqr_gain_term(const LoopDynamics& dyn, const Mat& s) {
    const Mat bts = la::mul(la::transpose(dyn.b_mat), s);
    if (is_zero(bts)) return Mat(dyn.dim);
    const Mat inner = la::add(dyn.r_mat, la::mul(dyn.b_mat, la::mul(s, dyn.b_mat)));
    const Mat x = la::solve(inner, bts);
    return la::mul(la::transpose(s), la::mul(dyn.b_mat, x));
}

// Corrected covariance Sigma = P - P C^T (C P C^T + Sigma_w)^-1 C P^T,
// evaluated in Joseph form (I-KC) P (I-KC)^T + K Sigma_w K^T. The direct
// difference cancels catastrophically once P outgrows Sigma_w by more than
// the mantissa width, which unstable plants reach quickly.
Mat corrected_covariance(const LoopDynamics& dyn, const Mat& p) {
    const Mat cpt = la::mul(dyn.c_mat, la::transpose(p));
    if (is_zero(cpt)) return p;  // no usable observation: K = 0
    const Mat t = la::add(la::mul(dyn.c_mat, la::mul(p, la::transpose(dyn.c_mat))), dyn.sigma_w);
    const la::Lu f = la::lu_factor(t);
    if (f.singular) {
        if (is_zero(dyn.sigma_w) && is_identity(dyn.c_mat)) {
            // Limit of P - P (P + dI)^-1 P as d -> 0+ for PSD P.
            return Mat(dyn.dim);
        }
        throw std::domain_error("estimation riccati: singular innovation matrix");
    }
    const Mat gain = la::transpose(la::lu_solve(f, cpt));  // K = P C^T T^-1
    const Mat imkc = la::sub(Mat::identity(dyn.dim), la::mul(gain, dyn.c_mat));
    const Mat joseph = la::mul(imkc, la::mul(p, la::transpose(imkc)));
    const Mat noise = la::mul(gain, la::mul(dyn.sigma_w, la::transpose(gain)));
    return la::add(joseph, noise);
}

}  // namespace

void LoopDynamics::validate() const {
    if (dim == 0) throw std::domain_error("loop dynamics: dimension must be >= 1");
    for (const Mat* m : {&a_mat, &b_mat, &c_mat, &q_mat, &r_mat, &sigma_v, &sigma_w})
        if (m->dim() != dim) throw std::domain_error("loop dynamics: matrix dimension mismatch");
    const double sym_tol = 1e-9;
    for (const Mat* m : {&q_mat, &r_mat, &sigma_v, &sigma_w})
        if (!la::is_symmetric(*m, sym_tol))
            throw std::domain_error("loop dynamics: weight/covariance matrix not symmetric");
    if (!(la::log_abs_det(a_mat) > 0.0))
        throw std::domain_error("loop dynamics: |det A| must exceed 1 (unstable plant)");
}

LqrRiccatiSolution solve_lqr_riccati(const LoopDynamics& dyn, const Mat* s_start) {
    dyn.validate();
    LqrRiccatiSolution out;
    Mat s = s_start ? *s_start : dyn.q_mat;
    const Mat at = la::transpose(dyn.a_mat);
    for (std::int64_t it = 1; it <= kMaxIterations; ++it) {
        const Mat m = lqr_gain_term(dyn, s);
        // Symmetrize each iterate: the map amplifies antisymmetric rounding
        // residue by |lambda_i lambda_j| > 1 on an unstable plant.
        const Mat s_next =
            la::sym(la::add(dyn.q_mat, la::mul(at, la::mul(la::sub(s, m), dyn.a_mat))));
        const double change = rel_change(s_next, s);
        s = s_next;
        if (change <= kFixedPointTol) {
            out.s_mat = s;
            out.m_mat = lqr_gain_term(dyn, s);
            out.iterations = it;
            return out;
        }
    }
    throw convergence_error("lqr riccati: no fixed point within iteration cap");
}

EstimationRiccatiSolution solve_estimation_riccati(const LoopDynamics& dyn, const Mat* p_start) {
    dyn.validate();
    EstimationRiccatiSolution out;
    Mat p = p_start ? *p_start : dyn.sigma_v;
    const Mat at = la::transpose(dyn.a_mat);
    for (std::int64_t it = 1; it <= kMaxIterations; ++it) {
        const Mat sigma = corrected_covariance(dyn, p);
        const Mat p_next =
            la::sym(la::add(la::mul(dyn.a_mat, la::mul(sigma, at)), dyn.sigma_v));
        const double change = rel_change(p_next, p);
        p = p_next;
        if (change <= kFixedPointTol) {
            out.p_mat = p;
            out.sigma_mat = corrected_covariance(dyn, p);
            out.n_mat = la::add(
                la::sub(la::mul(dyn.a_mat, la::mul(out.sigma_mat, at)), out.sigma_mat),
                dyn.sigma_v);
            out.iterations = it;
            return out;
        }
    }
    throw convergence_error("estimation riccati: no fixed point within iteration cap");
}

RiccatiResiduals riccati_residuals(const LoopDynamics& dyn, const ControlConstants& c) {
    RiccatiResiduals r;
    const Mat at = la::transpose(dyn.a_mat);
    const Mat s_rhs =
        la::add(dyn.q_mat, la::mul(at, la::mul(la::sub(c.s_mat, c.m_mat), dyn.a_mat)));
    r.control_s = rel_residual(c.s_mat, s_rhs);
    r.control_m = rel_residual(c.m_mat, lqr_gain_term(dyn, c.s_mat));
    const Mat sigma = corrected_covariance(dyn, c.p_mat);
    const Mat p_rhs = la::add(la::mul(dyn.a_mat, la::mul(sigma, at)), dyn.sigma_v);
    r.estimation_p = rel_residual(c.p_mat, p_rhs);
    return r;
}

ControlConstants control_constants(const LoopDynamics& dyn) {
    const auto lqr = solve_lqr_riccati(dyn);
    const auto est = solve_estimation_riccati(dyn);

    ControlConstants c;
    c.dim = dyn.dim;
    c.s_mat = lqr.s_mat;
    c.m_mat = lqr.m_mat;
    c.p_mat = est.p_mat;
    c.sigma_mat = est.sigma_mat;
    c.n_mat = est.n_mat;

    const double m = static_cast<double>(dyn.dim);
    const double ld_a = la::log_abs_det(dyn.a_mat);
    c.entropy = ld_a / std::log(2.0);

    // log-domain: dets of N and M span many orders of magnitude at m ~ 100.
    const double ld_nm = la::log_abs_det(c.n_mat) + la::log_abs_det(c.m_mat);
    c.nm_det_root = std::isfinite(ld_nm) ? std::exp(ld_nm / m) : 0.0;
    c.g_const = c.nm_det_root * std::exp(2.0 * ld_a / m);

    const Mat at_m_a = la::mul(la::transpose(dyn.a_mat), la::mul(c.m_mat, dyn.a_mat));
    c.cost_floor = la::trace(la::mul(dyn.sigma_v, c.s_mat)) +
                   la::trace(la::mul(c.sigma_mat, at_m_a));

    const RiccatiResiduals res = riccati_residuals(dyn, c);
    if (res.control_s > kResidualTol || res.control_m > kResidualTol ||
        res.estimation_p > kResidualTol)
        throw convergence_error("control constants: riccati residual above tolerance");
    return c;
}

LqrCost rate_cost(double cycle_rate_bits, const ControlConstants& c) {
    if (!(cycle_rate_bits > c.entropy)) return LqrCost::unstable();
    const double m = static_cast<double>(c.dim);
    // 2^((2/m)(R-h)) - 1 via expm1: exact for small exponents, saturates to
    // +inf (hence a clean zero term) for huge ones.
    const double x = (2.0 * std::log(2.0) / m) * (cycle_rate_bits - c.entropy);
    return LqrCost::of(m * c.nm_det_root / std::expm1(x) + c.cost_floor);
}

LqrCost rate_cost_approx(double cycle_rate_bits, const ControlConstants& c) {
    if (!(cycle_rate_bits > c.entropy)) return LqrCost::unstable();
    const double m = static_cast<double>(c.dim);
    const double x = (2.0 * std::log(2.0) / m) * (cycle_rate_bits - c.entropy);
    return LqrCost::of(m * c.nm_det_root * std::exp(-x) + c.cost_floor);
}

LoopDynamics dynamics_from_entropy(double entropy_bits, std::size_t dim, double sigma_v_scale,
                                   double sigma_w_scale) {
    if (!(entropy_bits > 0.0)) throw std::domain_error("dynamics: entropy must be positive");
    if (dim < 1) throw std::domain_error("dynamics: dimension must be >= 1");
    if (!(sigma_v_scale >= 0.0) || !(sigma_w_scale >= 0.0))
        throw std::domain_error("dynamics: covariance scales must be nonnegative");
    LoopDynamics d;
    d.dim = dim;
    const double a = std::pow(2.0, entropy_bits / static_cast<double>(dim));
    d.a_mat = la::scale(Mat::identity(dim), a);
    d.b_mat = Mat::identity(dim);
    d.c_mat = Mat::identity(dim);
    d.q_mat = Mat::identity(dim);
    d.r_mat = Mat(dim);
    d.sigma_v = la::scale(Mat::identity(dim), sigma_v_scale);
    d.sigma_w = la::scale(Mat::identity(dim), sigma_w_scale);
    return d;
}

}  // namespace loopalloc::control
