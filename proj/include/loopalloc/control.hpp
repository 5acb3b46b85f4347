#pragma once

#include <cstdint>

#include "loopalloc/mat.hpp"

namespace loopalloc::control {

// State-space description of one control loop: x+ = A x + B u + v observed
// through y = C x + w, with quadratic weights Q (state) and R (input).
struct LoopDynamics {
    std::size_t dim = 0;
    la::Mat a_mat, b_mat, c_mat, q_mat, r_mat;
    la::Mat sigma_v, sigma_w;

    void validate() const;  // throws std::domain_error on a violated invariant
};

// Fixed points of the control and estimation recursions plus the scalars
// the allocator consumes.
struct ControlConstants {
    std::size_t dim = 0;
    la::Mat s_mat, m_mat, n_mat, sigma_mat, p_mat;
    double entropy = 0.0;       // log2|det A|, minimum bits/cycle for stability
    double nm_det_root = 0.0;   // |det(N M)|^(1/m)
    double g_const = 0.0;       // |det(N M)|^(1/m) |det A|^(2/m)
    double cost_floor = 0.0;    // tr(Sigma_v S) + tr(Sigma A^T M A)
};

// LQR cost carrying an explicit instability sentinel; never a floating
// infinity, so outputs stay sortable and serializable.
struct LqrCost {
    bool stable = false;
    double value = 0.0;

    static LqrCost unstable() { return {false, 0.0}; }
    static LqrCost of(double v) { return {true, v}; }
};

struct RiccatiResiduals {
    double control_s = 0.0;     // S = Q + A^T (S - M) A
    double control_m = 0.0;     // M = S^T B (R + B S B)^-1 B^T S
    double estimation_p = 0.0;  // prediction Riccati equation
};

struct LqrRiccatiSolution {
    la::Mat s_mat, m_mat;
    std::int64_t iterations = 0;
};

struct EstimationRiccatiSolution {
    la::Mat p_mat, sigma_mat, n_mat;
    std::int64_t iterations = 0;
};

// Fixed-point iteration from S = Q; relative Frobenius tolerance 1e-12,
// cap 1e6 iterations. The optional start override exists for the restart
// invariance checks.
LqrRiccatiSolution solve_lqr_riccati(const LoopDynamics& dyn, const la::Mat* s_start = nullptr);

// Fixed-point iteration of the prediction Riccati from P = Sigma_v, then
// Sigma = P - P C^T (C P C^T + Sigma_w)^-1 C P^T and
// N = A Sigma A^T - Sigma + Sigma_v. With Sigma_w = 0 and C = I a singular
// P resolves through the limit Sigma = 0.
EstimationRiccatiSolution solve_estimation_riccati(const LoopDynamics& dyn,
                                                   const la::Mat* p_start = nullptr);

RiccatiResiduals riccati_residuals(const LoopDynamics& dyn, const ControlConstants& c);

// Runs both Riccati solves and assembles entropy, G and the cost floor.
ControlConstants control_constants(const LoopDynamics& dyn);

// Cost achievable at a given cycle rate:
//   L = m |det(N M)|^(1/m) / (2^((2/m)(R - entropy)) - 1) + floor,
// Unstable when R <= entropy. The approx variant drops the -1, which is the
// form the closed-form allocators are built on.
LqrCost rate_cost(double cycle_rate_bits, const ControlConstants& c);
LqrCost rate_cost_approx(double cycle_rate_bits, const ControlConstants& c);

// Scaled-identity plant with a prescribed instability level:
// A = 2^(h/m) I, B = C = Q = I, R = 0, Sigma_v/Sigma_w scaled identities.
LoopDynamics dynamics_from_entropy(double entropy_bits, std::size_t dim, double sigma_v_scale,
                                   double sigma_w_scale);

}  // namespace loopalloc::control
