#pragma once

#include <cmath>
#include <functional>

#include "loopalloc/errors.hpp"

namespace loopalloc {

// Bracketing bisection: f(lo) and f(hi) must straddle zero. Runs until the
// bracket shrinks below rel_tol (relative to the midpoint) or max_iter.
// Guaranteed to converge on a sign change; no derivative required.
template <class F>
double bisect(F&& f, double lo, double hi, double rel_tol = 1e-10, int max_iter = 200) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw convergence_error("bisect: endpoints do not bracket a root");
    for (int i = 0; i < max_iter; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo <= rel_tol * std::max(1.0, std::abs(mid))) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace loopalloc
