#ifndef DUALCAL_BISECTION_HPP
#define DUALCAL_BISECTION_HPP

#include <cmath>
#include <sstream>

#include "dualcal/error.hpp"

namespace dualcal {

struct BisectionOptions {
    double tolerance = 1e-10;  // absolute bracket width
    int max_iterations = 200;
};

struct BisectionResult {
    double root = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

/// Plain bisection on [lo, hi]. Requires f(lo) and f(hi) of opposite sign
/// (or one of them zero); throws NumericalError naming the bracket otherwise.
template <typename F>
BisectionResult bisect(F&& f, double lo, double hi, BisectionOptions opts = {}) {
    double f_lo = f(lo);
    double f_hi = f(hi);
    if (f_lo == 0.0) return {lo, 0.0, 0};
    if (f_hi == 0.0) return {hi, 0.0, 0};
    if (!(std::signbit(f_lo) != std::signbit(f_hi)) || std::isnan(f_lo) || std::isnan(f_hi)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "bisection: no sign change on [" << lo << ", " << hi << "] (f = " << f_lo << ", " << f_hi
            << ")";
        throw NumericalError(msg.str());
    }

    BisectionResult out;
    while (out.iterations < opts.max_iterations && hi - lo > opts.tolerance) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double f_mid = f(mid);
        ++out.iterations;
        if (f_mid == 0.0) {
            lo = hi = mid;
            f_lo = 0.0;
            break;
        }
        if (std::signbit(f_mid) == std::signbit(f_lo)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    // endpoint with the smaller residual
    if (std::abs(f_lo) <= std::abs(f_hi)) {
        out.root = lo;
        out.residual = f_lo;
    } else {
        out.root = hi;
        out.residual = f_hi;
    }
    return out;
}

}  // namespace dualcal

#endif  // DUALCAL_BISECTION_HPP
