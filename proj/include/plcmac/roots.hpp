#ifndef PLCMAC_ROOTS_HPP
#define PLCMAC_ROOTS_HPP

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace plcmac {

struct BracketError : std::runtime_error {
    BracketError(const std::string& what) : std::runtime_error(what) {}
};

struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Root of f on [lo, hi] where f(lo) and f(hi) have opposite signs.
///
/// Illinois-damped regula falsi with a bisection fallback; stops when
/// |f(x)| < ftol or the bracket width falls below xtol. Throws
/// BracketError (with the endpoint values) if the signs do not differ.
template <class F>
double find_root(F&& f, double lo, double hi, double xtol, double ftol,
                 int max_iter = 400) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "no sign change in bracket: f(%.17g)=%.17g, f(%.17g)=%.17g",
                      lo, flo, hi, fhi);
        throw BracketError(buf);
    }
    double x = lo;
    int side = 0;  // which endpoint was retained last (Illinois damping)
    for (int it = 0; it < max_iter; ++it) {
        double denom = fhi - flo;
        x = (denom != 0.0) ? (lo * fhi - hi * flo) / denom : 0.5 * (lo + hi);
        // keep the iterate strictly inside the bracket
        double mid = 0.5 * (lo + hi);
        if (!(x > lo && x < hi)) x = mid;
        double fx = f(x);
        if (std::fabs(fx) < ftol || hi - lo < xtol) return x;
        if ((fx > 0.0) == (flo > 0.0)) {
            lo = x;
            flo = fx;
            if (side == -1) fhi *= 0.5;
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if (side == +1) flo *= 0.5;
            side = +1;
        }
    }
    throw ConvergenceError("find_root: max iterations exceeded");
}

}  // namespace plcmac

#endif
