#pragma once

// Brute-force reference routines used only by tests. They deliberately avoid
// the library's numerics (Boost quadrature, TOMS748, erfc_inv) so that the
// library is checked against an independent route.

#include <cmath>
#include <functional>

namespace oracle {

inline double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

inline double Phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
    double flo = f(lo);
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline double Phi_inv(double p, int iters = 200) {
    return bisect([p](double z) { return Phi(z) - p; }, -40.0, 40.0, iters);
}

// Composite Simpson with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// Midpoint Riemann sum with n cells.
inline double midpoint(const std::function<double(double)>& f, double a, double b, long n) {
    const double h = (b - a) / static_cast<double>(n);
    double s = 0.0;
    for (long i = 0; i < n; ++i) s += f(a + (static_cast<double>(i) + 0.5) * h);
    return s * h;
}

}  // namespace oracle
