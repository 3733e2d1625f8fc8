#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "surrosens/error.hpp"

namespace surrosens {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

/// Standard normal quantile; returns -inf / +inf at p = 0 / 1.
double normal_quantile(double p);

/// Fixed nodes/weights for integrating over a finite interval.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }

    template <class F>
    double integrate(F&& f) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(nodes[i]);
        return sum;
    }
};

/// n-point Gauss-Legendre rule on [a, b]. Reference nodes are cached per n.
QuadratureRule gauss_legendre(std::size_t n, double a = -1.0, double b = 1.0);

/// Gauss-Legendre in z on [-z_max, z_max] pushed through u = Phi(z), so that
/// the rule integrates over (0,1) with nodes graded toward both endpoints.
/// Weights absorb the Jacobian phi(z).
QuadratureRule probit_gauss_legendre(std::size_t n, double z_max = 8.5);

/// Fixed tanh-sinh (double-exponential) rule on [a, b] with n nodes equally
/// spaced in t over [-t_max, t_max]. Robust to integrable endpoint singularities.
QuadratureRule tanh_sinh(std::size_t n, double a = 0.0, double b = 1.0, double t_max = 3.0);

/// Adaptive Gauss-Kronrod (21-point) on [a, b], relative tolerance.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double tol = 1e-10, unsigned max_depth = 18,
                          double* error_estimate = nullptr) {
    double err = 0.0;
    double l1 = 0.0;
    double value = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, max_depth,
                                                                               tol, &err, &l1);
    if (!std::isfinite(value)) throw numerical_error("adaptive quadrature produced a non-finite value");
    if (error_estimate) *error_estimate = err;
    return value;
}

/// Bracketing root finder (TOMS 748, a Brent-family method). f(lo) and f(hi)
/// must have opposite signs; terminates when the bracket is narrower than x_tol.
template <class F>
double find_root(F&& f, double lo, double hi, double x_tol = 1e-12, std::uintmax_t max_iter = 200) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw numerical_error("find_root: interval does not bracket a root");
    auto tol = [x_tol](double a, double b) { return std::abs(b - a) <= x_tol; };
    std::uintmax_t iters = max_iter;
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
    if (iters >= max_iter) throw numerical_error("find_root: no convergence");
    return 0.5 * (a + b);
}

/// Worker cap for parallel loops; 0 means hardware concurrency.
void set_thread_limit(unsigned threads);
unsigned thread_limit();

/// Runs fn(i) for i in [0, n) over at most thread_limit() workers. Exceptions
/// thrown by fn are rethrown on the calling thread (first one wins). Calls made
/// from inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace surrosens
