#pragma once

#include <cstddef>
#include <functional>

#include "surrosens/copula.hpp"
#include "surrosens/numerics.hpp"

namespace surrosens {

/// Left-continuous conditional quantile u -> F^{-1}(u). Must be safe to call
/// concurrently. Only ever evaluated on (0,1).
using QuantileFunction = std::function<double(double)>;

/// Node budget of the composite tanh-sinh rules below, per unit interval.
struct QuadratureConfig {
    std::size_t nodes = 384;
};

enum class Bound { Lower, Upper };
enum class DualKind { U, L };

/// Composite tanh-sinh rule on [a, b], split at every point of `breaks` inside
/// (a, b). Each panel gets a share of the budget proportional to its length.
QuadratureRule composite_rule(double a, double b, std::span<const double> breaks,
                              const QuadratureConfig& quad = {});

/// Rule for integrals against sigma_{C,w}(.; alpha) or c(alpha|.) on (0,1), split
/// at the copula's kinks (Frechet cutoffs, Clayton support edge).
QuadratureRule weight_rule(const CopulaSpec& copula, double alpha, const QuadratureConfig& quad = {});

/// sigma_{C,w}(u; alpha) = (w - C(alpha|u)) / (w - alpha).
double sigma_weight(const CopulaSpec& copula, int w, double u, double alpha);

/// Weighted surrogate index int_0^1 q(u) sigma_{C,w}(u; alpha) du.
double wsi(const QuantileFunction& q, const CopulaSpec& copula, int w, double alpha,
           const QuadratureConfig& quad = {});

/// Upper-tail mean (1/(1-alpha)) int_alpha^1 q(u) du; alpha = 0 gives the mean.
double avar(const QuantileFunction& q, double alpha, const QuadratureConfig& quad = {});

/// WSI at a Frechet bound with rho_sx = 1 - alpha:
///   upper,1: (1/rho) int_{1-rho}^1 q      upper,0: (1/(1-rho)) int_0^{1-rho} q
///   lower,1: (1/rho) int_0^rho q          lower,0: (1/(1-rho)) int_rho^1 q
double worst_case_wsi(const QuantileFunction& q, Bound bound, int w, double rho_sx,
                      const QuadratureConfig& quad = {});

/// Cutoff level of the dual at a Frechet bound: 1 - rho_sx (upper), rho_sx (lower).
double worst_case_level(Bound bound, double rho_sx);

/// H_U(y,s,a) = s + (y-s)_+ / a ;  H_L(y,s,a) = s - (s-y)_+ / a.
double dual_H(DualKind kind, double y, double s, double alpha);

/// The dual transform at a Frechet bound, whose conditional mean given (s,x)
/// is worst_case_wsi when `cutoff` is the quantile at worst_case_level.
double worst_case_dual(Bound bound, int w, double y, double cutoff, double rho_sx);

/// Dual transform h_{C,w}(y; q, alpha) for a smooth copula:
///   w=1: sigma_1(0) y + int ((1-u) q(u) + (y - q(u))_+) dsigma_1(u)
///   w=0: sigma_0(1) y - int (u q(u) - (q(u) - y)_+) dsigma_0(u)
/// with dsigma_1 = -d_u C(alpha|u)/(1-alpha) du and dsigma_0 = d_u C(alpha|u)/alpha du.
double h_dual_general(const CopulaSpec& copula, int w, double y, const QuantileFunction& q, double alpha,
                      const QuadratureConfig& quad = {});

/// d_C = int_0^1 q(u) c(alpha|u) du.
double d_weight(const CopulaSpec& copula, const QuantileFunction& q, double alpha,
                const QuadratureConfig& quad = {});

/// Binary-outcome worst-case contrast mu_{C+,1} - mu_{C+,0} = min(mu/rho, (1-mu)/(1-rho)).
double binary_worst_case_contrast(double mu, double rho_sx);

/// Per-row integrals sharing one rule and one pass over q. Used by the
/// estimators, where q is expensive and several functionals are needed.
class RowIntegrator {
public:
    RowIntegrator(const CopulaSpec& copula, double alpha, const QuantileFunction& q,
                  const QuadratureConfig& quad = {});

    double wsi(int w) const;
    double d_weight() const;
    double h_dual(int w, double y) const;

private:
    CopulaSpec copula_;
    double alpha_;
    QuadratureRule rule_;
    std::vector<double> q_;
    std::vector<double> cond_;  // C(alpha|u_i)
    std::vector<double> jumps_;  // Stieltjes weight of C(alpha|.) attached to u_i
    double cond_at_0_;
    double cond_at_1_;
};

}  // namespace surrosens
