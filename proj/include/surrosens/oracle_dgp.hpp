#pragma once

#include <cstdint>
#include <vector>

#include "surrosens/copula.hpp"
#include "surrosens/dataset.hpp"
#include "surrosens/wsi.hpp"

namespace surrosens {

/// Simulation design:
///   X ~ U[0,1], W ~ Bernoulli(rho), S = X + W + eta_S, Y = S + 0.5 X + sd * eta_Y,
/// with W | S, X = 1{eps > 1 - rho(S, X)} in the experimental sample and
/// (eps, Phi(eta_Y)) drawn from `copula`.
struct DgpConfig {
    double rho = 0.5;
    CopulaSpec copula;
    std::size_t n = 2000;
    std::uint64_t seed = 0;
    double s_lo = -4.0;
    double s_hi = 6.0;
    /// Fraction of rows tagged experimental (exact count, rounded).
    double experimental_share = 0.5;
    /// Standard deviation of eta_Y; 0 makes Y a deterministic function of (S, X).
    double outcome_sd = 1.0;
    /// Y is replaced by 1{S + 0.5 X + sd * eta_Y > binary_threshold}.
    bool binary_outcome = false;
    double binary_threshold = 1.0;
    /// Pure-noise columns appended after s1 (N(0,1)) and x1 (U[0,1]).
    std::size_t extra_surrogates = 0;
    std::size_t extra_covariates = 0;
    /// Use the structural W inside the S equation (a single treatment draw)
    /// instead of an independent marginal draw.
    bool one_draw = false;
};

/// Throws Error(Config) on out-of-range fields, including an s-range that
/// leaves more than 1e-4 of the S mass outside.
void validate(const DgpConfig& config);

/// P(S in [s_lo, s_hi]) under the design.
double s_range_mass(double rho, double s_lo, double s_hi);

/// rho(s, x) = 1 / (1 + ((1 - rho)/rho) exp(-(s - x - 0.5))).
double true_surrogacy_score(double s, double x, double rho);

/// (1 - rho) phi(s - x) + rho phi(s - x - 1) on x in [0, 1], zero elsewhere.
double joint_density(double s, double x, double rho);

/// F_Y^{-1}(u | s, x) = s + 0.5 x + sd * Phi^{-1}(u).
double true_quantile(double u, double s, double x, double outcome_sd = 1.0);

struct OracleOptions {
    double s_lo = -4.0;
    double s_hi = 6.0;
    double outcome_sd = 1.0;
    /// Relative tolerance of each level of the nested adaptive integration.
    double tol = 1e-6;
    QuadratureConfig quad;
};

/// tau_C = int int [rho(s,x) / (rho (1 - rho)) mu_{C,1}(s,x) - mu(s,x) / (1 - rho)] f(s,x) ds dx.
double oracle_ate(const CopulaSpec& copula, double rho, const OracleOptions& opts = {});

struct OracleCurvePoint {
    double tau_k;
    double ate;
};

/// One oracle_ate per grid point (evaluated concurrently); tau_k = 0 uses independence.
std::vector<OracleCurvePoint> oracle_curve(CopulaFamily family, const std::vector<double>& tau_grid, double rho,
                                           const OracleOptions& opts = {});

/// Kendall's tau in [lo, hi] where oracle_ate changes sign. Throws Error(Numerical)
/// if the ATE has the same sign at both ends.
double sign_change_threshold(CopulaFamily family, double rho, double lo, double hi, double tau_tol = 1e-4,
                             const OracleOptions& opts = {});

/// Per-row latent draws behind a simulated dataset.
struct LatentSample {
    std::vector<SampleTag> sample;
    std::vector<double> x;
    std::vector<double> s;
    std::vector<int> w_marginal;
    std::vector<int> w;  // structural treatment 1{eps > 1 - rho(S, X)}
    std::vector<double> eps;
    std::vector<double> outcome_rank;  // Phi(eta_Y)
    std::vector<double> y;
    Eigen::MatrixXd extra_s;
    Eigen::MatrixXd extra_x;
};

LatentSample simulate_latent(const DgpConfig& config);

/// Dataset view of simulate_latent: experimental rows keep w, observational rows keep y.
CombinedDataset simulate(const DgpConfig& config);

/// Closed-form nuisances of the design, keyed on (s1, x1).
class DgpOracle {
public:
    explicit DgpOracle(const DgpConfig& config, QuadratureConfig quad = {});

    double propensity_x(double x) const;
    double surrogacy(double s, double x) const;
    double selection(double s, double x) const;
    double phi() const;
    /// E[Y | s, x, O].
    double outcome_mean(double s, double x) const;
    double quantile(double u, double s, double x) const;
    /// q_{C+} = F^{-1}(1 - rho(s,x)), q_{C-} = F^{-1}(rho(s,x)).
    double cutoff(Bound bound, double s, double x) const;
    /// Worst-case WSI mu_{C+/-, w}(s, x).
    double wsi_bound(Bound bound, int w, double s, double x) const;
    /// mu_{C, w}(s, x) for a copula.
    double wsi_copula(const CopulaSpec& copula, int w, double s, double x) const;
    /// d_C(s, x) = int q(u) c(1 - rho(s,x) | u) du.
    double d_weight(const CopulaSpec& copula, double s, double x) const;
    /// E[mu(S, x) | W = w, X = x, E] with S | W = w, X = x ~ N(x + w, 1).
    double cond_mean_bound(Bound bound, int w, double x) const;
    double cond_mean_copula(const CopulaSpec& copula, int w, double x) const;

    const DgpConfig& config() const { return config_; }

private:
    template <class F>
    double average_over_s(int w, double x, F&& f) const;

    DgpConfig config_;
    QuadratureConfig quad_;
};

}  // namespace surrosens
