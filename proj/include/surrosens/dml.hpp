#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "surrosens/nuisance.hpp"

namespace surrosens {

/// Everything one moment evaluation reads for a single row.
struct MomentRow {
    bool experimental = false;
    int w = -1;
    double y = 0.0;
    double rho_x = 0.0;
    double rho_sx = 0.0;
    double phi_sx = 0.0;
    double phi = 0.0;
    double cutoff = 0.0;  // q for a bound, d for a smooth copula
    double mu1 = 0.0;
    double mu0 = 0.0;
    double mubar1 = 0.0;
    double mubar0 = 0.0;
    double dual1 = 0.0;  // h_{C,1} at observational rows (smooth copulas)
    double dual0 = 0.0;
};

std::vector<MomentRow> moment_rows(const CombinedDataset& data, const NuisanceBundle& bundle,
                                   const NuisanceTarget& target);

enum class MomentTerm : std::size_t {
    Arm1Residual,
    Arm0Residual,
    XLevel,
    ObservationalDual,
    Correction1,
    Correction0,
};
inline constexpr std::size_t kMomentTerms = 6;
std::string_view term_name(MomentTerm term);

/// m = value; affine in tau with d m / d tau = -slope.
struct MomentEvaluation {
    double value = 0.0;
    double slope = 0.0;
    std::array<double, kMomentTerms> terms{};

    double term(MomentTerm t) const { return terms[static_cast<std::size_t>(t)]; }
};

/// Orthogonal moment at a Frechet bound; the dual term is recomputed from (Y, q, rho).
MomentEvaluation moment_worst_case(const MomentRow& row, double tau, Bound bound);

/// Orthogonal moment for a smooth copula; reads h and d from the row.
MomentEvaluation moment_general(const MomentRow& row, double tau, const CopulaSpec& copula);

MomentEvaluation evaluate_moment(const MomentRow& row, double tau, const NuisanceTarget& target);

/// Root of the averaged affine moment: sum value(0) / sum slope.
double solve_tau(std::span<const MomentRow> rows, const NuisanceTarget& target);

/// Fold average of per-fold means of Gamma_i Gamma_i^T; gamma is n x J.
Eigen::MatrixXd fold_covariance(const Eigen::MatrixXd& gamma, const FoldAssignment& folds);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return lo <= v && v <= hi; }
    bool excludes_zero() const { return lo > 0.0 || hi < 0.0; }
};

/// tau_hat +- z_{(1+level)/2} se.
Interval wald_ci(double tau_hat, double se, double level);

/// c solving Phi(c + delta / se_max) - Phi(-c) = level; delta clamped at 0.
double imbens_manski_critical_value(double delta, double se_max, double level);

/// [tau_L - c se_L, tau_U + c se_U]; crossing estimates are treated as delta = 0.
Interval interval_identified_ci(double tau_l, double tau_u, double se_l, double se_u, double level);

struct EstimationConfig {
    LearnerConfig learners;
    int folds = 3;
    double level = 0.95;
    std::uint64_t seed = 0;
    std::string config_digest;
};

struct EstimateReport {
    std::vector<std::string> labels;
    std::vector<double> tau_hat;
    std::vector<double> se;
    Eigen::MatrixXd covariance;
    std::vector<Interval> ci;
    /// Bounds only: interval-identified CI and the estimated bound correlation.
    std::optional<Interval> identified_ci;
    std::optional<double> correlation;
    /// Bounds only: lower estimate above the upper one.
    bool crossing = false;
    std::size_t n = 0;
    int folds = 0;
    std::uint64_t seed = 0;
    double level = 0.95;
    std::string config_digest;
};

/// Solve, covariance and intervals for the given targets on a fitted bundle.
/// When the targets are exactly {lower, upper} the bound extras are filled in.
EstimateReport estimate_from_bundle(const CombinedDataset& data, const NuisanceBundle& bundle,
                                    std::span<const NuisanceTarget> targets, double level);

EstimateReport estimate_bounds(const NuisanceBase& base, double level);
EstimateReport estimate_bounds(const CombinedDataset& data, const EstimationConfig& cfg);

/// Throws Error(Config) for copulas without a density.
EstimateReport estimate_general(const NuisanceBase& base, const CopulaSpec& copula, double level);
EstimateReport estimate_general(const CombinedDataset& data, const CopulaSpec& copula, const EstimationConfig& cfg);

struct SensitivityPoint {
    double tau_k = 0.0;
    double theta = 0.0;
    double tau_hat = 0.0;
    double se = 0.0;
    Interval ci;
};

struct SensitivityCurve {
    CopulaFamily family = CopulaFamily::Frank;
    std::vector<SensitivityPoint> points;
    /// Smallest tau_k > 0 whose CI excludes 0, refined by bisection; empty when
    /// the tau_k = 0 interval already excludes 0 or no grid point does.
    std::optional<double> breakpoint;
    std::vector<SensitivityPoint> refinement;
    std::optional<EstimateReport> worst_case;
};

inline constexpr double kBreakpointTolerance = 0.002;

SensitivityCurve sensitivity_analysis(const NuisanceBase& base, CopulaFamily family, std::span<const double> tau_grid,
                                      double level, bool with_worst_case = true);
SensitivityCurve sensitivity_analysis(const CombinedDataset& data, CopulaFamily family,
                                      std::span<const double> tau_grid, const EstimationConfig& cfg);

nlohmann::json to_json(const EstimateReport& report);
nlohmann::json to_json(const SensitivityCurve& curve);
/// tau_k,tau_hat,se,ci_lo,ci_hi
std::string curve_to_csv(const SensitivityCurve& curve);

}  // namespace surrosens
