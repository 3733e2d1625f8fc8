#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace surrosens {

enum class CopulaFamily {
    Independence,
    Gaussian,
    Clayton,
    Gumbel,
    Frank,
    Plackett,
    FrechetLower,
    FrechetUpper,
};

/// Lowercase wire name ("gaussian", "frechet_upper", ...).
std::string_view family_name(CopulaFamily family);
CopulaFamily parse_family(std::string_view name);

/// Families indexed by a dependence parameter.
bool is_parametric(CopulaFamily family);

/// Attainable Kendall's tau range [lo, hi] (endpoints may be excluded by the family).
struct TauRange {
    double lo;
    double hi;
    bool lo_inclusive;
    bool hi_inclusive;

    bool contains(double tau) const;
};
TauRange tau_range(CopulaFamily family);

/// A bivariate copula family with its dependence parameter. Immutable.
///
/// Argument convention throughout: C(u, v) with u the outcome rank and v the
/// latent treatment rank; conditional quantities condition on u. All families
/// here are exchangeable, so the roles can be swapped freely.
class CopulaSpec {
public:
    /// Independence copula.
    CopulaSpec() = default;

    /// Validates theta against the family's range. Throws Error(Config).
    CopulaSpec(CopulaFamily family, double theta);

    static CopulaSpec independence() { return {}; }
    static CopulaSpec frechet_lower();
    static CopulaSpec frechet_upper();
    static CopulaSpec gaussian(double theta) { return {CopulaFamily::Gaussian, theta}; }

    /// Calibrates theta to Kendall's tau; |tau| < 1e-6 yields Independence.
    static CopulaSpec from_kendall_tau(CopulaFamily family, double tau);

    CopulaFamily family() const { return family_; }
    double theta() const { return theta_; }
    std::string describe() const;

    /// True when the copula has a density (everything except the Frechet bounds).
    bool absolutely_continuous() const;

    /// C(u, v).
    double joint_cdf(double u, double v) const;

    /// C(alpha | u) = dC(u, alpha)/du = P(V <= alpha | U = u).
    double cond_cdf(double alpha, double u) const;

    /// c(alpha | u) = d^2 C(u, alpha) / du dalpha. Throws for the Frechet bounds.
    double cond_pdf(double alpha, double u) const;

    /// d/du C(alpha | u). Throws for the Frechet bounds.
    double d_du_cond_cdf(double alpha, double u) const;

    /// Inverse of alpha -> C(alpha | u) at level t (conditional sampling).
    double cond_quantile(double t, double u) const;

    double kendall_tau() const;

    bool operator==(const CopulaSpec&) const = default;

private:
    CopulaFamily family_ = CopulaFamily::Independence;
    double theta_ = 0.0;
};

// Free-function spellings of the core operations.
inline double joint_cdf(const CopulaSpec& c, double u, double v) { return c.joint_cdf(u, v); }
inline double cond_cdf(const CopulaSpec& c, double alpha, double u) { return c.cond_cdf(alpha, u); }
inline double cond_pdf(const CopulaSpec& c, double alpha, double u) { return c.cond_pdf(alpha, u); }
inline double d_du_cond_cdf(const CopulaSpec& c, double alpha, double u) {
    return c.d_du_cond_cdf(alpha, u);
}

/// Kendall's tau -> family parameter. std::nullopt means tau is (numerically)
/// zero and the caller should use the independence copula. Throws Error(Config)
/// when tau is outside the family's attainable range.
std::optional<double> tau_to_theta(CopulaFamily family, double tau);

/// Family parameter -> Kendall's tau.
double theta_to_tau(CopulaFamily family, double theta);

/// Debye function D_1(x) = (1/x) int_0^x t/(e^t - 1) dt, D_1(0) = 1.
double debye1(double x);

/// C_a <= C_b (+1e-12) on the grid_n x grid_n interior lattice {i/(grid_n+1)}.
bool concordance_leq(const CopulaSpec& a, const CopulaSpec& b, int grid_n);

/// C(alpha | u) non-increasing in u along every lattice alpha (1e-10 slack).
bool is_stochastically_increasing(const CopulaSpec& spec, int grid_n);

/// The tau grid used for sensitivity curves, intersected with a family's range.
std::vector<double> default_tau_grid(CopulaFamily family);

}  // namespace surrosens
