#include "surrosens/copula.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "surrosens/error.hpp"
#include "surrosens/numerics.hpp"

namespace surrosens {

namespace {

constexpr double kTauZero = 1e-6;

constexpr std::array<std::pair<CopulaFamily, std::string_view>, 8> kNames{{
    {CopulaFamily::Independence, "independence"},
    {CopulaFamily::Gaussian, "gaussian"},
    {CopulaFamily::Clayton, "clayton"},
    {CopulaFamily::Gumbel, "gumbel"},
    {CopulaFamily::Frank, "frank"},
    {CopulaFamily::Plackett, "plackett"},
    {CopulaFamily::FrechetLower, "frechet_lower"},
    {CopulaFamily::FrechetUpper, "frechet_upper"},
}};

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Bivariate standard normal CDF via the arcsine-angle integral:
// Phi2(h,k;r) = Phi(h)Phi(k) + 1/(2 pi) int_0^{asin r} exp(-(h^2+k^2-2hk sin t)/(2 cos^2 t)) dt.
double bivariate_normal_cdf(double h, double k, double r) {
    if (h == -kInf || k == -kInf) return 0.0;
    if (h == kInf) return normal_cdf(k);
    if (k == kInf) return normal_cdf(h);
    const double base = normal_cdf(h) * normal_cdf(k);
    if (r == 0.0) return base;
    const double hk = h * k;
    const double hh_kk = h * h + k * k;
    auto integrand = [&](double t) {
        const double s = std::sin(t);
        const double c2 = 1.0 - s * s;
        return std::exp(-(hh_kk - 2.0 * hk * s) / (2.0 * c2));
    };
    const double upper = std::asin(r);
    const double integral = integrate_adaptive(integrand, 0.0, upper, 1e-13, 20);
    return std::clamp(base + integral / (2.0 * std::numbers::pi), 0.0, 1.0);
}

// ---- Clayton (theta >= -1, theta != 0) ----

// log(u^-theta + v^-theta - 1) for theta > 0, computed without overflow.
double clayton_log_b_positive(double theta, double log_u, double log_v) {
    const double a = -theta * log_u;
    const double b = -theta * log_v;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m) - std::exp(-m));
}

double clayton_joint(double theta, double u, double v) {
    if (u <= 0.0 || v <= 0.0) return 0.0;
    if (theta > 0.0) return std::exp(-clayton_log_b_positive(theta, std::log(u), std::log(v)) / theta);
    const double b = std::pow(u, -theta) + std::pow(v, -theta) - 1.0;
    return b <= 0.0 ? 0.0 : std::pow(b, -1.0 / theta);
}

double clayton_cond(double theta, double alpha, double u) {
    if (alpha <= 0.0) return 0.0;
    if (alpha >= 1.0) return 1.0;
    if (theta > 0.0) {
        if (u <= 0.0) return 1.0;
        const double log_u = std::log(u);
        const double log_b = clayton_log_b_positive(theta, log_u, std::log(alpha));
        return clamp01(std::exp((-theta - 1.0) * log_u + (-1.0 / theta - 1.0) * log_b));
    }
    if (u <= 0.0) return 0.0;
    const double b = std::pow(u, -theta) + std::pow(alpha, -theta) - 1.0;
    if (b <= 0.0) return 0.0;
    return clamp01(std::pow(u, -theta - 1.0) * std::pow(b, -1.0 / theta - 1.0));
}

double clayton_pdf(double theta, double alpha, double u) {
    if (theta > 0.0) {
        const double lu = std::log(u);
        const double lv = std::log(alpha);
        const double log_b = clayton_log_b_positive(theta, lu, lv);
        return std::exp(std::log1p(theta) + (-theta - 1.0) * (lu + lv) + (-1.0 / theta - 2.0) * log_b);
    }
    const double b = std::pow(u, -theta) + std::pow(alpha, -theta) - 1.0;
    if (b <= 0.0) return 0.0;
    return (1.0 + theta) * std::pow(u * alpha, -theta - 1.0) * std::pow(b, -1.0 / theta - 2.0);
}

// d/du C(alpha|u) = (1+theta) u^{-theta-2} B^{-1/theta-2} (1 - alpha^{-theta}).
double clayton_d_du(double theta, double alpha, double u) {
    const double lu = std::log(u);
    const double lv = std::log(alpha);
    if (theta > 0.0) {
        const double log_b = clayton_log_b_positive(theta, lu, lv);
        const double e = -theta * lv;  // alpha^{-theta} - 1 = expm1(e) > 0
        return -(1.0 + theta) *
               std::exp((-theta - 2.0) * lu + (-1.0 / theta - 2.0) * log_b + std::log(std::expm1(e)));
    }
    const double b = std::pow(u, -theta) + std::pow(alpha, -theta) - 1.0;
    if (b <= 0.0) return 0.0;
    return (1.0 + theta) * std::pow(u, -theta - 2.0) * std::pow(b, -1.0 / theta - 2.0) *
           (1.0 - std::pow(alpha, -theta));
}

// ---- Gumbel (theta >= 1) ----

// A = (x^theta + y^theta)^{1/theta}, x = -log u, y = -log v.
double gumbel_a(double theta, double x, double y) {
    const double m = std::max(x, y);
    if (m == 0.0) return 0.0;
    if (m == kInf) return kInf;
    const double r = std::min(x, y) / m;
    return m * std::pow(1.0 + std::pow(r, theta), 1.0 / theta);
}

double gumbel_joint(double theta, double u, double v) {
    if (u <= 0.0 || v <= 0.0) return 0.0;
    return std::exp(-gumbel_a(theta, -std::log(u), -std::log(v)));
}

double gumbel_log_cond(double theta, double x, double a) {
    // log[C A^{1-theta} x^{theta-1} / u] with C = e^{-A}, 1/u = e^{x}
    return -a + (1.0 - theta) * std::log(a) + (theta - 1.0) * std::log(x) + x;
}

double gumbel_cond(double theta, double alpha, double u) {
    if (alpha <= 0.0) return 0.0;
    if (alpha >= 1.0) return 1.0;
    if (u <= 0.0) return 1.0;
    if (u >= 1.0) return 0.0;
    const double x = -std::log(u);
    const double a = gumbel_a(theta, x, -std::log(alpha));
    return clamp01(std::exp(gumbel_log_cond(theta, x, a)));
}

double gumbel_pdf(double theta, double alpha, double u) {
    const double x = -std::log(u);
    const double y = -std::log(alpha);
    const double a = gumbel_a(theta, x, y);
    return std::exp(-a + x + y + (theta - 1.0) * (std::log(x) + std::log(y)) +
                    (1.0 - 2.0 * theta) * std::log(a) + std::log(a + theta - 1.0));
}

double gumbel_d_du(double theta, double alpha, double u) {
    const double x = -std::log(u);
    const double a = gumbel_a(theta, x, -std::log(alpha));
    const double g = std::exp(gumbel_log_cond(theta, x, a));
    const double ax = std::pow(a, -theta) * std::pow(x, theta - 1.0);  // A^{-theta} x^{theta-1}
    const double bracket = a * ax - (1.0 - theta) * ax - (theta - 1.0) / x - 1.0;
    return g * bracket / u;
}

// ---- Frank (theta != 0) ----

double frank_joint(double theta, double u, double v) {
    const double num = std::expm1(-theta * u) * std::expm1(-theta * v);
    return clamp01(-std::log1p(num / std::expm1(-theta)) / theta);
}

// (e^{-theta} - 1) + (e^{-theta u} - 1)(e^{-theta alpha} - 1), regrouped so that
// both summands share a sign and nothing cancels.
double frank_den(double theta, double alpha, double u) {
    return std::exp(-theta * alpha) * std::expm1(-theta * u) +
           std::exp(-theta * u) * std::expm1(-theta * (1.0 - u));
}

double frank_cond(double theta, double alpha, double u) {
    const double num = std::exp(-theta * u) * std::expm1(-theta * alpha);
    return clamp01(num / frank_den(theta, alpha, u));
}

double frank_pdf(double theta, double alpha, double u) {
    const double den = frank_den(theta, alpha, u);
    return -theta * std::expm1(-theta) * std::exp(-theta * (u + alpha)) / (den * den);
}

double frank_d_du(double theta, double alpha, double u) {
    const double den = frank_den(theta, alpha, u);
    const double b = std::expm1(-theta * alpha);
    const double tail = std::exp(-theta * alpha) * std::expm1(-theta * (1.0 - alpha));
    return -theta * std::exp(-theta * u) * b * tail / (den * den);
}

double frank_cond_quantile(double theta, double t, double u) {
    const double a = std::exp(-theta * u);
    const double b = t * std::expm1(-theta) / (a * (1.0 - t) + t);
    return clamp01(-std::log1p(b) / theta);
}

// ---- Plackett (theta > 0, theta != 1) ----

struct PlackettTerms {
    double s;
    double r;
};

PlackettTerms plackett_terms(double theta, double u, double v) {
    const double eta = theta - 1.0;
    const double s = 1.0 + eta * (u + v);
    const double r2 = s * s - 4.0 * u * v * theta * eta;
    return {s, std::sqrt(std::max(r2, 0.0))};
}

double plackett_joint(double theta, double u, double v) {
    const auto [s, r] = plackett_terms(theta, u, v);
    const double denom = s + r;
    if (denom <= 0.0) return 0.0;
    return clamp01(2.0 * u * v * theta / denom);
}

double plackett_cond(double theta, double alpha, double u) {
    const auto [s, r] = plackett_terms(theta, u, alpha);
    if (r <= 0.0) return u < alpha ? 1.0 : 0.0;
    return clamp01(0.5 * (1.0 - (s - 2.0 * theta * alpha) / r));
}

double plackett_pdf(double theta, double alpha, double u) {
    const auto [s, r] = plackett_terms(theta, u, alpha);
    const double eta = theta - 1.0;
    return theta * (1.0 + eta * (u + alpha - 2.0 * u * alpha)) / (r * r * r);
}

double plackett_d_du(double theta, double alpha, double u) {
    const auto [s, r] = plackett_terms(theta, u, alpha);
    const double eta = theta - 1.0;
    return -2.0 * eta * theta * alpha * (1.0 - alpha) / (r * r * r);
}

// Plackett tau by 4 * int int C dC - 1 on a tensor Gauss-Legendre rule.
double plackett_tau(double theta) {
    static const QuadratureRule rule = gauss_legendre(400, 0.0, 1.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double u = rule.nodes[i];
        double inner = 0.0;
        for (std::size_t j = 0; j < rule.size(); ++j) {
            const double v = rule.nodes[j];
            inner += rule.weights[j] * plackett_joint(theta, u, v) * plackett_pdf(theta, v, u);
        }
        sum += rule.weights[i] * inner;
    }
    return 4.0 * sum - 1.0;
}

double frank_tau(double theta) {
    if (theta < 0.0) return -frank_tau(-theta);
    if (theta < 1e-2) return theta / 9.0 - theta * theta * theta / 900.0;
    return 1.0 - 4.0 / theta * (1.0 - debye1(theta));
}

void require_smooth(const CopulaSpec& spec, const char* op) {
    if (!spec.absolutely_continuous())
        throw config_error(std::string(op) + ": undefined for non-absolutely-continuous copula " +
                           spec.describe());
}

}  // namespace

std::string_view family_name(CopulaFamily family) {
    for (const auto& [f, name] : kNames)
        if (f == family) return name;
    return "unknown";
}

CopulaFamily parse_family(std::string_view name) {
    for (const auto& [f, n] : kNames)
        if (n == name) return f;
    throw config_error("unknown copula family '" + std::string(name) + "'");
}

bool is_parametric(CopulaFamily family) {
    switch (family) {
        case CopulaFamily::Independence:
        case CopulaFamily::FrechetLower:
        case CopulaFamily::FrechetUpper:
            return false;
        default:
            return true;
    }
}

bool TauRange::contains(double tau) const {
    const bool above = lo_inclusive ? tau >= lo : tau > lo;
    const bool below = hi_inclusive ? tau <= hi : tau < hi;
    return above && below;
}

TauRange tau_range(CopulaFamily family) {
    switch (family) {
        case CopulaFamily::Independence: return {0.0, 0.0, true, true};
        case CopulaFamily::FrechetLower: return {-1.0, -1.0, true, true};
        case CopulaFamily::FrechetUpper: return {1.0, 1.0, true, true};
        case CopulaFamily::Clayton: return {-1.0 / 3.0, 1.0, true, false};
        case CopulaFamily::Gumbel: return {0.0, 1.0, true, false};
        case CopulaFamily::Gaussian:
        case CopulaFamily::Frank:
        case CopulaFamily::Plackett: return {-1.0, 1.0, false, false};
    }
    return {0.0, 0.0, true, true};
}

CopulaSpec::CopulaSpec(CopulaFamily family, double theta) : family_(family), theta_(theta) {
    auto bad = [&](const char* range) {
        std::ostringstream os;
        os << "theta=" << theta << " outside the valid range " << range << " for family "
           << family_name(family);
        throw config_error(os.str());
    };
    if (!std::isfinite(theta)) bad("(finite)");
    switch (family) {
        case CopulaFamily::Independence:
        case CopulaFamily::FrechetLower:
        case CopulaFamily::FrechetUpper:
            theta_ = 0.0;
            break;
        case CopulaFamily::Gaussian:
            if (!(theta > -1.0 && theta < 1.0)) bad("(-1, 1)");
            break;
        case CopulaFamily::Clayton:
            if (!(theta >= -1.0) || theta == 0.0) bad("[-1, inf) \\ {0}");
            break;
        case CopulaFamily::Gumbel:
            if (!(theta >= 1.0)) bad("[1, inf)");
            break;
        case CopulaFamily::Frank:
            if (theta == 0.0) bad("R \\ {0}");
            break;
        case CopulaFamily::Plackett:
            if (!(theta > 0.0) || theta == 1.0) bad("(0, inf) \\ {1}");
            break;
    }
}

CopulaSpec CopulaSpec::frechet_lower() { return {CopulaFamily::FrechetLower, 0.0}; }
CopulaSpec CopulaSpec::frechet_upper() { return {CopulaFamily::FrechetUpper, 0.0}; }

CopulaSpec CopulaSpec::from_kendall_tau(CopulaFamily family, double tau) {
    if (!is_parametric(family)) {
        if (!tau_range(family).contains(tau))
            throw config_error("kendall tau " + std::to_string(tau) + " not attainable by " +
                               std::string(family_name(family)));
        return {family, 0.0};
    }
    const auto theta = tau_to_theta(family, tau);
    if (!theta) return independence();
    return {family, *theta};
}

std::string CopulaSpec::describe() const {
    std::ostringstream os;
    os << family_name(family_);
    if (is_parametric(family_)) os << "(theta=" << theta_ << ")";
    return os.str();
}

bool CopulaSpec::absolutely_continuous() const {
    switch (family_) {
        case CopulaFamily::FrechetLower:
        case CopulaFamily::FrechetUpper:
            return false;
        case CopulaFamily::Clayton:
            return theta_ > -1.0;
        default:
            return true;
    }
}

double CopulaSpec::joint_cdf(double u, double v) const {
    if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0))
        throw config_error("joint_cdf: arguments must lie in [0,1]");
    if (u == 0.0 || v == 0.0) return 0.0;
    if (u == 1.0) return v;
    if (v == 1.0) return u;
    switch (family_) {
        case CopulaFamily::Independence: return u * v;
        case CopulaFamily::FrechetLower: return std::max(u + v - 1.0, 0.0);
        case CopulaFamily::FrechetUpper: return std::min(u, v);
        case CopulaFamily::Gaussian:
            if (theta_ == 0.0) return u * v;
            return bivariate_normal_cdf(normal_quantile(u), normal_quantile(v), theta_);
        case CopulaFamily::Clayton: return clayton_joint(theta_, u, v);
        case CopulaFamily::Gumbel: return theta_ == 1.0 ? u * v : gumbel_joint(theta_, u, v);
        case CopulaFamily::Frank: return frank_joint(theta_, u, v);
        case CopulaFamily::Plackett: return plackett_joint(theta_, u, v);
    }
    return u * v;
}

double CopulaSpec::cond_cdf(double alpha, double u) const {
    if (!(alpha >= 0.0 && alpha <= 1.0 && u >= 0.0 && u <= 1.0))
        throw config_error("cond_cdf: arguments must lie in [0,1]");
    switch (family_) {
        case CopulaFamily::Independence: return alpha;
        // a.e. indicator versions; the boundary point takes the left limit
        case CopulaFamily::FrechetUpper: return u <= alpha ? 1.0 : 0.0;
        case CopulaFamily::FrechetLower: return u > 1.0 - alpha ? 1.0 : 0.0;
        case CopulaFamily::Gaussian: {
            if (theta_ == 0.0 || alpha == 0.0 || alpha == 1.0) return alpha;
            const double arg = (normal_quantile(alpha) - theta_ * normal_quantile(u)) /
                               std::sqrt(1.0 - theta_ * theta_);
            return normal_cdf(arg);
        }
        case CopulaFamily::Clayton: return clayton_cond(theta_, alpha, u);
        case CopulaFamily::Gumbel: return theta_ == 1.0 ? alpha : gumbel_cond(theta_, alpha, u);
        case CopulaFamily::Frank: return frank_cond(theta_, alpha, u);
        case CopulaFamily::Plackett: return plackett_cond(theta_, alpha, u);
    }
    return alpha;
}

double CopulaSpec::cond_pdf(double alpha, double u) const {
    require_smooth(*this, "cond_pdf");
    if (!(alpha > 0.0 && alpha < 1.0 && u > 0.0 && u < 1.0))
        throw config_error("cond_pdf: arguments must lie in (0,1)");
    switch (family_) {
        case CopulaFamily::Gaussian: {
            if (theta_ == 0.0) return 1.0;
            const double s = std::sqrt(1.0 - theta_ * theta_);
            const double za = normal_quantile(alpha);
            const double arg = (za - theta_ * normal_quantile(u)) / s;
            return std::exp(0.5 * (za * za - arg * arg)) / s;
        }
        case CopulaFamily::Clayton: return clayton_pdf(theta_, alpha, u);
        case CopulaFamily::Gumbel: return theta_ == 1.0 ? 1.0 : gumbel_pdf(theta_, alpha, u);
        case CopulaFamily::Frank: return frank_pdf(theta_, alpha, u);
        case CopulaFamily::Plackett: return plackett_pdf(theta_, alpha, u);
        default: return 1.0;
    }
}

double CopulaSpec::d_du_cond_cdf(double alpha, double u) const {
    require_smooth(*this, "d_du_cond_cdf");
    if (!(alpha >= 0.0 && alpha <= 1.0 && u > 0.0 && u < 1.0))
        throw config_error("d_du_cond_cdf: u must lie in (0,1), alpha in [0,1]");
    if (alpha == 0.0 || alpha == 1.0) return 0.0;
    switch (family_) {
        case CopulaFamily::Gaussian: {
            if (theta_ == 0.0) return 0.0;
            const double s = std::sqrt(1.0 - theta_ * theta_);
            const double zu = normal_quantile(u);
            const double arg = (normal_quantile(alpha) - theta_ * zu) / s;
            return -theta_ / s * std::exp(0.5 * (zu * zu - arg * arg));
        }
        case CopulaFamily::Clayton: return clayton_d_du(theta_, alpha, u);
        case CopulaFamily::Gumbel: return theta_ == 1.0 ? 0.0 : gumbel_d_du(theta_, alpha, u);
        case CopulaFamily::Frank: return frank_d_du(theta_, alpha, u);
        case CopulaFamily::Plackett: return plackett_d_du(theta_, alpha, u);
        default: return 0.0;
    }
}

double CopulaSpec::cond_quantile(double t, double u) const {
    if (!(t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0))
        throw config_error("cond_quantile: arguments must lie in [0,1]");
    switch (family_) {
        case CopulaFamily::Independence: return t;
        case CopulaFamily::FrechetUpper: return u;
        case CopulaFamily::FrechetLower: return 1.0 - u;
        case CopulaFamily::Gaussian:
            if (t == 0.0 || t == 1.0) return t;
            return normal_cdf(theta_ * normal_quantile(u) +
                              std::sqrt(1.0 - theta_ * theta_) * normal_quantile(t));
        case CopulaFamily::Frank:
            return frank_cond_quantile(theta_, t, u);
        default:
            break;
    }
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    // Brent on the monotone map alpha -> C(alpha | u).
    return find_root([&](double a) { return cond_cdf(a, u) - t; }, 0.0, 1.0, 1e-14);
}

double CopulaSpec::kendall_tau() const { return theta_to_tau(family_, theta_); }

double debye1(double x) {
    if (std::abs(x) < 1e-2) {
        const double x2 = x * x;
        return 1.0 - x / 4.0 + x2 / 36.0 - x2 * x2 / 3600.0;
    }
    auto integrand = [](double t) { return t == 0.0 ? 1.0 : t / std::expm1(t); };
    return integrate_adaptive(integrand, 0.0, x, 1e-13, 15) / x;
}

double theta_to_tau(CopulaFamily family, double theta) {
    const CopulaSpec spec(family, theta);  // validates
    switch (family) {
        case CopulaFamily::Independence: return 0.0;
        case CopulaFamily::FrechetLower: return -1.0;
        case CopulaFamily::FrechetUpper: return 1.0;
        case CopulaFamily::Gaussian: return 2.0 / std::numbers::pi * std::asin(theta);
        case CopulaFamily::Clayton: return theta / (theta + 2.0);
        case CopulaFamily::Gumbel: return 1.0 - 1.0 / theta;
        case CopulaFamily::Frank: return frank_tau(theta);
        case CopulaFamily::Plackett: return plackett_tau(theta);
    }
    return 0.0;
}

std::optional<double> tau_to_theta(CopulaFamily family, double tau) {
    if (!is_parametric(family))
        throw config_error("tau_to_theta: family " + std::string(family_name(family)) +
                           " has no parameter");
    if (!tau_range(family).contains(tau))
        throw config_error("kendall tau " + std::to_string(tau) + " not attainable by family " +
                           std::string(family_name(family)));
    if (std::abs(tau) < kTauZero) return std::nullopt;
    switch (family) {
        case CopulaFamily::Gaussian: return std::sin(std::numbers::pi / 2.0 * tau);
        case CopulaFamily::Clayton: return 2.0 * tau / (1.0 - tau);
        case CopulaFamily::Gumbel: return 1.0 / (1.0 - tau);
        case CopulaFamily::Frank: {
            const double target = std::abs(tau);
            // tau(theta) < 1 - 4/theta + 4 pi^2/(6 theta^2); the bracket below covers it.
            const double hi = 8.0 / (1.0 - target) + 10.0;
            const double theta = find_root([&](double th) { return frank_tau(th) - target; }, 1e-6,
                                           hi, 1e-13);
            return tau > 0.0 ? theta : -theta;
        }
        case CopulaFamily::Plackett: {
            const double log_theta = find_root(
                [&](double t) { return plackett_tau(std::exp(t)) - tau; }, std::log(1e-6),
                std::log(1e6), 1e-13);
            return std::exp(log_theta);
        }
        default: break;
    }
    return std::nullopt;
}

bool concordance_leq(const CopulaSpec& a, const CopulaSpec& b, int grid_n) {
    if (grid_n < 2) throw config_error("concordance_leq: grid_n must be >= 2");
    const double step = 1.0 / (grid_n + 1);
    for (int i = 1; i <= grid_n; ++i) {
        for (int j = 1; j <= grid_n; ++j) {
            const double u = i * step;
            const double v = j * step;
            if (a.joint_cdf(u, v) > b.joint_cdf(u, v) + 1e-12) return false;
        }
    }
    return true;
}

bool is_stochastically_increasing(const CopulaSpec& spec, int grid_n) {
    if (grid_n < 3) throw config_error("is_stochastically_increasing: grid_n must be >= 3");
    const double step = 1.0 / (grid_n + 1);
    for (int j = 1; j <= grid_n; ++j) {
        const double alpha = j * step;
        double prev = spec.cond_cdf(alpha, step);
        for (int i = 2; i <= grid_n; ++i) {
            const double cur = spec.cond_cdf(alpha, i * step);
            if (cur > prev + 1e-10) return false;
            prev = cur;
        }
    }
    return true;
}

std::vector<double> default_tau_grid(CopulaFamily family) {
    static constexpr std::array<double, 11> kGrid{-0.9, -0.75, -0.5, -0.25, -0.1, 0.0,
                                                  0.1,  0.25,  0.5,  0.75,  0.9};
    const TauRange range = tau_range(family);
    std::vector<double> grid;
    for (double t : kGrid)
        if (t == 0.0 || range.contains(t)) grid.push_back(t);
    return grid;
}

}  // namespace surrosens
