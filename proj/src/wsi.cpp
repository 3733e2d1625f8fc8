#include "surrosens/wsi.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "surrosens/error.hpp"

namespace surrosens {

namespace {

constexpr double kQuantileGuard = 1e-9;
constexpr std::size_t kMinPanelNodes = 32;

double guarded(const QuantileFunction& q, double u) {
    if (u <= 0.0) return q(kQuantileGuard);
    if (u >= 1.0) return q(1.0 - kQuantileGuard);
    return q(u);
}

void check_alpha(double alpha, const char* op) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw numerical_error(std::string(op) + ": alpha must lie in (0,1) (degenerate propensity)");
}

void check_arm(int w) {
    if (w != 0 && w != 1) throw config_error("treatment arm must be 0 or 1");
}

}  // namespace

QuadratureRule composite_rule(double a, double b, std::span<const double> breaks, const QuadratureConfig& quad) {
    if (!(a >= 0.0 && b <= 1.0 && a < b)) throw config_error("composite_rule: need 0 <= a < b <= 1");
    if (quad.nodes < kMinPanelNodes) throw config_error("quadrature needs at least 32 nodes");
    std::vector<double> cuts{a, b};
    for (double x : breaks)
        if (x > a && x < b) cuts.push_back(x);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    QuadratureRule rule;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i];
        const double hi = cuts[i + 1];
        if (hi - lo < 1e-15) continue;
        const double share = static_cast<double>(quad.nodes) * (hi - lo) / (b - a);
        const auto n = std::max(kMinPanelNodes, static_cast<std::size_t>(std::lround(share)));
        const QuadratureRule piece = tanh_sinh(n, lo, hi);
        rule.nodes.insert(rule.nodes.end(), piece.nodes.begin(), piece.nodes.end());
        rule.weights.insert(rule.weights.end(), piece.weights.begin(), piece.weights.end());
    }
    return rule;
}

QuadratureRule weight_rule(const CopulaSpec& copula, double alpha, const QuadratureConfig& quad) {
    std::vector<double> breaks;
    switch (copula.family()) {
        case CopulaFamily::FrechetUpper: breaks.push_back(alpha); break;
        case CopulaFamily::FrechetLower: breaks.push_back(1.0 - alpha); break;
        case CopulaFamily::Clayton:
            if (copula.theta() < 0.0) {
                // C(alpha|u) vanishes for u below the support edge u^{-theta} + alpha^{-theta} = 1.
                const double t = -copula.theta();
                breaks.push_back(std::pow(1.0 - std::pow(alpha, t), 1.0 / t));
            }
            break;
        default: break;
    }
    return composite_rule(0.0, 1.0, breaks, quad);
}

double sigma_weight(const CopulaSpec& copula, int w, double u, double alpha) {
    check_arm(w);
    check_alpha(alpha, "sigma_weight");
    return (w - copula.cond_cdf(alpha, u)) / (w - alpha);
}

double wsi(const QuantileFunction& q, const CopulaSpec& copula, int w, double alpha, const QuadratureConfig& quad) {
    check_arm(w);
    check_alpha(alpha, "wsi");
    const QuadratureRule rule = weight_rule(copula, alpha, quad);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double u = rule.nodes[i];
        sum += rule.weights[i] * guarded(q, u) * (w - copula.cond_cdf(alpha, u));
    }
    const double value = sum / (w - alpha);
    if (!std::isfinite(value)) throw numerical_error("wsi: non-finite integral");
    return value;
}

double avar(const QuantileFunction& q, double alpha, const QuadratureConfig& quad) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw config_error("avar: alpha must lie in [0,1)");
    const QuadratureRule rule = composite_rule(alpha, 1.0, {}, quad);
    return rule.integrate([&](double u) { return guarded(q, u); }) / (1.0 - alpha);
}

double worst_case_level(Bound bound, double rho_sx) { return bound == Bound::Upper ? 1.0 - rho_sx : rho_sx; }

double worst_case_wsi(const QuantileFunction& q, Bound bound, int w, double rho_sx, const QuadratureConfig& quad) {
    check_arm(w);
    check_alpha(rho_sx, "worst_case_wsi");
    const double cut = worst_case_level(bound, rho_sx);
    // Upper/w=1 and lower/w=0 take the tail above the cut, the others the part below.
    const bool above = (bound == Bound::Upper) == (w == 1);
    const double lo = above ? cut : 0.0;
    const double hi = above ? 1.0 : cut;
    const QuadratureRule rule = composite_rule(lo, hi, {}, quad);
    return rule.integrate([&](double u) { return guarded(q, u); }) / (hi - lo);
}

double dual_H(DualKind kind, double y, double s, double alpha) {
    check_alpha(alpha, "dual_H");
    if (kind == DualKind::U) return s + std::max(y - s, 0.0) / alpha;
    return s - std::max(s - y, 0.0) / alpha;
}

double worst_case_dual(Bound bound, int w, double y, double cutoff, double rho_sx) {
    check_arm(w);
    if (bound == Bound::Upper)
        return w == 1 ? dual_H(DualKind::U, y, cutoff, rho_sx) : dual_H(DualKind::L, y, cutoff, 1.0 - rho_sx);
    return w == 1 ? dual_H(DualKind::L, y, cutoff, rho_sx) : dual_H(DualKind::U, y, cutoff, 1.0 - rho_sx);
}

double h_dual_general(const CopulaSpec& copula, int w, double y, const QuantileFunction& q, double alpha,
                      const QuadratureConfig& quad) {
    return RowIntegrator(copula, alpha, q, quad).h_dual(w, y);
}

double d_weight(const CopulaSpec& copula, const QuantileFunction& q, double alpha, const QuadratureConfig& quad) {
    return RowIntegrator(copula, alpha, q, quad).d_weight();
}

double binary_worst_case_contrast(double mu, double rho_sx) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw config_error("binary_worst_case_contrast: mu must lie in [0,1]");
    check_alpha(rho_sx, "binary_worst_case_contrast");
    return std::min(mu / rho_sx, (1.0 - mu) / (1.0 - rho_sx));
}

RowIntegrator::RowIntegrator(const CopulaSpec& copula, double alpha, const QuantileFunction& q,
                             const QuadratureConfig& quad)
    : copula_(copula), alpha_(alpha) {
    check_alpha(alpha, "RowIntegrator");
    rule_ = weight_rule(copula, alpha, quad);
    const std::size_t n = rule_.size();
    q_.resize(n);
    cond_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        q_[i] = guarded(q, rule_.nodes[i]);
        cond_[i] = copula.cond_cdf(alpha, rule_.nodes[i]);
    }
    // monotone rearrangement; nodes are ascending
    std::sort(q_.begin(), q_.end());
    // trapezoid-Stieltjes weights: cell [u_i, u_{i+1}] splits its increment of
    // C(alpha|.) evenly between its nodes; the end cells go to the outer nodes.
    jumps_.assign(n, 0.0);
    double prev = copula.cond_cdf(alpha, rule_.nodes[0]);
    jumps_[0] = prev - copula.cond_cdf(alpha, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double next = copula.cond_cdf(alpha, rule_.nodes[i + 1]);
        jumps_[i] += 0.5 * (next - prev);
        jumps_[i + 1] += 0.5 * (next - prev);
        prev = next;
    }
    jumps_[n - 1] += copula.cond_cdf(alpha, 1.0) - prev;
    cond_at_0_ = copula.cond_cdf(alpha, 0.0);
    cond_at_1_ = copula.cond_cdf(alpha, 1.0);
}

double RowIntegrator::wsi(int w) const {
    check_arm(w);
    double sum = 0.0;
    for (std::size_t i = 0; i < q_.size(); ++i) sum += rule_.weights[i] * q_[i] * (w - cond_[i]);
    return sum / (w - alpha_);
}

double RowIntegrator::d_weight() const {
    if (!copula_.absolutely_continuous())
        throw config_error("d_weight: density undefined for " + copula_.describe());
    double sum = 0.0;
    for (std::size_t i = 0; i < q_.size(); ++i)
        sum += rule_.weights[i] * q_[i] * copula_.cond_pdf(alpha_, rule_.nodes[i]);
    return sum;
}

// The Stieltjes integrals against dsigma_w are taken as trapezoid sums over
// the cells between consecutive nodes, each cell carrying the exact increment
// of C(alpha|.) across it. Copulas such as Gaussian with small theta approach
// C(alpha|0) only at u far below double precision, so a density-based rule
// would miss part of the measure.
double RowIntegrator::h_dual(int w, double y) const {
    check_arm(w);
    if (!copula_.absolutely_continuous())
        throw config_error("h_dual_general: requires a smooth copula, got " + copula_.describe());
    double sum = 0.0;
    if (w == 1) {
        for (std::size_t i = 0; i < q_.size(); ++i) {
            const double u = rule_.nodes[i];
            sum += ((1.0 - u) * q_[i] + std::max(y - q_[i], 0.0)) * jumps_[i];
        }
        return ((1.0 - cond_at_0_) * y - sum) / (1.0 - alpha_);
    }
    for (std::size_t i = 0; i < q_.size(); ++i) {
        const double u = rule_.nodes[i];
        sum += (u * q_[i] - std::max(q_[i] - y, 0.0)) * jumps_[i];
    }
    return (cond_at_1_ * y - sum) / alpha_;
}

}  // namespace surrosens
