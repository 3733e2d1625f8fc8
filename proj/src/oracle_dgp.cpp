#include "surrosens/oracle_dgp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "surrosens/error.hpp"
#include "surrosens/numerics.hpp"

namespace surrosens {

namespace {

constexpr double kRangeMassSlack = 1e-4;

void check_rho(double rho) {
    if (!(rho > 0.0 && rho < 1.0)) throw config_error(fmt::format("rho must lie in (0,1), got {}", rho));
}

}  // namespace

double s_range_mass(double rho, double s_lo, double s_hi) {
    auto inside = [&](double x) {
        return (1.0 - rho) * (normal_cdf(s_hi - x) - normal_cdf(s_lo - x)) +
               rho * (normal_cdf(s_hi - x - 1.0) - normal_cdf(s_lo - x - 1.0));
    };
    return gauss_legendre(64, 0.0, 1.0).integrate(inside);
}

void validate(const DgpConfig& c) {
    check_rho(c.rho);
    if (c.n < 2) throw config_error("simulation needs n >= 2");
    if (!(c.experimental_share > 0.0 && c.experimental_share < 1.0))
        throw config_error("experimental_share must lie in (0,1)");
    if (!(c.outcome_sd >= 0.0) || !std::isfinite(c.outcome_sd)) throw config_error("outcome_sd must be >= 0");
    if (!std::isfinite(c.binary_threshold)) throw config_error("binary_threshold must be finite");
    if (!(c.s_lo < c.s_hi)) throw config_error("s range must satisfy s_lo < s_hi");
    const double mass = s_range_mass(c.rho, c.s_lo, c.s_hi);
    if (mass < 1.0 - kRangeMassSlack)
        throw config_error(fmt::format("s range [{}, {}] keeps only {:.6f} of the S mass", c.s_lo, c.s_hi, mass));
    const auto n_e = static_cast<std::size_t>(std::lround(c.experimental_share * static_cast<double>(c.n)));
    if (n_e == 0 || n_e == c.n) throw config_error("both samples need at least one row");
}

double true_surrogacy_score(double s, double x, double rho) {
    check_rho(rho);
    return 1.0 / (1.0 + ((1.0 - rho) / rho) * std::exp(-(s - x - 0.5)));
}

double joint_density(double s, double x, double rho) {
    if (x < 0.0 || x > 1.0) return 0.0;
    return (1.0 - rho) * normal_pdf(s - x) + rho * normal_pdf(s - x - 1.0);
}

double true_quantile(double u, double s, double x, double outcome_sd) {
    if (!(u > 0.0 && u < 1.0)) throw config_error("true_quantile: u must lie in (0,1)");
    const double centre = s + 0.5 * x;
    return outcome_sd == 0.0 ? centre : centre + outcome_sd * normal_quantile(u);
}

double oracle_ate(const CopulaSpec& copula, double rho, const OracleOptions& opts) {
    check_rho(rho);
    const double sd = opts.outcome_sd;
    auto integrand = [&](double s, double x) {
        const double f = joint_density(s, x, rho);
        if (f == 0.0) return 0.0;
        const double score = true_surrogacy_score(s, x, rho);
        const double mean = s + 0.5 * x;
        const double mu1 =
            wsi([&](double u) { return true_quantile(u, s, x, sd); }, copula, 1, 1.0 - score, opts.quad);
        return (score / (rho * (1.0 - rho)) * mu1 - mean / (1.0 - rho)) * f;
    };
    auto over_s = [&](double x) {
        return integrate_adaptive([&](double s) { return integrand(s, x); }, opts.s_lo, opts.s_hi, 1e-2 * opts.tol);
    };
    return integrate_adaptive(over_s, 0.0, 1.0, opts.tol);
}

std::vector<OracleCurvePoint> oracle_curve(CopulaFamily family, const std::vector<double>& tau_grid, double rho,
                                           const OracleOptions& opts) {
    check_rho(rho);
    const TauRange range = tau_range(family);
    for (double t : tau_grid)
        if (!range.contains(t))
            throw config_error(fmt::format("kendall tau {} is outside the {} range", t, family_name(family)));
    std::vector<OracleCurvePoint> out(tau_grid.size());
    parallel_for(tau_grid.size(), [&](std::size_t i) {
        out[i] = {tau_grid[i], oracle_ate(CopulaSpec::from_kendall_tau(family, tau_grid[i]), rho, opts)};
    });
    return out;
}

double sign_change_threshold(CopulaFamily family, double rho, double lo, double hi, double tau_tol,
                             const OracleOptions& opts) {
    auto ate = [&](double t) { return oracle_ate(CopulaSpec::from_kendall_tau(family, t), rho, opts); };
    return find_root(ate, lo, hi, tau_tol);
}

LatentSample simulate_latent(const DgpConfig& c) {
    validate(c);
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto open_unif = [&] {
        double u = 0.0;
        while (u <= 0.0 || u >= 1.0) u = unif(rng);
        return u;
    };

    const std::size_t n = c.n;
    const auto n_e = static_cast<std::size_t>(std::lround(c.experimental_share * static_cast<double>(n)));
    LatentSample out;
    out.extra_s.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c.extra_surrogates));
    out.extra_x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c.extra_covariates));
    for (std::size_t i = 0; i < n; ++i) {
        const double x = unif(rng);
        const int w_marginal = unif(rng) < c.rho ? 1 : 0;
        const double eta_s = gauss(rng);
        const double e_draw = open_unif();
        const double t_draw = open_unif();

        double s = 0.0;
        double eps = 0.0;
        int w = 0;
        if (c.one_draw) {
            s = x + w_marginal + eta_s;
            const double cut = 1.0 - true_surrogacy_score(s, x, c.rho);
            w = w_marginal;
            eps = w ? cut + (1.0 - cut) * e_draw : cut * e_draw;
        } else {
            s = x + w_marginal + eta_s;
            eps = e_draw;
            w = eps > 1.0 - true_surrogacy_score(s, x, c.rho) ? 1 : 0;
        }
        const double rank = std::clamp(c.copula.cond_quantile(t_draw, eps), 1e-300, 1.0 - 1e-16);
        const double eta_y = c.outcome_sd == 0.0 ? 0.0 : normal_quantile(rank);
        double y = s + 0.5 * x + c.outcome_sd * eta_y;
        if (c.binary_outcome) y = y > c.binary_threshold ? 1.0 : 0.0;

        out.sample.push_back(i < n_e ? SampleTag::Experimental : SampleTag::Observational);
        out.x.push_back(x);
        out.s.push_back(s);
        out.w_marginal.push_back(w_marginal);
        out.w.push_back(w);
        out.eps.push_back(eps);
        out.outcome_rank.push_back(rank);
        out.y.push_back(y);
        const auto r = static_cast<Eigen::Index>(i);
        for (Eigen::Index j = 0; j < out.extra_s.cols(); ++j) out.extra_s(r, j) = gauss(rng);
        for (Eigen::Index j = 0; j < out.extra_x.cols(); ++j) out.extra_x(r, j) = unif(rng);
    }
    return out;
}

CombinedDataset simulate(const DgpConfig& c) {
    const LatentSample lat = simulate_latent(c);
    const std::size_t n = lat.sample.size();
    CombinedDataset d;
    const std::size_t k = 1 + c.extra_surrogates;
    const std::size_t m = 1 + c.extra_covariates;
    for (std::size_t j = 1; j <= k; ++j) d.s_names.push_back(fmt::format("s{}", j));
    for (std::size_t j = 1; j <= m; ++j) d.x_names.push_back(fmt::format("x{}", j));
    d.s.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const bool exp_row = lat.sample[i] == SampleTag::Experimental;
        d.sample.push_back(lat.sample[i]);
        d.w.push_back(exp_row ? lat.w[i] : -1);
        d.y.push_back(exp_row ? std::numeric_limits<double>::quiet_NaN() : lat.y[i]);
        d.s(r, 0) = lat.s[i];
        d.x(r, 0) = lat.x[i];
        if (k > 1) d.s.row(r).tail(static_cast<Eigen::Index>(k - 1)) = lat.extra_s.row(r);
        if (m > 1) d.x.row(r).tail(static_cast<Eigen::Index>(m - 1)) = lat.extra_x.row(r);
    }
    validate(d);
    return d;
}

DgpOracle::DgpOracle(const DgpConfig& config, QuadratureConfig quad) : config_(config), quad_(quad) {
    check_rho(config.rho);
}

double DgpOracle::propensity_x(double) const { return config_.rho; }

double DgpOracle::surrogacy(double s, double x) const { return true_surrogacy_score(s, x, config_.rho); }

double DgpOracle::selection(double, double) const { return phi(); }

double DgpOracle::phi() const {
    const auto n_e = std::lround(config_.experimental_share * static_cast<double>(config_.n));
    return static_cast<double>(n_e) / static_cast<double>(config_.n);
}

double DgpOracle::outcome_mean(double s, double x) const {
    const double centre = s + 0.5 * x;
    if (!config_.binary_outcome) return centre;
    if (config_.outcome_sd == 0.0) return centre > config_.binary_threshold ? 1.0 : 0.0;
    return normal_cdf((centre - config_.binary_threshold) / config_.outcome_sd);
}

double DgpOracle::quantile(double u, double s, double x) const {
    if (!config_.binary_outcome) return true_quantile(u, s, x, config_.outcome_sd);
    return u > 1.0 - outcome_mean(s, x) ? 1.0 : 0.0;
}

double DgpOracle::cutoff(Bound bound, double s, double x) const {
    return quantile(worst_case_level(bound, surrogacy(s, x)), s, x);
}

double DgpOracle::wsi_bound(Bound bound, int w, double s, double x) const {
    if (w != 0 && w != 1) throw config_error("treatment arm must be 0 or 1");
    const double r = surrogacy(s, x);
    if (config_.binary_outcome) {
        const double mu = outcome_mean(s, x);
        if (bound == Bound::Upper)
            return w == 1 ? std::min(mu, r) / r : std::max(0.0, mu - r) / (1.0 - r);
        return w == 1 ? std::max(0.0, r - (1.0 - mu)) / r : (1.0 - std::max(r, 1.0 - mu)) / (1.0 - r);
    }
    const double centre = s + 0.5 * x;
    const double tail = config_.outcome_sd * normal_pdf(normal_quantile(worst_case_level(bound, r)));
    const double sign = (bound == Bound::Upper) == (w == 1) ? 1.0 : -1.0;
    return centre + sign * tail / (w == 1 ? r : 1.0 - r);
}

double DgpOracle::wsi_copula(const CopulaSpec& copula, int w, double s, double x) const {
    return wsi([&](double u) { return quantile(u, s, x); }, copula, w, 1.0 - surrogacy(s, x), quad_);
}

double DgpOracle::d_weight(const CopulaSpec& copula, double s, double x) const {
    return surrosens::d_weight(copula, [&](double u) { return quantile(u, s, x); }, 1.0 - surrogacy(s, x), quad_);
}

template <class F>
double DgpOracle::average_over_s(int w, double x, F&& f) const {
    static const QuadratureRule rule = gauss_legendre(96, -8.5, 8.5);
    return rule.integrate([&](double z) { return normal_pdf(z) * f(x + w + z); });
}

double DgpOracle::cond_mean_bound(Bound bound, int w, double x) const {
    return average_over_s(w, x, [&](double s) { return wsi_bound(bound, w, s, x); });
}

double DgpOracle::cond_mean_copula(const CopulaSpec& copula, int w, double x) const {
    return average_over_s(w, x, [&](double s) { return wsi_copula(copula, w, s, x); });
}

}  // namespace surrosens
