#include "surrosens/dml.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "surrosens/error.hpp"
#include "surrosens/io.hpp"
#include "surrosens/numerics.hpp"

namespace surrosens {

namespace {

void require_finite(double v, const char* field) {
    if (!std::isfinite(v)) throw config_error(fmt::format("missing nuisance field '{}'", field));
}

void check_common(const MomentRow& row) {
    require_finite(row.phi, "phi");
    if (row.phi <= 0.0) throw config_error("missing nuisance field 'phi'");
    if (row.experimental) {
        if (row.w != 0 && row.w != 1) throw config_error("missing nuisance field 'w'");
        require_finite(row.rho_x, "rho_x");
        require_finite(row.rho_sx, "rho_sx");
        require_finite(row.cutoff, "cutoff");
        require_finite(row.mu1, "mu1");
        require_finite(row.mu0, "mu0");
        require_finite(row.mubar1, "mubar1");
        require_finite(row.mubar0, "mubar0");
    } else {
        require_finite(row.y, "y");
        require_finite(row.rho_x, "rho_x");
        require_finite(row.rho_sx, "rho_sx");
        require_finite(row.phi_sx, "phi_sx");
        require_finite(row.mu1, "mu1");
        require_finite(row.mu0, "mu0");
    }
}

std::size_t idx(MomentTerm t) { return static_cast<std::size_t>(t); }

// Shared arithmetic; h1/h0 are the observational dual values.
MomentEvaluation assemble(const MomentRow& row, double tau, double h1, double h0) {
    MomentEvaluation out;
    const double inv_phi = 1.0 / row.phi;
    if (row.experimental) {
        const double w = static_cast<double>(row.w);
        out.terms[idx(MomentTerm::Arm1Residual)] = inv_phi * w / row.rho_x * (row.mu1 - row.mubar1);
        out.terms[idx(MomentTerm::Arm0Residual)] =
            -inv_phi * (1.0 - w) / (1.0 - row.rho_x) * (row.mu0 - row.mubar0);
        out.terms[idx(MomentTerm::XLevel)] = inv_phi * (row.mubar1 - row.mubar0 - tau);
        out.terms[idx(MomentTerm::Correction1)] =
            inv_phi / row.rho_x * (row.cutoff - row.mu1) * (w - row.rho_sx);
        out.terms[idx(MomentTerm::Correction0)] =
            inv_phi / (1.0 - row.rho_x) * (row.cutoff - row.mu0) * (w - row.rho_sx);
        out.slope = inv_phi;
    } else {
        const double odds = row.phi_sx / (1.0 - row.phi_sx);
        out.terms[idx(MomentTerm::ObservationalDual)] =
            inv_phi * odds *
            (row.rho_sx / row.rho_x * (h1 - row.mu1) - (1.0 - row.rho_sx) / (1.0 - row.rho_x) * (h0 - row.mu0));
    }
    for (double t : out.terms) out.value += t;
    return out;
}

bool is_bound_pair(std::span<const NuisanceTarget> targets, std::size_t& lower, std::size_t& upper) {
    if (targets.size() != 2 || !targets[0].bound || !targets[1].bound) return false;
    if (*targets[0].bound == *targets[1].bound) return false;
    lower = *targets[0].bound == Bound::Lower ? 0 : 1;
    upper = 1 - lower;
    return true;
}

void check_level(double level) {
    if (!(level > 0.0 && level < 1.0)) throw config_error(fmt::format("level must lie in (0, 1), got {}", level));
}

SensitivityPoint point_at(const NuisanceBase& base, CopulaFamily family, double tau_k, double level) {
    const CopulaSpec spec = CopulaSpec::from_kendall_tau(family, tau_k);
    const NuisanceTarget target = NuisanceTarget::smooth(spec);
    const NuisanceTarget targets[] = {target};
    const EstimateReport rep = estimate_from_bundle(base.data(), base.bundle(targets), targets, level);
    return {tau_k, spec.theta(), rep.tau_hat[0], rep.se[0], rep.ci[0]};
}

}  // namespace

std::vector<MomentRow> moment_rows(const CombinedDataset& data, const NuisanceBundle& bundle,
                                   const NuisanceTarget& target) {
    if (bundle.rows() != data.rows())
        throw data_error(fmt::format("bundle has {} rows, dataset {}", bundle.rows(), data.rows()));
    const TargetRows& t = bundle.at(target);
    std::vector<MomentRow> rows(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        MomentRow& r = rows[i];
        r.experimental = data.experimental(i);
        r.w = data.w[i];
        r.y = data.y[i];
        r.rho_x = bundle.rho_x[i];
        r.rho_sx = bundle.rho_sx[i];
        r.phi_sx = bundle.phi_sx[i];
        r.phi = bundle.phi[i];
        r.cutoff = t.cutoff[i];
        r.mu1 = t.mu1[i];
        r.mu0 = t.mu0[i];
        r.mubar1 = t.mubar1[i];
        r.mubar0 = t.mubar0[i];
        r.dual1 = t.dual1[i];
        r.dual0 = t.dual0[i];
    }
    return rows;
}

std::string_view term_name(MomentTerm term) {
    switch (term) {
        case MomentTerm::Arm1Residual: return "arm1_residual";
        case MomentTerm::Arm0Residual: return "arm0_residual";
        case MomentTerm::XLevel: return "x_level";
        case MomentTerm::ObservationalDual: return "observational_dual";
        case MomentTerm::Correction1: return "correction1";
        case MomentTerm::Correction0: return "correction0";
    }
    return "unknown";
}

MomentEvaluation moment_worst_case(const MomentRow& row, double tau, Bound bound) {
    check_common(row);
    if (row.experimental) return assemble(row, tau, 0.0, 0.0);
    require_finite(row.cutoff, "cutoff");
    const double h1 = worst_case_dual(bound, 1, row.y, row.cutoff, row.rho_sx);
    const double h0 = worst_case_dual(bound, 0, row.y, row.cutoff, row.rho_sx);
    return assemble(row, tau, h1, h0);
}

MomentEvaluation moment_general(const MomentRow& row, double tau, const CopulaSpec& copula) {
    if (!copula.absolutely_continuous())
        throw config_error(fmt::format("{} has no density; use the worst-case moment", copula.describe()));
    check_common(row);
    if (row.experimental) return assemble(row, tau, 0.0, 0.0);
    require_finite(row.dual1, "dual1");
    require_finite(row.dual0, "dual0");
    return assemble(row, tau, row.dual1, row.dual0);
}

MomentEvaluation evaluate_moment(const MomentRow& row, double tau, const NuisanceTarget& target) {
    if (target.bound) return moment_worst_case(row, tau, *target.bound);
    return moment_general(row, tau, target.copula);
}

double solve_tau(std::span<const MomentRow> rows, const NuisanceTarget& target) {
    double num = 0.0;
    double den = 0.0;
    for (const MomentRow& r : rows) {
        const MomentEvaluation m = evaluate_moment(r, 0.0, target);
        num += m.value;
        den += m.slope;
    }
    if (!(den > 0.0)) throw data_error("zero total moment slope: no experimental rows");
    return num / den;
}

Eigen::MatrixXd fold_covariance(const Eigen::MatrixXd& gamma, const FoldAssignment& folds) {
    if (static_cast<std::size_t>(gamma.rows()) != folds.fold_of_row.size())
        throw data_error("moment matrix and fold assignment disagree on the row count");
    const Eigen::Index J = gamma.cols();
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(J, J);
    for (int k = 0; k < folds.K; ++k) {
        const std::vector<std::size_t> rows = folds.members(k);
        if (rows.size() < 2) throw data_error(fmt::format("fold {} has fewer than 2 rows", k));
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(J, J);
        for (std::size_t i : rows) {
            const Eigen::RowVectorXd g = gamma.row(static_cast<Eigen::Index>(i));
            acc.noalias() += g.transpose() * g;
        }
        V += acc / static_cast<double>(rows.size());
    }
    V /= static_cast<double>(folds.K);
    return 0.5 * (V + V.transpose());
}

Interval wald_ci(double tau_hat, double se, double level) {
    check_level(level);
    if (!(se >= 0.0)) throw config_error("standard error must be non-negative");
    const double z = normal_quantile(0.5 * (1.0 + level));
    return {tau_hat - z * se, tau_hat + z * se};
}

double imbens_manski_critical_value(double delta, double se_max, double level) {
    check_level(level);
    const double z = normal_quantile(0.5 * (1.0 + level));
    delta = std::max(delta, 0.0);
    if (delta == 0.0) return z;
    if (!(se_max > 0.0)) return 0.0;
    const double r = delta / se_max;
    const auto f = [&](double c) { return normal_cdf(c + r) - normal_cdf(-c) - level; };
    if (f(0.0) >= 0.0) return 0.0;
    if (f(z) <= 0.0) return z;
    return find_root(f, 0.0, z);
}

Interval interval_identified_ci(double tau_l, double tau_u, double se_l, double se_u, double level) {
    check_level(level);
    if (!(se_l >= 0.0) || !(se_u >= 0.0)) throw config_error("standard errors must be non-negative");
    const double se_max = std::max(se_l, se_u);
    const double c = imbens_manski_critical_value(tau_u - tau_l, se_max, level);
    const double lo = tau_l - c * se_l;
    const double hi = tau_u + c * se_u;
    return {std::min(lo, hi), std::max(lo, hi)};
}

EstimateReport estimate_from_bundle(const CombinedDataset& data, const NuisanceBundle& bundle,
                                    std::span<const NuisanceTarget> targets, double level) {
    check_level(level);
    if (targets.empty()) throw config_error("no estimation targets");
    const std::size_t n = data.rows();
    const std::size_t J = targets.size();
    EstimateReport rep;
    rep.n = n;
    rep.folds = bundle.folds.K;
    rep.level = level;
    Eigen::MatrixXd gamma(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(J));
    for (std::size_t j = 0; j < J; ++j) {
        const std::vector<MomentRow> rows = moment_rows(data, bundle, targets[j]);
        const double tau = solve_tau(rows, targets[j]);
        for (std::size_t i = 0; i < n; ++i)
            gamma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                evaluate_moment(rows[i], tau, targets[j]).value;
        rep.labels.push_back(targets[j].label());
        rep.tau_hat.push_back(tau);
    }
    rep.covariance = fold_covariance(gamma, bundle.folds);
    if (n < 2) throw data_error("need at least 2 rows");
    for (std::size_t j = 0; j < J; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double se = std::sqrt(std::max(rep.covariance(jj, jj), 0.0) / static_cast<double>(n - 1));
        rep.se.push_back(se);
        rep.ci.push_back(wald_ci(rep.tau_hat[j], se, level));
    }
    std::size_t lo = 0;
    std::size_t up = 0;
    if (is_bound_pair(targets, lo, up)) {
        rep.crossing = rep.tau_hat[lo] > rep.tau_hat[up];
        rep.identified_ci = interval_identified_ci(rep.tau_hat[lo], rep.tau_hat[up], rep.se[lo], rep.se[up], level);
        const auto l = static_cast<Eigen::Index>(lo);
        const auto u = static_cast<Eigen::Index>(up);
        const double denom = std::sqrt(rep.covariance(l, l) * rep.covariance(u, u));
        if (denom > 0.0) rep.correlation = std::clamp(rep.covariance(l, u) / denom, -1.0, 1.0);
    }
    return rep;
}

EstimateReport estimate_bounds(const NuisanceBase& base, double level) {
    const NuisanceTarget targets[] = {NuisanceTarget::lower(), NuisanceTarget::upper()};
    return estimate_from_bundle(base.data(), base.bundle(targets), targets, level);
}

EstimateReport estimate_bounds(const CombinedDataset& data, const EstimationConfig& cfg) {
    const NuisanceBase base =
        NuisanceBase::fit(data, partition_folds(data.rows(), cfg.folds, cfg.seed), cfg.learners, cfg.seed);
    EstimateReport rep = estimate_bounds(base, cfg.level);
    rep.seed = cfg.seed;
    rep.config_digest = cfg.config_digest;
    return rep;
}

EstimateReport estimate_general(const NuisanceBase& base, const CopulaSpec& copula, double level) {
    const NuisanceTarget targets[] = {NuisanceTarget::smooth(copula)};
    return estimate_from_bundle(base.data(), base.bundle(targets), targets, level);
}

EstimateReport estimate_general(const CombinedDataset& data, const CopulaSpec& copula,
                                const EstimationConfig& cfg) {
    static_cast<void>(NuisanceTarget::smooth(copula));
    const NuisanceBase base =
        NuisanceBase::fit(data, partition_folds(data.rows(), cfg.folds, cfg.seed), cfg.learners, cfg.seed);
    EstimateReport rep = estimate_general(base, copula, cfg.level);
    rep.seed = cfg.seed;
    rep.config_digest = cfg.config_digest;
    return rep;
}

SensitivityCurve sensitivity_analysis(const NuisanceBase& base, CopulaFamily family, std::span<const double> tau_grid,
                                      double level, bool with_worst_case) {
    check_level(level);
    if (!is_parametric(family))
        throw config_error(fmt::format("{} is not a parametric family", family_name(family)));
    if (tau_grid.empty()) throw config_error("empty Kendall's tau grid");
    const TauRange range = tau_range(family);
    std::vector<double> grid(tau_grid.begin(), tau_grid.end());
    for (double t : grid)
        if (!(std::abs(t) < 1e-6) && !range.contains(t))
            throw config_error(fmt::format("Kendall's tau {} outside the {} range", t, family_name(family)));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    SensitivityCurve curve;
    curve.family = family;
    curve.points.resize(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) { curve.points[i] = point_at(base, family, grid[i], level); });

    const auto zero = std::find_if(curve.points.begin(), curve.points.end(),
                                   [](const SensitivityPoint& p) { return std::abs(p.tau_k) < 1e-6; });
    const SensitivityPoint at_zero = zero != curve.points.end() ? *zero : point_at(base, family, 0.0, level);
    if (!at_zero.ci.excludes_zero()) {
        double lo = 0.0;
        std::optional<double> hi;
        for (const SensitivityPoint& p : curve.points) {
            if (p.tau_k <= 1e-6) continue;
            if (p.ci.excludes_zero()) {
                hi = p.tau_k;
                break;
            }
            lo = p.tau_k;
        }
        if (hi) {
            double b = *hi;
            while (b - lo > kBreakpointTolerance) {
                const double mid = 0.5 * (lo + b);
                const SensitivityPoint p = point_at(base, family, mid, level);
                curve.refinement.push_back(p);
                if (p.ci.excludes_zero())
                    b = mid;
                else
                    lo = mid;
            }
            curve.breakpoint = b;
        }
    }
    if (with_worst_case) curve.worst_case = estimate_bounds(base, level);
    return curve;
}

SensitivityCurve sensitivity_analysis(const CombinedDataset& data, CopulaFamily family,
                                      std::span<const double> tau_grid, const EstimationConfig& cfg) {
    const NuisanceBase base =
        NuisanceBase::fit(data, partition_folds(data.rows(), cfg.folds, cfg.seed), cfg.learners, cfg.seed);
    SensitivityCurve curve = sensitivity_analysis(base, family, tau_grid, cfg.level, true);
    if (curve.worst_case) {
        curve.worst_case->seed = cfg.seed;
        curve.worst_case->config_digest = cfg.config_digest;
    }
    return curve;
}

namespace {

nlohmann::json interval_json(const Interval& ci) { return {{"lo", ci.lo}, {"hi", ci.hi}}; }

}  // namespace

nlohmann::json to_json(const EstimateReport& report) {
    nlohmann::json j;
    j["labels"] = report.labels;
    j["tau_hat"] = report.tau_hat;
    j["se"] = report.se;
    nlohmann::json cov = nlohmann::json::array();
    for (Eigen::Index r = 0; r < report.covariance.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < report.covariance.cols(); ++c) row.push_back(report.covariance(r, c));
        cov.push_back(row);
    }
    j["covariance"] = cov;
    nlohmann::json cis = nlohmann::json::array();
    for (const Interval& ci : report.ci) cis.push_back(interval_json(ci));
    j["ci"] = cis;
    j["identified_ci"] = report.identified_ci ? interval_json(*report.identified_ci) : nlohmann::json(nullptr);
    j["correlation"] = report.correlation ? nlohmann::json(*report.correlation) : nlohmann::json(nullptr);
    j["crossing"] = report.crossing;
    j["n"] = report.n;
    j["folds"] = report.folds;
    j["seed"] = report.seed;
    j["level"] = report.level;
    j["config_digest"] = report.config_digest;
    return j;
}

nlohmann::json to_json(const SensitivityCurve& curve) {
    const auto point_json = [](const SensitivityPoint& p) {
        return nlohmann::json{{"tau_k", p.tau_k}, {"theta", p.theta},   {"tau_hat", p.tau_hat},
                              {"se", p.se},       {"ci_lo", p.ci.lo},   {"ci_hi", p.ci.hi}};
    };
    nlohmann::json j;
    j["family"] = std::string(family_name(curve.family));
    j["points"] = nlohmann::json::array();
    for (const SensitivityPoint& p : curve.points) j["points"].push_back(point_json(p));
    j["breakpoint"] = curve.breakpoint ? nlohmann::json(*curve.breakpoint) : nlohmann::json(nullptr);
    j["refinement"] = nlohmann::json::array();
    for (const SensitivityPoint& p : curve.refinement) j["refinement"].push_back(point_json(p));
    j["worst_case"] = curve.worst_case ? to_json(*curve.worst_case) : nlohmann::json(nullptr);
    return j;
}

std::string curve_to_csv(const SensitivityCurve& curve) {
    std::string out = "tau_k,tau_hat,se,ci_lo,ci_hi\n";
    for (const SensitivityPoint& p : curve.points)
        out += fmt::format("{},{},{},{},{}\n", format_double(p.tau_k), format_double(p.tau_hat), format_double(p.se),
                           format_double(p.ci.lo), format_double(p.ci.hi));
    return out;
}

}  // namespace surrosens
