#include "surrosens/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <fmt/format.h>

#include "surrosens/error.hpp"
#include "surrosens/io.hpp"
#include "surrosens/numerics.hpp"
#include "surrosens/oracle_dgp.hpp"

namespace surrosens {

namespace {

enum Stream : std::uint64_t { kPropensity = 1, kSurrogacy, kSelection, kQuantile, kMeanBase = 16 };

Matrix features_sx(const CombinedDataset& data, const std::vector<std::size_t>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), data.s.cols() + data.x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto i = static_cast<Eigen::Index>(rows[r]);
        out.row(static_cast<Eigen::Index>(r)) << data.s.row(i), data.x.row(i);
    }
    return out;
}

Matrix features_x(const CombinedDataset& data, const std::vector<std::size_t>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), data.x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
        out.row(static_cast<Eigen::Index>(r)) = data.x.row(static_cast<Eigen::Index>(rows[r]));
    return out;
}

Eigen::RowVectorXd row_sx(const CombinedDataset& data, std::size_t row) {
    Eigen::RowVectorXd z(data.s.cols() + data.x.cols());
    z << data.s.row(static_cast<Eigen::Index>(row)), data.x.row(static_cast<Eigen::Index>(row));
    return z;
}

// Rethrows a learner failure with the fold id prepended.
template <class F>
void annotate_fold(int k, F&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        throw Error(e.kind(), fmt::format("fold {}: {}", k, e.what()));
    }
}

std::uint64_t target_stream(const NuisanceTarget& target) {
    return kMeanBase + (fnv1a(target.label()) & 0xffffu);
}

}  // namespace

// ------------------------------------------------------------------ folds

std::vector<std::size_t> FoldAssignment::members(int k) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of_row.size(); ++i)
        if (fold_of_row[i] == k) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldAssignment::complement(int k) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of_row.size(); ++i)
        if (fold_of_row[i] != k) out.push_back(i);
    return out;
}

FoldAssignment partition_folds(std::size_t n, int K, std::uint64_t seed) {
    if (K < 2 || static_cast<std::size_t>(K) > n)
        throw config_error(fmt::format("folds: need 2 <= K <= n, got K={} with n={}", K, n));
    return {random_folds(n, K, seed), K};
}

double estimate_phi(const FoldAssignment& folds, const std::vector<SampleTag>& sample, int k) {
    if (k < 0 || k >= folds.K) throw config_error(fmt::format("fold {} out of range", k));
    std::size_t out = 0;
    std::size_t exp = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        if (folds.fold_of_row[i] == k) continue;
        ++out;
        if (sample[i] == SampleTag::Experimental) ++exp;
    }
    if (out == 0) throw data_error(fmt::format("fold {} has an empty complement", k));
    const double n = static_cast<double>(sample.size());
    return folds.K * static_cast<double>(exp) / (n * (folds.K - 1));
}

std::uint64_t child_seed(std::uint64_t master, std::uint64_t fold, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(fold), static_cast<std::uint32_t>(stream)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// ------------------------------------------------------------ probabilities

std::string_view target_name(ProbabilityTarget target) {
    switch (target) {
        case ProbabilityTarget::PropensityX: return "propensity_x";
        case ProbabilityTarget::SurrogacySX: return "surrogacy_sx";
        case ProbabilityTarget::SelectionSX: return "selection_sx";
    }
    return "?";
}

double ProbabilityModel::predict(const CombinedDataset& data, std::size_t row) const {
    return predict(data.s.row(static_cast<Eigen::Index>(row)), data.x.row(static_cast<Eigen::Index>(row)));
}

double ProbabilityModel::predict(const Eigen::RowVectorXd& s, const Eigen::RowVectorXd& x) const {
    double p = 0.0;
    if (target_ == ProbabilityTarget::PropensityX) {
        p = model_.predict(x);
    } else {
        Eigen::RowVectorXd z(s.size() + x.size());
        z << s, x;
        p = model_.predict(z);
    }
    return std::clamp(p, clip_, 1.0 - clip_);
}

ProbabilityModel fit_probability(const CombinedDataset& data, const std::vector<std::size_t>& rows,
                                 ProbabilityTarget target, const LearnerConfig& cfg, std::uint64_t seed) {
    std::vector<std::size_t> use;
    Vector label;
    if (target == ProbabilityTarget::SelectionSX) {
        use = rows;
        label.resize(static_cast<Eigen::Index>(use.size()));
        for (std::size_t r = 0; r < use.size(); ++r) label(static_cast<Eigen::Index>(r)) = data.experimental(use[r]) ? 1.0 : 0.0;
    } else {
        for (std::size_t i : rows)
            if (data.experimental(i)) use.push_back(i);
        label.resize(static_cast<Eigen::Index>(use.size()));
        for (std::size_t r = 0; r < use.size(); ++r) label(static_cast<Eigen::Index>(r)) = data.w[use[r]];
    }
    if (use.size() < 2) throw data_error(fmt::format("{}: fewer than two training rows", target_name(target)));
    const Matrix X = target == ProbabilityTarget::PropensityX ? features_x(data, use) : features_sx(data, use);
    LassoConfig lc = cfg.lasso;
    lc.seed = seed;
    try {
        return {target, LassoLogistic::fit(X, label, lc), cfg.clip};
    } catch (const Error& e) {
        throw Error(e.kind(), fmt::format("{}: {}", target_name(target), e.what()));
    }
}

// ---------------------------------------------------------------- quantiles

WeightedDistribution ConditionalQuantileModel::distribution(const CombinedDataset& data, std::size_t row) const {
    return model_->predict(row_sx(data, row));
}

WeightedDistribution ConditionalQuantileModel::training_distribution(std::size_t j) const {
    return model_->predict_training(j);
}

double ConditionalQuantileModel::predict(double u, const Eigen::RowVectorXd& s, const Eigen::RowVectorXd& x) const {
    Eigen::RowVectorXd z(s.size() + x.size());
    z << s, x;
    return model_->predict(z).quantile(u);
}

namespace {

std::size_t sieve_terms(Eigen::Index p, int degree) {
    const auto q = static_cast<std::size_t>(p);
    return degree == 1 ? q + 1 : 1 + q + q * (q + 1) / 2;
}

}  // namespace

ConditionalQuantileModel fit_cond_quantile(const CombinedDataset& data, const std::vector<std::size_t>& obs_rows,
                                           const LearnerConfig& cfg, std::uint64_t seed) {
    Vector y(static_cast<Eigen::Index>(obs_rows.size()));
    for (std::size_t r = 0; r < obs_rows.size(); ++r) {
        const std::size_t i = obs_rows[r];
        if (data.experimental(i) || !std::isfinite(data.y[i]))
            throw data_error(fmt::format("conditional quantile: row {} has no observed outcome", i + 1));
        y(static_cast<Eigen::Index>(r)) = data.y[i];
    }
    const Matrix X = features_sx(data, obs_rows);
    const bool binary = std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0 || v == 1.0; });
    std::optional<PolynomialSieve> location;
    Vector target = y;
    Vector train_location;
    if (cfg.detrend_quantiles && !binary && static_cast<std::size_t>(X.rows()) > sieve_terms(X.cols(), cfg.sieve_degree)) {
        try {
            location = PolynomialSieve::fit(X, y, cfg.sieve_degree);
            train_location = location->predict_rows(X);
            target = y - train_location;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Numerical) throw;
        }
    }
    std::shared_ptr<const ConditionalDistributionModel> model;
    if (cfg.quantile == QuantileLearner::Forest) {
        ForestConfig fc = cfg.forest;
        fc.seed = seed;
        model = QuantileForest::fit(X, target, fc);
    } else {
        model = KnnQuantile::fit(X, target, cfg.knn);
    }
    if (location)
        model = std::make_shared<LocationShiftModel>(std::move(*location), std::move(train_location), std::move(model));
    return {std::move(model), obs_rows};
}

// ------------------------------------------------------------ WSI regressions

NuisanceTarget NuisanceTarget::upper() { return {Bound::Upper, CopulaSpec::frechet_upper()}; }
NuisanceTarget NuisanceTarget::lower() { return {Bound::Lower, CopulaSpec::frechet_lower()}; }

NuisanceTarget NuisanceTarget::smooth(const CopulaSpec& copula) {
    if (!copula.absolutely_continuous())
        throw config_error(fmt::format("{} has no density; use the worst-case bounds", copula.describe()));
    return {std::nullopt, copula};
}

std::string NuisanceTarget::label() const {
    if (bound) return *bound == Bound::Upper ? "upper" : "lower";
    if (!is_parametric(copula.family())) return std::string(family_name(copula.family()));
    return fmt::format("{}(theta={})", family_name(copula.family()), format_double(copula.theta()));
}

double worst_case_cutoff(Bound bound, const WeightedDistribution& dist, double rho_sx, bool binary) {
    if (binary) {
        const double mu = dist.mean();
        return bound == Bound::Upper ? (mu > rho_sx ? 1.0 : 0.0) : (mu > 1.0 - rho_sx ? 1.0 : 0.0);
    }
    return dist.quantile(worst_case_level(bound, rho_sx));
}

std::array<Vector, 2> wsi_pseudo_outcomes(const CombinedDataset& data, const std::vector<std::size_t>& obs_rows,
                                          const NuisanceTarget& target, const std::vector<double>& rho_sx,
                                          const std::vector<WeightedDistribution>& dist, bool binary,
                                          const QuadratureConfig& quad) {
    const auto n = static_cast<Eigen::Index>(obs_rows.size());
    std::array<Vector, 2> out{Vector(n), Vector(n)};
    const bool independence = !target.worst_case() && target.copula.family() == CopulaFamily::Independence;
    for (std::size_t r = 0; r < obs_rows.size(); ++r) {
        const double y = data.y[obs_rows[r]];
        const double rho = rho_sx[r];
        const auto e = static_cast<Eigen::Index>(r);
        if (independence) {
            out[0](e) = out[1](e) = y;
        } else if (target.worst_case()) {
            const double q = worst_case_cutoff(*target.bound, dist[r], rho, binary);
            for (int w : {0, 1}) out[static_cast<std::size_t>(w)](e) = worst_case_dual(*target.bound, w, y, q, rho);
        } else {
            const WeightedDistribution& d = dist[r];
            const RowIntegrator integ(target.copula, 1.0 - rho, [&d](double u) { return d.quantile(u); }, quad);
            for (int w : {0, 1}) out[static_cast<std::size_t>(w)](e) = integ.h_dual(w, y);
        }
    }
    return out;
}

PolynomialSieve fit_wsi_regression(const CombinedDataset& data, const std::vector<std::size_t>& obs_rows,
                                   const NuisanceTarget& target, int w, const ProbabilityModel& surrogacy,
                                   const ConditionalQuantileModel& quantile, const LearnerConfig& cfg) {
    if (obs_rows != quantile.training_rows())
        throw config_error("WSI regression rows must match the quantile model's training rows");
    std::vector<double> rho(obs_rows.size());
    std::vector<WeightedDistribution> dist;
    dist.reserve(obs_rows.size());
    for (std::size_t r = 0; r < obs_rows.size(); ++r) {
        rho[r] = surrogacy.predict(data, obs_rows[r]);
        dist.push_back(quantile.training_distribution(r));
    }
    const auto pseudo = wsi_pseudo_outcomes(data, obs_rows, target, rho, dist, data.binary_outcome(), cfg.quad);
    return PolynomialSieve::fit(features_sx(data, obs_rows), pseudo[static_cast<std::size_t>(w)], cfg.sieve_degree);
}

LassoLinear fit_cond_mean(const CombinedDataset& data, const std::vector<std::size_t>& exp_rows,
                          const Vector& pseudo_values, const LearnerConfig& cfg, std::uint64_t seed) {
    if (exp_rows.empty()) throw data_error("conditional mean: empty treatment arm");
    if (static_cast<Eigen::Index>(exp_rows.size()) != pseudo_values.size())
        throw config_error("conditional mean: row/value size mismatch");
    LassoConfig lc = cfg.lasso;
    lc.seed = seed;
    const Matrix X = features_x(data, exp_rows);
    if (exp_rows.size() < 2) return LassoLinear::fit_fixed(X, pseudo_values, 0.0, lc);
    return LassoLinear::fit(X, pseudo_values, lc);
}

// ------------------------------------------------------------------ bundle

bool Provenance::clean(const FoldAssignment& folds) const {
    for (std::size_t k = 0; k < per_fold.size(); ++k)
        for (const auto& [model, rows] : per_fold[k])
            for (std::size_t i : rows)
                if (folds.fold_of_row[i] == static_cast<int>(k)) return false;
    return true;
}

const TargetRows& NuisanceBundle::at(const NuisanceTarget& target) const {
    const auto it = targets.find(target.label());
    if (it == targets.end()) throw config_error(fmt::format("bundle has no nuisances for {}", target.label()));
    return it->second;
}

NuisanceBase NuisanceBase::fit(const CombinedDataset& data, const FoldAssignment& folds, const LearnerConfig& cfg,
                               std::uint64_t seed) {
    validate(data);
    if (folds.fold_of_row.size() != data.rows()) throw config_error("fold assignment does not match the dataset");
    NuisanceBase base;
    base.data_ = std::make_shared<const CombinedDataset>(data);
    base.folds_ = folds;
    base.cfg_ = cfg;
    base.seed_ = seed;
    base.binary_ = data.binary_outcome();
    const std::size_t n = data.rows();
    base.rho_x_.assign(n, 0.0);
    base.rho_sx_.assign(n, 0.0);
    base.phi_sx_.assign(n, 0.0);
    base.phi_.assign(n, 0.0);
    base.mu_obs_.assign(n, 0.0);
    base.fold_fits_.resize(static_cast<std::size_t>(folds.K));

    parallel_for(static_cast<std::size_t>(folds.K), [&](std::size_t kk) {
        const int k = static_cast<int>(kk);
        annotate_fold(k, [&] {
            Fold& f = base.fold_fits_[kk];
            f.score = folds.members(k);
            const auto train = folds.complement(k);
            for (std::size_t i : train) (data.experimental(i) ? f.train_exp : f.train_obs).push_back(i);
            if (f.train_exp.empty() || f.train_obs.empty())
                throw data_error("training folds need both experimental and observational rows");

            f.propensity = fit_probability(data, train, ProbabilityTarget::PropensityX, cfg, child_seed(seed, kk, kPropensity));
            f.surrogacy = fit_probability(data, train, ProbabilityTarget::SurrogacySX, cfg, child_seed(seed, kk, kSurrogacy));
            f.selection = fit_probability(data, train, ProbabilityTarget::SelectionSX, cfg, child_seed(seed, kk, kSelection));
            f.quantile = fit_cond_quantile(data, f.train_obs, cfg, child_seed(seed, kk, kQuantile));
            f.provenance["propensity_x"] = f.train_exp;
            f.provenance["surrogacy_sx"] = f.train_exp;
            f.provenance["selection_sx"] = train;
            f.provenance["cond_quantile"] = f.train_obs;
            f.provenance["wsi_regression"] = f.train_obs;
            f.provenance["cond_mean"] = f.train_exp;

            f.rho_train_obs.resize(f.train_obs.size());
            f.train_dist.reserve(f.train_obs.size());
            for (std::size_t j = 0; j < f.train_obs.size(); ++j) {
                f.rho_train_obs[j] = f.surrogacy.predict(data, f.train_obs[j]);
                f.train_dist.push_back(f.quantile.training_distribution(j));
            }
            const double phi = estimate_phi(folds, data.sample, k);
            f.score_dist.reserve(f.score.size());
            for (std::size_t i : f.score) {
                base.rho_x_[i] = f.propensity.predict(data, i);
                base.rho_sx_[i] = f.surrogacy.predict(data, i);
                base.phi_sx_[i] = f.selection.predict(data, i);
                base.phi_[i] = phi;
                f.score_dist.push_back(f.quantile.distribution(data, i));
                base.mu_obs_[i] = f.score_dist.back().mean();
            }
        });
    });
    return base;
}

TargetRows NuisanceBase::target_rows(const NuisanceTarget& target) const {
    const CombinedDataset& data = *data_;
    const std::size_t n = data.rows();
    TargetRows out;
    out.cutoff.assign(n, 0.0);
    out.mu1.assign(n, 0.0);
    out.mu0.assign(n, 0.0);
    out.mubar1.assign(n, 0.0);
    out.mubar0.assign(n, 0.0);
    out.dual1.assign(n, 0.0);
    out.dual0.assign(n, 0.0);
    const bool independence = !target.worst_case() && target.copula.family() == CopulaFamily::Independence;

    parallel_for(fold_fits_.size(), [&](std::size_t kk) {
        annotate_fold(static_cast<int>(kk), [&] {
            const Fold& f = fold_fits_[kk];
            const auto pseudo =
                wsi_pseudo_outcomes(data, f.train_obs, target, f.rho_train_obs, f.train_dist, binary_, cfg_.quad);
            const Matrix Xo = features_sx(data, f.train_obs);
            std::array<PolynomialSieve, 2> sieve{PolynomialSieve::fit(Xo, pseudo[0], cfg_.sieve_degree),
                                                 PolynomialSieve::fit(Xo, pseudo[1], cfg_.sieve_degree)};

            std::array<LassoLinear, 2> mean;
            for (int w : {0, 1}) {
                std::vector<std::size_t> arm;
                for (std::size_t i : f.train_exp)
                    if (cfg_.cond_mean_all_arms || data.w[i] == w) arm.push_back(i);
                if (arm.empty()) throw data_error(fmt::format("no experimental training rows with W={}", w));
                Vector values(static_cast<Eigen::Index>(arm.size()));
                for (std::size_t r = 0; r < arm.size(); ++r)
                    values(static_cast<Eigen::Index>(r)) = sieve[static_cast<std::size_t>(w)].predict(row_sx(data, arm[r]));
                mean[static_cast<std::size_t>(w)] =
                    fit_cond_mean(data, arm, values, cfg_, child_seed(seed_, kk, target_stream(target) + static_cast<std::uint64_t>(w)));
            }

            for (std::size_t r = 0; r < f.score.size(); ++r) {
                const std::size_t i = f.score[r];
                const Eigen::RowVectorXd z = row_sx(data, i);
                out.mu1[i] = sieve[1].predict(z);
                out.mu0[i] = sieve[0].predict(z);
                const Eigen::RowVectorXd xi = data.x.row(static_cast<Eigen::Index>(i));
                out.mubar1[i] = mean[1].predict(xi);
                out.mubar0[i] = mean[0].predict(xi);
                const WeightedDistribution& d = f.score_dist[r];
                const bool obs = !data.experimental(i);
                const double y = data.y[i];
                if (target.worst_case()) {
                    out.cutoff[i] = worst_case_cutoff(*target.bound, d, rho_sx_[i], binary_);
                    if (obs) {
                        out.dual1[i] = worst_case_dual(*target.bound, 1, y, out.cutoff[i], rho_sx_[i]);
                        out.dual0[i] = worst_case_dual(*target.bound, 0, y, out.cutoff[i], rho_sx_[i]);
                    }
                } else if (independence) {
                    out.cutoff[i] = out.mu1[i];
                    if (obs) out.dual1[i] = out.dual0[i] = y;
                } else {
                    const RowIntegrator integ(target.copula, 1.0 - rho_sx_[i], [&d](double u) { return d.quantile(u); },
                                              cfg_.quad);
                    out.cutoff[i] = integ.d_weight();
                    if (obs) {
                        out.dual1[i] = integ.h_dual(1, y);
                        out.dual0[i] = integ.h_dual(0, y);
                    }
                }
            }
        });
    });
    return out;
}

NuisanceBundle NuisanceBase::bundle(std::span<const NuisanceTarget> targets) const {
    NuisanceBundle b;
    b.folds = folds_;
    b.rho_x = rho_x_;
    b.rho_sx = rho_sx_;
    b.phi_sx = phi_sx_;
    b.phi = phi_;
    b.mu_obs = mu_obs_;
    for (const auto& t : targets) b.targets[t.label()] = target_rows(t);
    for (const auto& f : fold_fits_) b.provenance.per_fold.push_back(f.provenance);
    return b;
}

NuisanceBundle assemble_bundle(const CombinedDataset& data, int K, std::span<const NuisanceTarget> targets,
                               const LearnerConfig& cfg, std::uint64_t seed) {
    const auto folds = partition_folds(data.rows(), K, seed);
    return NuisanceBase::fit(data, folds, cfg, seed).bundle(targets);
}

NuisanceBundle oracle_bundle(const CombinedDataset& data, const DgpOracle& oracle, const FoldAssignment& folds,
                             std::span<const NuisanceTarget> targets, const QuadratureConfig& quad,
                             std::size_t mean_grid) {
    if (folds.fold_of_row.size() != data.rows()) throw config_error("fold assignment does not match the dataset");
    if (mean_grid == 1 || mean_grid == 2) throw config_error("mean_grid needs at least 3 points");
    const std::size_t n = data.rows();
    NuisanceBundle b;
    b.folds = folds;
    b.rho_x.resize(n);
    b.rho_sx.resize(n);
    b.phi_sx.resize(n);
    b.phi.assign(n, oracle.phi());
    b.mu_obs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = data.s(static_cast<Eigen::Index>(i), 0);
        const double x = data.x(static_cast<Eigen::Index>(i), 0);
        b.rho_x[i] = oracle.propensity_x(x);
        b.rho_sx[i] = oracle.surrogacy(s, x);
        b.phi_sx[i] = oracle.selection(s, x);
        b.mu_obs[i] = oracle.outcome_mean(s, x);
    }
    for (const auto& t : targets) {
        TargetRows rows;
        rows.cutoff.resize(n);
        rows.mu1.resize(n);
        rows.mu0.resize(n);
        rows.mubar1.resize(n);
        rows.mubar0.resize(n);
        rows.dual1.assign(n, 0.0);
        rows.dual0.assign(n, 0.0);
        auto cond_mean = [&](int w, double x) {
            return t.worst_case() ? oracle.cond_mean_bound(*t.bound, w, x) : oracle.cond_mean_copula(t.copula, w, x);
        };
        using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
        std::array<std::optional<Spline>, 2> splines;
        if (mean_grid > 0) {
            const double h = 1.0 / static_cast<double>(mean_grid - 1);
            std::array<std::vector<double>, 2> table{std::vector<double>(mean_grid), std::vector<double>(mean_grid)};
            parallel_for(2 * mean_grid, [&](std::size_t j) {
                const int w = static_cast<int>(j / mean_grid);
                const std::size_t g = j % mean_grid;
                table[static_cast<std::size_t>(w)][g] = cond_mean(w, static_cast<double>(g) * h);
            });
            for (std::size_t w = 0; w < 2; ++w) splines[w].emplace(table[w].begin(), table[w].end(), 0.0, h);
        }
        auto mubar = [&](int w, double x) {
            const auto& sp = splines[static_cast<std::size_t>(w)];
            return sp ? (*sp)(x) : cond_mean(w, x);
        };
        parallel_for(n, [&](std::size_t i) {
            const double s = data.s(static_cast<Eigen::Index>(i), 0);
            const double x = data.x(static_cast<Eigen::Index>(i), 0);
            const bool obs = !data.experimental(i);
            const double y = data.y[i];
            if (t.worst_case()) {
                rows.cutoff[i] = oracle.cutoff(*t.bound, s, x);
                rows.mu1[i] = oracle.wsi_bound(*t.bound, 1, s, x);
                rows.mu0[i] = oracle.wsi_bound(*t.bound, 0, s, x);
                rows.mubar1[i] = mubar(1, x);
                rows.mubar0[i] = mubar(0, x);
                if (obs) {
                    const double rho = oracle.surrogacy(s, x);
                    rows.dual1[i] = worst_case_dual(*t.bound, 1, y, rows.cutoff[i], rho);
                    rows.dual0[i] = worst_case_dual(*t.bound, 0, y, rows.cutoff[i], rho);
                }
            } else {
                rows.cutoff[i] = oracle.d_weight(t.copula, s, x);
                rows.mu1[i] = oracle.wsi_copula(t.copula, 1, s, x);
                rows.mu0[i] = oracle.wsi_copula(t.copula, 0, s, x);
                rows.mubar1[i] = mubar(1, x);
                rows.mubar0[i] = mubar(0, x);
                if (obs) {
                    const RowIntegrator integ(t.copula, 1.0 - oracle.surrogacy(s, x),
                                              [&](double u) { return oracle.quantile(u, s, x); }, quad);
                    rows.dual1[i] = integ.h_dual(1, y);
                    rows.dual0[i] = integ.h_dual(0, y);
                }
            }
        });
        b.targets[t.label()] = std::move(rows);
    }
    return b;
}

std::string bundle_to_csv(const NuisanceBundle& b) {
    std::ostringstream out;
    out << "row,fold,rho_x,rho_sx,phi_sx,phi,mu_obs";
    for (const auto& [label, t] : b.targets)
        for (const char* col : {"cutoff", "mu1", "mu0", "mubar1", "mubar0", "dual1", "dual0"}) out << ',' << label << ':' << col;
    out << '\n';
    for (std::size_t i = 0; i < b.rows(); ++i) {
        out << i + 1 << ',' << b.folds.fold_of_row[i] << ',' << format_double(b.rho_x[i]) << ','
            << format_double(b.rho_sx[i]) << ',' << format_double(b.phi_sx[i]) << ',' << format_double(b.phi[i])
            << ',' << format_double(b.mu_obs[i]);
        for (const auto& [label, t] : b.targets)
            for (const auto* v : {&t.cutoff, &t.mu1, &t.mu0, &t.mubar1, &t.mubar0, &t.dual1, &t.dual0}) out << ',' << format_double((*v)[i]);
        out << '\n';
    }
    return out.str();
}

}  // namespace surrosens
