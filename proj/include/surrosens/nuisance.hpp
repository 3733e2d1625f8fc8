#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "surrosens/copula.hpp"
#include "surrosens/dataset.hpp"
#include "surrosens/learners.hpp"
#include "surrosens/wsi.hpp"

namespace surrosens {

class DgpOracle;

struct FoldAssignment {
    std::vector<int> fold_of_row;
    int K = 0;

    std::vector<std::size_t> members(int k) const;
    std::vector<std::size_t> complement(int k) const;
};

/// Balanced seeded partition of n rows into K folds; 2 <= K <= n.
FoldAssignment partition_folds(std::size_t n, int K, std::uint64_t seed);

/// K * #{E rows outside fold k} / (n (K - 1)).
double estimate_phi(const FoldAssignment& folds, const std::vector<SampleTag>& sample, int k);

/// Deterministic child seed for (fold, stream) under a master seed.
std::uint64_t child_seed(std::uint64_t master, std::uint64_t fold, std::uint64_t stream);

enum class QuantileLearner { Forest, Knn };

struct LearnerConfig {
    LassoConfig lasso;
    QuantileLearner quantile = QuantileLearner::Forest;
    ForestConfig forest{.min_leaf = 50};
    KnnConfig knn;
    int sieve_degree = 2;
    /// Fit the quantile learner to residuals from a sieve location in (s, x)
    /// and shift back; skipped for 0/1 outcomes.
    bool detrend_quantiles = true;
    /// Fit the X-level means on all experimental rows instead of the arm W = w.
    bool cond_mean_all_arms = false;
    double clip = 0.01;
    QuadratureConfig quad;
};

enum class ProbabilityTarget { PropensityX, SurrogacySX, SelectionSX };

std::string_view target_name(ProbabilityTarget target);

/// Clipped L1-logistic probability model.
class ProbabilityModel {
public:
    ProbabilityModel() = default;
    ProbabilityModel(ProbabilityTarget target, LassoLogistic model, double clip)
        : target_(target), model_(std::move(model)), clip_(clip) {}

    ProbabilityTarget target() const { return target_; }
    double predict(const CombinedDataset& data, std::size_t row) const;
    double predict(const Eigen::RowVectorXd& s, const Eigen::RowVectorXd& x) const;

private:
    ProbabilityTarget target_ = ProbabilityTarget::PropensityX;
    LassoLogistic model_;
    double clip_ = 0.01;
};

/// Propensity and surrogacy fit on the experimental rows among `rows` (label W);
/// selection on all of `rows` (label 1{E}).
ProbabilityModel fit_probability(const CombinedDataset& data, const std::vector<std::size_t>& rows,
                                 ProbabilityTarget target, const LearnerConfig& cfg, std::uint64_t seed);

/// Conditional law of Y given (S, X) in the observational sample.
class ConditionalQuantileModel {
public:
    ConditionalQuantileModel() = default;
    ConditionalQuantileModel(std::shared_ptr<const ConditionalDistributionModel> model, std::vector<std::size_t> rows)
        : model_(std::move(model)), rows_(std::move(rows)) {}

    WeightedDistribution distribution(const CombinedDataset& data, std::size_t row) const;
    /// Out-of-bag (forest) or leave-one-out (kNN) law for the j-th training row.
    WeightedDistribution training_distribution(std::size_t j) const;
    double predict(double u, const Eigen::RowVectorXd& s, const Eigen::RowVectorXd& x) const;

    /// Dataset rows the model was trained on, in training order.
    const std::vector<std::size_t>& training_rows() const { return rows_; }

private:
    std::shared_ptr<const ConditionalDistributionModel> model_;
    std::vector<std::size_t> rows_;
};

ConditionalQuantileModel fit_cond_quantile(const CombinedDataset& data, const std::vector<std::size_t>& obs_rows,
                                           const LearnerConfig& cfg, std::uint64_t seed);

/// What a set of WSI nuisances targets: a Frechet bound or a smooth copula.
struct NuisanceTarget {
    std::optional<Bound> bound;
    CopulaSpec copula;

    static NuisanceTarget upper();
    static NuisanceTarget lower();
    static NuisanceTarget smooth(const CopulaSpec& copula);

    bool worst_case() const { return bound.has_value(); }
    std::string label() const;
};

/// Stage-1 cutoff for one observational row: the quantile at the bound's
/// level (binary outcomes: the threshold rule on the conditional mean).
double worst_case_cutoff(Bound bound, const WeightedDistribution& dist, double rho_sx, bool binary);

/// Pseudo-outcomes for both arms over `obs_rows` (indexed like obs_rows):
/// the Frechet dual transform or the smooth-copula dual h. `rho_sx` and `dist`
/// must be cross-fitted relative to the rows.
std::array<Vector, 2> wsi_pseudo_outcomes(const CombinedDataset& data, const std::vector<std::size_t>& obs_rows,
                                          const NuisanceTarget& target, const std::vector<double>& rho_sx,
                                          const std::vector<WeightedDistribution>& dist, bool binary,
                                          const QuadratureConfig& quad = {});

/// Two-stage WSI regression for arm w: pseudo-outcomes from the out-of-bag
/// quantile law at cross-fitted surrogacy scores, regressed on a sieve in (s, x).
PolynomialSieve fit_wsi_regression(const CombinedDataset& data, const std::vector<std::size_t>& obs_rows,
                                   const NuisanceTarget& target, int w, const ProbabilityModel& surrogacy,
                                   const ConditionalQuantileModel& quantile, const LearnerConfig& cfg);

/// L1-linear regression of pseudo values on X over the experimental rows given.
LassoLinear fit_cond_mean(const CombinedDataset& data, const std::vector<std::size_t>& exp_rows,
                          const Vector& pseudo_values, const LearnerConfig& cfg, std::uint64_t seed);

/// Per-row WSI nuisances for one target.
struct TargetRows {
    /// q_{C+/-}(s, x) for a bound, d_C(s, x) for a smooth copula.
    std::vector<double> cutoff;
    std::vector<double> mu1;
    std::vector<double> mu0;
    std::vector<double> mubar1;
    std::vector<double> mubar0;
    /// Dual transform of Y at observational rows (H for a bound, h for a
    /// smooth copula) under the row's own quantile law; 0 on experimental rows.
    std::vector<double> dual1;
    std::vector<double> dual0;
};

/// Training rows behind every model used to score each fold.
struct Provenance {
    /// provenance[k][model] = dataset rows the model scoring fold k was trained on.
    std::vector<std::map<std::string, std::vector<std::size_t>>> per_fold;

    /// True when no model's training rows include a row it scores.
    bool clean(const FoldAssignment& folds) const;
};

struct NuisanceBundle {
    FoldAssignment folds;
    std::vector<double> rho_x;
    std::vector<double> rho_sx;
    std::vector<double> phi_sx;
    std::vector<double> phi;       // fold scalar, repeated per row
    std::vector<double> mu_obs;    // E[Y | s, x, O]
    std::map<std::string, TargetRows> targets;
    Provenance provenance;

    std::size_t rows() const { return rho_sx.size(); }
    const TargetRows& at(const NuisanceTarget& target) const;
};

/// Cross-fitted copula-independent nuisances: probability models, quantile
/// laws and out-of-bag distributions per fold. Target-specific parts are
/// derived on demand, so one instance serves a whole sensitivity grid.
class NuisanceBase {
public:
    static NuisanceBase fit(const CombinedDataset& data, const FoldAssignment& folds, const LearnerConfig& cfg,
                            std::uint64_t seed);

    TargetRows target_rows(const NuisanceTarget& target) const;
    NuisanceBundle bundle(std::span<const NuisanceTarget> targets) const;

    const CombinedDataset& data() const { return *data_; }
    const FoldAssignment& folds() const { return folds_; }
    const LearnerConfig& config() const { return cfg_; }

private:
    struct Fold {
        std::vector<std::size_t> score;
        std::vector<std::size_t> train_obs;
        std::vector<std::size_t> train_exp;
        ProbabilityModel propensity;
        ProbabilityModel surrogacy;
        ProbabilityModel selection;
        ConditionalQuantileModel quantile;
        std::vector<double> rho_train_obs;
        std::vector<WeightedDistribution> train_dist;
        std::vector<WeightedDistribution> score_dist;
        std::map<std::string, std::vector<std::size_t>> provenance;
    };

    std::shared_ptr<const CombinedDataset> data_;
    FoldAssignment folds_;
    LearnerConfig cfg_;
    std::uint64_t seed_ = 0;
    bool binary_ = false;
    std::vector<Fold> fold_fits_;
    std::vector<double> rho_x_;
    std::vector<double> rho_sx_;
    std::vector<double> phi_sx_;
    std::vector<double> phi_;
    std::vector<double> mu_obs_;
};

/// partition_folds + NuisanceBase::fit + bundle.
NuisanceBundle assemble_bundle(const CombinedDataset& data, int K, std::span<const NuisanceTarget> targets,
                               const LearnerConfig& cfg, std::uint64_t seed);

/// Closed-form nuisances of the simulation design, evaluated at (s1, x1).
/// mean_grid > 0 interpolates the X-level means with a cubic spline through
/// that many equispaced x nodes instead of integrating per row.
NuisanceBundle oracle_bundle(const CombinedDataset& data, const DgpOracle& oracle, const FoldAssignment& folds,
                             std::span<const NuisanceTarget> targets, const QuadratureConfig& quad = {},
                             std::size_t mean_grid = 0);

/// CSV audit dump: row, fold, then every nuisance column.
std::string bundle_to_csv(const NuisanceBundle& bundle);

}  // namespace surrosens
