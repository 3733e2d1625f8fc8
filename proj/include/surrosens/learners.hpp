#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace surrosens {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Column-wise centring and scaling; constant columns keep scale 1.
struct Standardizer {
    Vector mean;
    Vector scale;
    std::vector<bool> constant;

    static Standardizer fit(const Matrix& X);
    Matrix apply(const Matrix& X) const;
};

/// Balanced random fold labels in [0, k) for n items.
std::vector<int> random_folds(std::size_t n, int k, std::uint64_t seed);

struct LassoConfig {
    int n_lambda = 100;
    int cv_folds = 5;
    /// 0 picks 1e-4 when n > p, 1e-2 otherwise.
    double lambda_min_ratio = 0.0;
    double tol = 1e-7;
    int max_sweeps = 10000;
    std::uint64_t seed = 0;
};

/// L1-penalised linear model, (1/2n)||y - b0 - X b||^2 + lambda ||b||_1 on
/// standardised features, lambda chosen by cross-validated squared error.
class LassoLinear {
public:
    static LassoLinear fit(const Matrix& X, const Vector& y, const LassoConfig& cfg = {});
    /// Fit at one fixed penalty (lambda in standardised units).
    static LassoLinear fit_fixed(const Matrix& X, const Vector& y, double lambda, const LassoConfig& cfg = {});

    double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    Vector predict_rows(const Matrix& X) const;

    double lambda() const { return lambda_; }
    /// Coefficients on the original feature scale.
    Vector coefficients() const;
    double intercept() const;

private:
    Standardizer std_;
    Vector beta_;  // standardised scale
    double b0_ = 0.0;
    double lambda_ = 0.0;
};

/// L1-penalised logistic regression fitted by IRLS with coordinate-descent
/// inner solves along a lambda path, lambda chosen by cross-validated deviance.
class LassoLogistic {
public:
    /// y must be 0/1 with both classes present; otherwise throws Error(Data).
    static LassoLogistic fit(const Matrix& X, const Vector& y, const LassoConfig& cfg = {});

    double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    Vector predict_rows(const Matrix& X) const;

    double lambda() const { return lambda_; }
    Vector coefficients() const;
    double intercept() const;

private:
    Standardizer std_;
    Vector beta_;
    double b0_ = 0.0;
    double lambda_ = 0.0;
};

/// Full degree-2 polynomial basis in standardised features, fitted by least squares.
class PolynomialSieve {
public:
    /// Throws Error(Numerical) when the design is rank deficient.
    static PolynomialSieve fit(const Matrix& X, const Vector& y, int degree = 2);

    double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    Vector predict_rows(const Matrix& X) const;
    std::size_t terms() const { return static_cast<std::size_t>(coef_.size()); }

private:
    Eigen::RowVectorXd basis(const Eigen::Ref<const Eigen::RowVectorXd>& z) const;

    Standardizer std_;
    int degree_ = 2;
    Vector coef_;
};

/// Discrete distribution on sorted support points.
class WeightedDistribution {
public:
    WeightedDistribution() = default;
    /// Weights need not be normalised; zero-weight points are dropped.
    WeightedDistribution(std::vector<double> values, std::vector<double> weights);

    /// Left-continuous quantile inf{y : F(y) >= u}.
    double quantile(double u) const;
    double mean() const;
    double cdf(double y) const;
    /// The law of Y + delta.
    WeightedDistribution shifted(double delta) const;
    const std::vector<double>& support() const { return values_; }
    bool empty() const { return values_.empty(); }

private:
    std::vector<double> values_;
    std::vector<double> cum_;
};

/// Conditional outcome distribution learner.
class ConditionalDistributionModel {
public:
    virtual ~ConditionalDistributionModel() = default;
    virtual WeightedDistribution predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const = 0;
    /// Prediction for training row i that does not use row i (out-of-bag or leave-one-out).
    virtual WeightedDistribution predict_training(std::size_t i) const = 0;
    virtual std::size_t training_rows() const = 0;
};

struct ForestConfig {
    int trees = 200;
    int min_leaf = 10;
    /// 0 means ceil(sqrt(p)).
    int mtry = 0;
    /// Share of rows drawn without replacement per tree; 0 draws a bootstrap sample.
    double sample_fraction = 0.5;
    std::uint64_t seed = 0;
};

/// Quantile regression forest: subsampled CART trees with variance-reduction
/// splits whose leaves keep their training outcomes.
class QuantileForest final : public ConditionalDistributionModel {
public:
    /// Throws Error(Data) when there are fewer rows than min_leaf.
    static std::shared_ptr<QuantileForest> fit(const Matrix& X, const Vector& y, const ForestConfig& cfg = {});

    WeightedDistribution predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const override;
    WeightedDistribution predict_training(std::size_t i) const override;
    std::size_t training_rows() const override { return static_cast<std::size_t>(y_.size()); }

    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        int leaf_begin = 0;  // into Tree::leaf_rows
        int leaf_end = 0;
    };
    struct Tree {
        std::vector<Node> nodes;
        std::vector<int> leaf_rows;
        std::vector<std::uint8_t> in_bag;
    };

private:
    const Node& leaf_for(const Tree& t, const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    WeightedDistribution collect(const std::vector<double>& weight_by_row) const;

    Matrix X_;
    Vector y_;
    std::vector<int> order_;  // training rows by ascending y
    std::vector<Tree> trees_;
};

struct KnnConfig {
    /// 0 means clamp(round(sqrt(n)), 10, n).
    int k = 0;
};

/// k-nearest-neighbour empirical distribution on standardised features.
class KnnQuantile final : public ConditionalDistributionModel {
public:
    static std::shared_ptr<KnnQuantile> fit(const Matrix& X, const Vector& y, const KnnConfig& cfg = {});

    WeightedDistribution predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const override;
    WeightedDistribution predict_training(std::size_t i) const override;
    std::size_t training_rows() const override { return static_cast<std::size_t>(y_.size()); }

private:
    WeightedDistribution neighbours(const Eigen::RowVectorXd& z, long skip) const;

    Standardizer std_;
    Matrix Z_;
    Vector y_;
    int k_ = 10;
};

/// Residual law from an inner learner shifted by a polynomial sieve location:
/// Y | z ~ m(z) + (law of Y - m(Z) near z).
class LocationShiftModel final : public ConditionalDistributionModel {
public:
    LocationShiftModel(PolynomialSieve location, Vector train_location,
                       std::shared_ptr<const ConditionalDistributionModel> residual)
        : location_(std::move(location)), train_location_(std::move(train_location)), residual_(std::move(residual)) {}

    WeightedDistribution predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const override;
    WeightedDistribution predict_training(std::size_t i) const override;
    std::size_t training_rows() const override { return residual_->training_rows(); }

private:
    PolynomialSieve location_;
    Vector train_location_;
    std::shared_ptr<const ConditionalDistributionModel> residual_;
};

}  // namespace surrosens
