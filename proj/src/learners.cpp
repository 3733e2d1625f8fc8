#include "surrosens/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "surrosens/error.hpp"
#include "surrosens/numerics.hpp"

namespace surrosens {

namespace {

double soft_threshold(double g, double lambda) {
    if (g > lambda) return g - lambda;
    if (g < -lambda) return g + lambda;
    return 0.0;
}

// Minimises (1/2n) sum_i w_i (z_i - b0 - Z_i beta)^2 + lambda ||beta||_1 by
// cyclic coordinate descent, warm-started from (beta, b0).
void coordinate_descent(const Matrix& Z, const Vector& z, const Vector& w, double lambda,
                        const std::vector<bool>& skip, Vector& beta, double& b0, double tol, int max_sweeps) {
    const double n = static_cast<double>(Z.rows());
    const double wsum = w.sum();
    Vector r = z - Z * beta;
    r.array() -= b0;
    Vector xwx(Z.cols());
    for (Eigen::Index j = 0; j < Z.cols(); ++j) xwx(j) = (w.array() * Z.col(j).array().square()).sum() / n;
    const double zbar = (w.array() * z.array()).sum() / wsum;
    const double scale = std::max((w.array() * (z.array() - zbar).square()).sum() / n, 1e-12);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_change = 0.0;
        const double d0 = (w.array() * r.array()).sum() / wsum;
        b0 += d0;
        r.array() -= d0;
        max_change = std::max(max_change, wsum / n * d0 * d0);
        for (Eigen::Index j = 0; j < Z.cols(); ++j) {
            if (skip[static_cast<std::size_t>(j)] || xwx(j) <= 0.0) continue;
            const double g = (w.array() * Z.col(j).array() * r.array()).sum() / n + xwx(j) * beta(j);
            const double next = soft_threshold(g, lambda) / xwx(j);
            const double d = next - beta(j);
            if (d != 0.0) {
                r -= d * Z.col(j);
                beta(j) = next;
                max_change = std::max(max_change, xwx(j) * d * d);
            }
        }
        if (max_change < tol * scale) return;
    }
}

std::vector<double> lambda_path(double lambda_max, const LassoConfig& cfg, Eigen::Index n, Eigen::Index p) {
    const double ratio = cfg.lambda_min_ratio > 0.0 ? cfg.lambda_min_ratio : (n > p ? 1e-4 : 1e-2);
    const int k = std::max(cfg.n_lambda, 1);
    std::vector<double> path(static_cast<std::size_t>(k));
    const double top = std::max(lambda_max, 1e-12);
    for (int i = 0; i < k; ++i) path[static_cast<std::size_t>(i)] = top * std::pow(ratio, k == 1 ? 0.0 : double(i) / (k - 1));
    return path;
}

double max_abs_gradient(const Matrix& Z, const Vector& y) {
    const double ybar = y.mean();
    double best = 0.0;
    for (Eigen::Index j = 0; j < Z.cols(); ++j)
        best = std::max(best, std::abs(Z.col(j).dot((y.array() - ybar).matrix())) / static_cast<double>(Z.rows()));
    return best;
}

Matrix rows_of(const Matrix& X, const std::vector<Eigen::Index>& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), X.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
    return out;
}

Vector rows_of(const Vector& y, const std::vector<Eigen::Index>& idx) {
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(idx[i]);
    return out;
}

double sigmoid(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

struct PathFit {
    std::vector<Vector> betas;
    std::vector<double> intercepts;
};

// Linear path on standardised features.
PathFit linear_path(const Matrix& Z, const Vector& y, const std::vector<bool>& skip, const std::vector<double>& path,
                    const LassoConfig& cfg, std::size_t stop) {
    PathFit out;
    Vector beta = Vector::Zero(Z.cols());
    double b0 = y.mean();
    const Vector w = Vector::Ones(Z.rows());
    for (std::size_t k = 0; k <= stop && k < path.size(); ++k) {
        coordinate_descent(Z, y, w, path[k], skip, beta, b0, cfg.tol, cfg.max_sweeps);
        out.betas.push_back(beta);
        out.intercepts.push_back(b0);
    }
    return out;
}

PathFit logistic_path(const Matrix& Z, const Vector& y, const std::vector<bool>& skip, const std::vector<double>& path,
                      const LassoConfig& cfg, std::size_t stop) {
    PathFit out;
    Vector beta = Vector::Zero(Z.cols());
    const double ybar = std::clamp(y.mean(), 1e-5, 1.0 - 1e-5);
    double b0 = std::log(ybar / (1.0 - ybar));
    Vector w(Z.rows());
    Vector z(Z.rows());
    for (std::size_t k = 0; k <= stop && k < path.size(); ++k) {
        for (int iter = 0; iter < 50; ++iter) {
            const Vector eta = (Z * beta).array() + b0;
            for (Eigen::Index i = 0; i < Z.rows(); ++i) {
                const double p = std::clamp(sigmoid(eta(i)), 1e-5, 1.0 - 1e-5);
                w(i) = p * (1.0 - p);
                z(i) = eta(i) + (y(i) - p) / w(i);
            }
            const Vector old_beta = beta;
            const double old_b0 = b0;
            coordinate_descent(Z, z, w, path[k], skip, beta, b0, cfg.tol, cfg.max_sweeps);
            const double change = std::max((beta - old_beta).cwiseAbs().maxCoeff(), std::abs(b0 - old_b0));
            if (!std::isfinite(change)) throw numerical_error("lasso logistic: IRLS diverged");
            if (change < 1e-6) break;
        }
        out.betas.push_back(beta);
        out.intercepts.push_back(b0);
    }
    return out;
}

std::size_t argmin(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

Standardizer Standardizer::fit(const Matrix& X) {
    Standardizer s;
    const auto p = X.cols();
    s.mean = X.colwise().mean().transpose();
    s.scale = Vector::Ones(p);
    s.constant.assign(static_cast<std::size_t>(p), false);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double var = (X.col(j).array() - s.mean(j)).square().mean();
        if (var > 1e-24 * std::max(1.0, s.mean(j) * s.mean(j))) s.scale(j) = std::sqrt(var);
        else s.constant[static_cast<std::size_t>(j)] = true;
    }
    return s;
}

Matrix Standardizer::apply(const Matrix& X) const {
    Matrix Z = X.rowwise() - mean.transpose();
    Z.array().rowwise() /= scale.transpose().array();
    for (std::size_t j = 0; j < constant.size(); ++j)
        if (constant[j]) Z.col(static_cast<Eigen::Index>(j)).setZero();
    return Z;
}

std::vector<int> random_folds(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2 || static_cast<std::size_t>(k) > n) throw config_error(fmt::format("need 2 <= K <= n, got K={} n={}", k, n));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> fold(n);
    for (std::size_t r = 0; r < n; ++r) fold[perm[r]] = static_cast<int>(r % static_cast<std::size_t>(k));
    return fold;
}

// ---------------------------------------------------------------- LassoLinear

LassoLinear LassoLinear::fit(const Matrix& X, const Vector& y, const LassoConfig& cfg) {
    if (X.rows() != y.size() || X.rows() < 2) throw data_error("lasso: need at least two rows");
    LassoLinear m;
    m.std_ = Standardizer::fit(X);
    const Matrix Z = m.std_.apply(X);
    const auto path = lambda_path(max_abs_gradient(Z, y), cfg, X.rows(), X.cols());

    std::size_t best = path.size() - 1;
    const int folds = std::min<int>(cfg.cv_folds, static_cast<int>(X.rows()));
    if (folds >= 2) {
        const auto fold = random_folds(static_cast<std::size_t>(X.rows()), folds, cfg.seed);
        std::vector<double> loss(path.size(), 0.0);
        for (int f = 0; f < folds; ++f) {
            std::vector<Eigen::Index> tr;
            std::vector<Eigen::Index> te;
            for (Eigen::Index i = 0; i < X.rows(); ++i) (fold[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
            const Matrix Xtr = rows_of(X, tr);
            const Standardizer st = Standardizer::fit(Xtr);
            const PathFit pf = linear_path(st.apply(Xtr), rows_of(y, tr), st.constant, path, cfg, path.size() - 1);
            const Matrix Zte = st.apply(rows_of(X, te));
            const Vector yte = rows_of(y, te);
            for (std::size_t k = 0; k < path.size(); ++k)
                loss[k] += ((Zte * pf.betas[k]).array() + pf.intercepts[k] - yte.array()).square().sum();
        }
        best = argmin(loss);
    }
    const PathFit full = linear_path(Z, y, m.std_.constant, path, cfg, best);
    m.beta_ = full.betas.back();
    m.b0_ = full.intercepts.back();
    m.lambda_ = path[best];
    return m;
}

LassoLinear LassoLinear::fit_fixed(const Matrix& X, const Vector& y, double lambda, const LassoConfig& cfg) {
    if (X.rows() != y.size() || X.rows() < 1) throw data_error("lasso: need at least one row");
    LassoLinear m;
    m.std_ = Standardizer::fit(X);
    const Matrix Z = m.std_.apply(X);
    m.beta_ = Vector::Zero(X.cols());
    m.b0_ = y.mean();
    coordinate_descent(Z, y, Vector::Ones(X.rows()), lambda, m.std_.constant, m.beta_, m.b0_, cfg.tol, cfg.max_sweeps);
    m.lambda_ = lambda;
    return m;
}

double LassoLinear::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    double eta = b0_;
    for (Eigen::Index j = 0; j < beta_.size(); ++j)
        if (!std_.constant[static_cast<std::size_t>(j)]) eta += beta_(j) * (x(j) - std_.mean(j)) / std_.scale(j);
    return eta;
}

Vector LassoLinear::predict_rows(const Matrix& X) const {
    return (std_.apply(X) * beta_).array() + b0_;
}

Vector LassoLinear::coefficients() const { return beta_.array() / std_.scale.array(); }

double LassoLinear::intercept() const { return b0_ - coefficients().dot(std_.mean); }

// -------------------------------------------------------------- LassoLogistic

LassoLogistic LassoLogistic::fit(const Matrix& X, const Vector& y, const LassoConfig& cfg) {
    if (X.rows() != y.size() || X.rows() < 2) throw data_error("lasso logistic: need at least two rows");
    std::vector<Eigen::Index> cls[2];
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y(i) != 0.0 && y(i) != 1.0) throw data_error("lasso logistic: labels must be 0/1");
        cls[y(i) == 1.0 ? 1 : 0].push_back(i);
    }
    if (cls[0].empty() || cls[1].empty()) throw data_error("lasso logistic: training labels contain a single class");

    LassoLogistic m;
    m.std_ = Standardizer::fit(X);
    const Matrix Z = m.std_.apply(X);
    const auto path = lambda_path(max_abs_gradient(Z, y), cfg, X.rows(), X.cols());

    std::size_t best = path.size() - 1;
    const int folds = std::min<int>(cfg.cv_folds, static_cast<int>(std::min(cls[0].size(), cls[1].size())));
    if (folds >= 2) {
        // stratified folds keep both classes in every training part
        std::vector<int> fold(static_cast<std::size_t>(X.rows()));
        std::mt19937_64 rng(cfg.seed);
        for (auto& members : cls) {
            std::shuffle(members.begin(), members.end(), rng);
            for (std::size_t r = 0; r < members.size(); ++r)
                fold[static_cast<std::size_t>(members[r])] = static_cast<int>(r % static_cast<std::size_t>(folds));
        }
        std::vector<double> loss(path.size(), 0.0);
        for (int f = 0; f < folds; ++f) {
            std::vector<Eigen::Index> tr;
            std::vector<Eigen::Index> te;
            for (Eigen::Index i = 0; i < X.rows(); ++i) (fold[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
            const Matrix Xtr = rows_of(X, tr);
            const Standardizer st = Standardizer::fit(Xtr);
            const PathFit pf = logistic_path(st.apply(Xtr), rows_of(y, tr), st.constant, path, cfg, path.size() - 1);
            const Matrix Zte = st.apply(rows_of(X, te));
            const Vector yte = rows_of(y, te);
            for (std::size_t k = 0; k < path.size(); ++k) {
                const Vector eta = (Zte * pf.betas[k]).array() + pf.intercepts[k];
                for (Eigen::Index i = 0; i < eta.size(); ++i) {
                    const double p = std::clamp(sigmoid(eta(i)), 1e-10, 1.0 - 1e-10);
                    loss[k] -= 2.0 * (yte(i) * std::log(p) + (1.0 - yte(i)) * std::log1p(-p));
                }
            }
        }
        best = argmin(loss);
    }
    const PathFit full = logistic_path(Z, y, m.std_.constant, path, cfg, best);
    m.beta_ = full.betas.back();
    m.b0_ = full.intercepts.back();
    m.lambda_ = path[best];
    return m;
}

double LassoLogistic::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    double eta = b0_;
    for (Eigen::Index j = 0; j < beta_.size(); ++j)
        if (!std_.constant[static_cast<std::size_t>(j)]) eta += beta_(j) * (x(j) - std_.mean(j)) / std_.scale(j);
    return sigmoid(eta);
}

Vector LassoLogistic::predict_rows(const Matrix& X) const {
    const Vector eta = (std_.apply(X) * beta_).array() + b0_;
    return eta.unaryExpr([](double e) { return sigmoid(e); });
}

Vector LassoLogistic::coefficients() const { return beta_.array() / std_.scale.array(); }

double LassoLogistic::intercept() const { return b0_ - coefficients().dot(std_.mean); }

// ------------------------------------------------------------ PolynomialSieve

Eigen::RowVectorXd PolynomialSieve::basis(const Eigen::Ref<const Eigen::RowVectorXd>& z) const {
    std::vector<Eigen::Index> live;
    for (Eigen::Index j = 0; j < z.size(); ++j)
        if (!std_.constant[static_cast<std::size_t>(j)]) live.push_back(j);
    const auto p = static_cast<Eigen::Index>(live.size());
    const Eigen::Index cols = 1 + p + (degree_ >= 2 ? p * (p + 1) / 2 : 0);
    Eigen::RowVectorXd b(cols);
    Eigen::Index c = 0;
    b(c++) = 1.0;
    for (auto j : live) b(c++) = z(j);
    if (degree_ >= 2)
        for (std::size_t a = 0; a < live.size(); ++a)
            for (std::size_t d = a; d < live.size(); ++d) b(c++) = z(live[a]) * z(live[d]);
    return b;
}

PolynomialSieve PolynomialSieve::fit(const Matrix& X, const Vector& y, int degree) {
    if (degree != 1 && degree != 2) throw config_error("polynomial sieve degree must be 1 or 2");
    if (X.rows() != y.size()) throw data_error("sieve: row mismatch");
    PolynomialSieve m;
    m.degree_ = degree;
    m.std_ = Standardizer::fit(X);
    const Matrix Z = m.std_.apply(X);
    const Eigen::RowVectorXd first = m.basis(Z.row(0));
    Matrix B(Z.rows(), first.size());
    for (Eigen::Index i = 0; i < Z.rows(); ++i) B.row(i) = m.basis(Z.row(i));
    Eigen::ColPivHouseholderQR<Matrix> qr(B);
    if (B.rows() < B.cols() || qr.rank() < B.cols())
        throw numerical_error(fmt::format("degenerate sieve design: rank {} with {} terms and {} rows", qr.rank(),
                                          B.cols(), B.rows()));
    m.coef_ = qr.solve(y);
    if (!m.coef_.allFinite()) throw numerical_error("sieve: non-finite coefficients");
    return m;
}

double PolynomialSieve::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    Eigen::RowVectorXd z = (x - std_.mean.transpose()).array() / std_.scale.transpose().array();
    return basis(z).dot(coef_);
}

Vector PolynomialSieve::predict_rows(const Matrix& X) const {
    Vector out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict(X.row(i));
    return out;
}

// ------------------------------------------------------- WeightedDistribution

WeightedDistribution::WeightedDistribution(std::vector<double> values, std::vector<double> weights) {
    if (values.size() != weights.size()) throw config_error("weighted distribution: size mismatch");
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double total = 0.0;
    for (std::size_t i : idx) {
        if (!(weights[i] > 0.0)) continue;
        if (!values_.empty() && values_.back() == values[i]) {
            cum_.back() += weights[i];
        } else {
            values_.push_back(values[i]);
            cum_.push_back(weights[i]);
        }
        total += weights[i];
    }
    double run = 0.0;
    for (auto& c : cum_) {
        run += c;
        c = run / total;
    }
    if (!cum_.empty()) cum_.back() = 1.0;
}

double WeightedDistribution::quantile(double u) const {
    if (values_.empty()) throw numerical_error("quantile of an empty distribution");
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), u - 1e-12);
    if (it == cum_.end()) return values_.back();
    return values_[static_cast<std::size_t>(it - cum_.begin())];
}

double WeightedDistribution::mean() const {
    double prev = 0.0;
    double m = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        m += values_[i] * (cum_[i] - prev);
        prev = cum_[i];
    }
    return m;
}

double WeightedDistribution::cdf(double y) const {
    const auto it = std::upper_bound(values_.begin(), values_.end(), y);
    if (it == values_.begin()) return 0.0;
    return cum_[static_cast<std::size_t>(it - values_.begin()) - 1];
}

WeightedDistribution WeightedDistribution::shifted(double delta) const {
    WeightedDistribution out = *this;
    for (double& v : out.values_) v += delta;
    return out;
}

// --------------------------------------------------------- LocationShiftModel

WeightedDistribution LocationShiftModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return residual_->predict(x).shifted(location_.predict(x));
}

WeightedDistribution LocationShiftModel::predict_training(std::size_t i) const {
    return residual_->predict_training(i).shifted(train_location_(static_cast<Eigen::Index>(i)));
}

// ------------------------------------------------------------- QuantileForest

namespace {

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = -kInf;
};

}  // namespace

std::shared_ptr<QuantileForest> QuantileForest::fit(const Matrix& X, const Vector& y, const ForestConfig& cfg) {
    if (cfg.trees < 1 || cfg.min_leaf < 1) throw config_error("forest needs trees >= 1 and min_leaf >= 1");
    if (!(cfg.sample_fraction >= 0.0 && cfg.sample_fraction <= 1.0))
        throw config_error("forest sample_fraction must lie in [0, 1]");
    if (X.rows() != y.size()) throw data_error("forest: row mismatch");
    if (X.rows() < cfg.min_leaf)
        throw data_error(fmt::format("quantile forest: {} rows is fewer than min_leaf {}", X.rows(), cfg.min_leaf));
    auto f = std::make_shared<QuantileForest>();
    f->X_ = X;
    f->y_ = y;
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    f->order_.resize(static_cast<std::size_t>(n));
    std::iota(f->order_.begin(), f->order_.end(), 0);
    std::stable_sort(f->order_.begin(), f->order_.end(), [&](int a, int b) { return y(a) < y(b); });
    const int mtry = cfg.mtry > 0 ? std::min(cfg.mtry, p) : static_cast<int>(std::ceil(std::sqrt(double(p))));
    const int min_leaf = cfg.min_leaf;
    f->trees_.resize(static_cast<std::size_t>(cfg.trees));

    parallel_for(static_cast<std::size_t>(cfg.trees), [&](std::size_t t) {
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(t)};
        std::mt19937_64 rng(seq);
        std::uniform_int_distribution<int> pick(0, n - 1);
        Tree& tree = f->trees_[t];
        tree.in_bag.assign(static_cast<std::size_t>(n), 0);
        std::vector<int> rows;
        if (cfg.sample_fraction > 0.0) {
            rows.resize(static_cast<std::size_t>(n));
            std::iota(rows.begin(), rows.end(), 0);
            std::shuffle(rows.begin(), rows.end(), rng);
            const int take = std::clamp(static_cast<int>(std::lround(cfg.sample_fraction * n)), std::min(n, min_leaf), n);
            rows.resize(static_cast<std::size_t>(take));
        } else {
            rows.resize(static_cast<std::size_t>(n));
            for (auto& r : rows) r = pick(rng);
        }
        for (int r : rows) {
            auto& c = tree.in_bag[static_cast<std::size_t>(r)];
            if (c < 255) ++c;
        }
        const int count_rows = static_cast<int>(rows.size());
        std::vector<int> features(static_cast<std::size_t>(p));
        std::iota(features.begin(), features.end(), 0);
        std::vector<std::pair<double, double>> buf;

        struct Task {
            int node;
            int begin;
            int end;
        };
        tree.nodes.emplace_back();
        std::vector<Task> stack{{0, 0, count_rows}};
        while (!stack.empty()) {
            const Task task = stack.back();
            stack.pop_back();
            const int count = task.end - task.begin;
            SplitChoice best;
            double lo = kInf;
            double hi = -kInf;
            for (int i = task.begin; i < task.end; ++i) {
                lo = std::min(lo, y(rows[static_cast<std::size_t>(i)]));
                hi = std::max(hi, y(rows[static_cast<std::size_t>(i)]));
            }
            if (count >= 2 * min_leaf && hi > lo) {
                std::shuffle(features.begin(), features.end(), rng);
                double total = 0.0;
                for (int i = task.begin; i < task.end; ++i) total += y(rows[static_cast<std::size_t>(i)]);
                for (int fi = 0; fi < mtry; ++fi) {
                    const int j = features[static_cast<std::size_t>(fi)];
                    buf.clear();
                    for (int i = task.begin; i < task.end; ++i) {
                        const int r = rows[static_cast<std::size_t>(i)];
                        buf.emplace_back(X(r, j), y(r));
                    }
                    std::sort(buf.begin(), buf.end(),
                              [](const auto& a, const auto& b) { return a.first < b.first; });
                    double left = 0.0;
                    for (int i = 1; i < count; ++i) {
                        left += buf[static_cast<std::size_t>(i - 1)].second;
                        if (i < min_leaf || count - i < min_leaf) continue;
                        const double a = buf[static_cast<std::size_t>(i - 1)].first;
                        const double b = buf[static_cast<std::size_t>(i)].first;
                        if (!(a < b)) continue;
                        const double right = total - left;
                        const double gain = left * left / i + right * right / (count - i);
                        if (gain > best.gain) best = {j, 0.5 * (a + b), gain};
                    }
                }
            }
            if (best.feature < 0) {
                Node& leaf = tree.nodes[static_cast<std::size_t>(task.node)];
                leaf.leaf_begin = static_cast<int>(tree.leaf_rows.size());
                for (int i = task.begin; i < task.end; ++i) tree.leaf_rows.push_back(rows[static_cast<std::size_t>(i)]);
                leaf.leaf_end = static_cast<int>(tree.leaf_rows.size());
                continue;
            }
            const auto mid_it = std::partition(rows.begin() + task.begin, rows.begin() + task.end,
                                               [&](int r) { return X(r, best.feature) <= best.threshold; });
            const int mid = static_cast<int>(mid_it - rows.begin());
            const int left_id = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            Node& node = tree.nodes[static_cast<std::size_t>(task.node)];
            node.feature = best.feature;
            node.threshold = best.threshold;
            node.left = left_id;
            node.right = left_id + 1;
            stack.push_back({left_id + 1, mid, task.end});
            stack.push_back({left_id, task.begin, mid});
        }
    });
    return f;
}

const QuantileForest::Node& QuantileForest::leaf_for(const Tree& t, const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    const Node* node = &t.nodes[0];
    while (node->feature >= 0)
        node = &t.nodes[static_cast<std::size_t>(x(node->feature) <= node->threshold ? node->left : node->right)];
    return *node;
}

WeightedDistribution QuantileForest::collect(const std::vector<double>& weight_by_row) const {
    std::vector<double> values;
    std::vector<double> weights;
    for (int r : order_) {
        const double wgt = weight_by_row[static_cast<std::size_t>(r)];
        if (wgt > 0.0) {
            values.push_back(y_(r));
            weights.push_back(wgt);
        }
    }
    return {std::move(values), std::move(weights)};
}

WeightedDistribution QuantileForest::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    std::vector<double> weight(static_cast<std::size_t>(y_.size()), 0.0);
    for (const auto& t : trees_) {
        const Node& leaf = leaf_for(t, x);
        const double share = 1.0 / (leaf.leaf_end - leaf.leaf_begin);
        for (int i = leaf.leaf_begin; i < leaf.leaf_end; ++i) weight[static_cast<std::size_t>(t.leaf_rows[static_cast<std::size_t>(i)])] += share;
    }
    return collect(weight);
}

WeightedDistribution QuantileForest::predict_training(std::size_t row) const {
    std::vector<double> weight(static_cast<std::size_t>(y_.size()), 0.0);
    bool any = false;
    for (const auto& t : trees_) {
        if (t.in_bag[row]) continue;
        any = true;
        const Node& leaf = leaf_for(t, X_.row(static_cast<Eigen::Index>(row)));
        const double share = 1.0 / (leaf.leaf_end - leaf.leaf_begin);
        for (int i = leaf.leaf_begin; i < leaf.leaf_end; ++i) weight[static_cast<std::size_t>(t.leaf_rows[static_cast<std::size_t>(i)])] += share;
    }
    if (!any) throw numerical_error(fmt::format("quantile forest: row {} is in-bag for every tree", row));
    return collect(weight);
}

// ---------------------------------------------------------------- KnnQuantile

std::shared_ptr<KnnQuantile> KnnQuantile::fit(const Matrix& X, const Vector& y, const KnnConfig& cfg) {
    if (X.rows() != y.size()) throw data_error("knn: row mismatch");
    if (X.rows() < 2) throw data_error("knn: need at least two rows");
    auto m = std::make_shared<KnnQuantile>();
    m->std_ = Standardizer::fit(X);
    m->Z_ = m->std_.apply(X);
    m->y_ = y;
    const int n = static_cast<int>(X.rows());
    const int automatic = std::clamp(static_cast<int>(std::lround(std::sqrt(double(n)))), std::min(10, n - 1), n - 1);
    m->k_ = cfg.k > 0 ? std::min(cfg.k, n - 1) : automatic;
    return m;
}

WeightedDistribution KnnQuantile::neighbours(const Eigen::RowVectorXd& z, long skip) const {
    std::vector<std::pair<double, int>> dist;
    dist.reserve(static_cast<std::size_t>(Z_.rows()));
    for (Eigen::Index i = 0; i < Z_.rows(); ++i)
        if (i != skip) dist.emplace_back((Z_.row(i) - z).squaredNorm(), static_cast<int>(i));
    const auto k = static_cast<std::size_t>(k_);
    std::nth_element(dist.begin(), dist.begin() + static_cast<long>(k) - 1, dist.end());
    std::vector<double> values;
    for (std::size_t i = 0; i < k; ++i) values.push_back(y_(dist[i].second));
    return {values, std::vector<double>(k, 1.0)};
}

WeightedDistribution KnnQuantile::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    Eigen::RowVectorXd z = (x - std_.mean.transpose()).array() / std_.scale.transpose().array();
    for (std::size_t j = 0; j < std_.constant.size(); ++j)
        if (std_.constant[j]) z(static_cast<Eigen::Index>(j)) = 0.0;
    return neighbours(z, -1);
}

WeightedDistribution KnnQuantile::predict_training(std::size_t i) const {
    return neighbours(Z_.row(static_cast<Eigen::Index>(i)), static_cast<long>(i));
}

}  // namespace surrosens
