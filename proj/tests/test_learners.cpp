#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "surrosens/error.hpp"
#include "surrosens/learners.hpp"
#include "surrosens/numerics.hpp"
#include "surrosens/oracle_dgp.hpp"

using namespace surrosens;

namespace {

Matrix gaussian_design(int n, int p, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Matrix X(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) X(i, j) = nd(rng);
    return X;
}

// Standardise with population moments, independent of the library helper.
Matrix standardise(const Matrix& X) {
    Matrix Z = X;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double m = X.col(j).mean();
        const double sd = std::sqrt((X.col(j).array() - m).square().mean());
        Z.col(j) = (X.col(j).array() - m) / sd;
    }
    return Z;
}

}  // namespace

TEST_CASE("folds are balanced and seeded") {
    const auto a = random_folds(103, 5, 7);
    const auto b = random_folds(103, 5, 7);
    CHECK(a == b);
    std::vector<int> counts(5, 0);
    for (int f : a) ++counts[static_cast<std::size_t>(f)];
    for (int c : counts) CHECK((c == 20 || c == 21));
    CHECK_THROWS_AS(random_folds(3, 5, 0), Error);
}

TEST_CASE("lasso at a fixed penalty satisfies the KKT conditions") {
    std::mt19937_64 rng(11);
    const Matrix X = gaussian_design(400, 6, rng);
    std::normal_distribution<double> nd;
    Vector y(400);
    for (int i = 0; i < 400; ++i) y(i) = 1.0 + 2.0 * X(i, 0) - 1.0 * X(i, 2) + 0.1 * X(i, 4) + nd(rng);
    const double lambda = 0.2;
    const auto m = LassoLinear::fit_fixed(X, y, lambda, {.tol = 1e-14});
    const Matrix Z = standardise(X);
    const Vector r = y - m.predict_rows(X);
    CHECK(r.mean() == doctest::Approx(0.0).epsilon(1e-9));
    const Vector beta_std = m.coefficients().array() *
                            (X.rowwise() - X.colwise().mean()).array().square().colwise().mean().sqrt().transpose();
    for (Eigen::Index j = 0; j < 6; ++j) {
        const double g = Z.col(j).dot(r) / 400.0;
        if (std::abs(beta_std(j)) > 1e-10) CHECK(g == doctest::Approx(lambda * (beta_std(j) > 0 ? 1.0 : -1.0)).epsilon(1e-5));
        else CHECK(std::abs(g) <= lambda + 1e-7);
    }
    CHECK(beta_std(4) == 0.0);
}

TEST_CASE("lasso with vanishing penalty matches least squares") {
    std::mt19937_64 rng(12);
    const Matrix X = gaussian_design(200, 4, rng);
    std::normal_distribution<double> nd;
    Vector y(200);
    for (int i = 0; i < 200; ++i) y(i) = -0.5 + X(i, 0) + 3.0 * X(i, 1) + nd(rng);
    Matrix D(200, 5);
    D.col(0).setOnes();
    D.rightCols(4) = X;
    const Vector ols = (D.transpose() * D).ldlt().solve(D.transpose() * y);
    const auto m = LassoLinear::fit_fixed(X, y, 0.0, {.tol = 1e-16});
    CHECK(m.intercept() == doctest::Approx(ols(0)).epsilon(1e-6));
    for (int j = 0; j < 4; ++j) CHECK(m.coefficients()(j) == doctest::Approx(ols(j + 1)).epsilon(1e-6));
}

TEST_CASE("cross-validated lasso recovers a sparse truth") {
    std::mt19937_64 rng(13);
    const Matrix X = gaussian_design(1000, 10, rng);
    std::normal_distribution<double> nd;
    Vector y(1000);
    for (int i = 0; i < 1000; ++i) y(i) = 2.0 + 1.5 * X(i, 1) - 2.0 * X(i, 7) + 0.5 * nd(rng);
    const auto m = LassoLinear::fit(X, y, {.seed = 3});
    CHECK(m.coefficients()(1) == doctest::Approx(1.5).epsilon(0.03));
    CHECK(m.coefficients()(7) == doctest::Approx(-2.0).epsilon(0.03));
    CHECK(m.intercept() == doctest::Approx(2.0).epsilon(0.03));
    for (int j : {0, 2, 3, 4, 5, 6, 8, 9}) CHECK(std::abs(m.coefficients()(j)) < 0.05);
}

TEST_CASE("lasso at the top of the path is constant") {
    std::mt19937_64 rng(14);
    const Matrix X = gaussian_design(150, 3, rng);
    Vector y = X.col(0) + Vector::Constant(150, 4.0);
    const Matrix Z = standardise(X);
    double lambda_max = 0.0;
    for (int j = 0; j < 3; ++j) lambda_max = std::max(lambda_max, std::abs(Z.col(j).dot((y.array() - y.mean()).matrix())) / 150.0);
    const auto m = LassoLinear::fit_fixed(X, y, lambda_max * (1.0 + 1e-9));
    CHECK(m.coefficients().cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.intercept() == doctest::Approx(y.mean()));
    const auto below = LassoLinear::fit_fixed(X, y, lambda_max * 0.9);
    CHECK(below.coefficients()(0) > 0.0);
}

TEST_CASE("lasso ignores constant columns") {
    std::mt19937_64 rng(15);
    Matrix X = gaussian_design(120, 2, rng);
    X.col(1).setConstant(3.0);
    const Vector y = 2.0 * X.col(0);
    const auto m = LassoLinear::fit(X, y);
    CHECK(m.coefficients()(1) == 0.0);
    CHECK(m.predict(Eigen::RowVector2d(1.0, 3.0)) == doctest::Approx(2.0).epsilon(1e-2));
}

TEST_CASE("logistic lasso") {
    SUBCASE("balanced labels with a useless feature give one half") {
        Matrix X(100, 1);
        Vector y(100);
        for (int i = 0; i < 100; ++i) {
            X(i, 0) = (i % 10) / 10.0;
            y(i) = (i / 10) % 2;
        }
        const auto m = LassoLogistic::fit(X, y);
        CHECK(m.predict(Eigen::RowVectorXd::Constant(1, 0.3)) == doctest::Approx(0.5).epsilon(1e-6));
    }
    SUBCASE("single class is a data error") {
        CHECK_THROWS_AS(LassoLogistic::fit(Matrix::Zero(10, 1), Vector::Ones(10)), Error);
    }
    SUBCASE("tiny penalty matches Newton maximum likelihood") {
        std::mt19937_64 rng(16);
        const Matrix X = gaussian_design(800, 2, rng);
        std::uniform_real_distribution<double> ud;
        Vector y(800);
        for (int i = 0; i < 800; ++i) y(i) = ud(rng) < 1.0 / (1.0 + std::exp(-(0.3 + X(i, 0) - 0.7 * X(i, 1)))) ? 1.0 : 0.0;
        Matrix D(800, 3);
        D.col(0).setOnes();
        D.rightCols(2) = X;
        Vector b = Vector::Zero(3);
        for (int it = 0; it < 50; ++it) {
            Vector pr(800);
            Vector wt(800);
            for (int i = 0; i < 800; ++i) {
                pr(i) = 1.0 / (1.0 + std::exp(-D.row(i).dot(b)));
                wt(i) = pr(i) * (1.0 - pr(i));
            }
            b += (D.transpose() * wt.asDiagonal() * D).ldlt().solve(D.transpose() * (y - pr));
        }
        const auto m = LassoLogistic::fit(X, y, {.lambda_min_ratio = 1e-7, .tol = 1e-14});
        const double p_ml = 1.0 / (1.0 + std::exp(-(b(0) + 0.5 * b(1) - 0.5 * b(2))));
        CHECK(m.predict(Eigen::RowVector2d(0.5, -0.5)) == doctest::Approx(p_ml).epsilon(0.02));
        CHECK(m.coefficients()(0) == doctest::Approx(1.0).epsilon(0.25));
    }
    SUBCASE("surrogacy score of the design is learned") {
        DgpConfig cfg;
        cfg.rho = 0.4;
        cfg.n = 10000;
        cfg.seed = 5;
        cfg.experimental_share = 0.5;
        const auto lat = simulate_latent(cfg);
        std::vector<Eigen::Index> rows;
        for (std::size_t i = 0; i < cfg.n; ++i)
            if (lat.sample[i] == SampleTag::Experimental) rows.push_back(static_cast<Eigen::Index>(i));
        Matrix X(static_cast<Eigen::Index>(rows.size()), 2);
        Vector y(X.rows());
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            const auto i = static_cast<std::size_t>(rows[static_cast<std::size_t>(r)]);
            X(r, 0) = lat.s[i];
            X(r, 1) = lat.x[i];
            y(r) = lat.w_marginal[i];
        }
        const auto m = LassoLogistic::fit(X, y);
        double mae = 0.0;
        for (int a = 0; a < 40; ++a)
            for (int c = 0; c < 10; ++c) {
                const double x = (c + 0.5) / 10.0;
                const double s = x + 0.5 + (a - 20) * 0.1;
                mae += std::abs(m.predict(Eigen::RowVector2d(s, x)) - true_surrogacy_score(s, x, cfg.rho));
            }
        CHECK(mae / 400.0 < 0.03);
    }
}

TEST_CASE("polynomial sieve") {
    std::mt19937_64 rng(17);
    const Matrix X = gaussian_design(60, 2, rng);
    Vector y(60);
    for (int i = 0; i < 60; ++i)
        y(i) = 1.0 - X(i, 0) + 2.0 * X(i, 1) + 0.5 * X(i, 0) * X(i, 0) - 0.3 * X(i, 0) * X(i, 1) + X(i, 1) * X(i, 1);
    const auto m = PolynomialSieve::fit(X, y, 2);
    CHECK(m.terms() == 6);
    const Eigen::RowVector2d q(0.7, -1.2);
    CHECK(m.predict(q) == doctest::Approx(1.0 - 0.7 - 2.4 + 0.5 * 0.49 + 0.3 * 0.84 + 1.44).epsilon(1e-10));
    Matrix bad(60, 2);
    bad.col(0) = X.col(0);
    bad.col(1) = (2.0 * X.col(0)).array() + 1.0;
    CHECK_THROWS_AS(PolynomialSieve::fit(bad, y, 2), Error);
    CHECK_THROWS_AS(PolynomialSieve::fit(X.topRows(4), y.head(4), 2), Error);
    const auto lin = PolynomialSieve::fit(X, y, 1);
    CHECK(lin.terms() == 3);
}

TEST_CASE("weighted distribution hand values") {
    const WeightedDistribution d({3.0, 1.0, 2.0, 1.0}, {1.0, 1.0, 2.0, 0.0});
    CHECK(d.support().size() == 3);
    CHECK(d.quantile(0.0) == 1.0);
    CHECK(d.quantile(0.25) == 1.0);
    CHECK(d.quantile(0.2500001) == 2.0);
    CHECK(d.quantile(0.75) == 2.0);
    CHECK(d.quantile(0.76) == 3.0);
    CHECK(d.quantile(1.0) == 3.0);
    CHECK(d.mean() == doctest::Approx(2.0));
    CHECK(d.cdf(0.5) == 0.0);
    CHECK(d.cdf(1.0) == doctest::Approx(0.25));
    CHECK(d.cdf(2.5) == doctest::Approx(0.75));
    CHECK(d.cdf(9.0) == 1.0);
    const WeightedDistribution ties({1.0, 1.0}, {1.0, 1.0});
    CHECK(ties.support().size() == 1);
    CHECK_THROWS_AS(WeightedDistribution({}, {}).quantile(0.5), Error);
}

TEST_CASE("quantile forest") {
    std::mt19937_64 rng(18);
    std::uniform_real_distribution<double> ud;
    std::normal_distribution<double> nd;
    const int n = 3000;
    Matrix X(n, 2);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = 4.0 * ud(rng) - 2.0;
        X(i, 1) = ud(rng);
        y(i) = X(i, 0) + 0.5 * X(i, 1) + 0.5 * nd(rng);
    }
    const auto f = QuantileForest::fit(X, y, {.trees = 200, .min_leaf = 10, .seed = 4});

    SUBCASE("median tracks the conditional median") {
        double se = 0.0;
        int count = 0;
        for (double a = -1.5; a <= 1.5; a += 0.25)
            for (double b = 0.1; b < 1.0; b += 0.2) {
                const double e = f->predict(Eigen::RowVector2d(a, b)).quantile(0.5) - (a + 0.5 * b);
                se += e * e;
                ++count;
            }
        CHECK(std::sqrt(se / count) < 0.25);
    }
    SUBCASE("quantiles are monotone in the level") {
        const auto d = f->predict(Eigen::RowVector2d(0.3, 0.4));
        double prev = -kInf;
        for (double u = 0.01; u < 1.0; u += 0.01) {
            const double q = d.quantile(u);
            CHECK(q >= prev);
            prev = q;
        }
        CHECK(d.quantile(0.9) - d.quantile(0.1) == doctest::Approx(2.0 * 1.2816 * 0.5).epsilon(0.35));
    }
    SUBCASE("out-of-bag predictions come from other rows") {
        for (std::size_t i = 0; i < 20; ++i) {
            const auto d = f->predict_training(i);
            CHECK(d.cdf(y(static_cast<Eigen::Index>(i))) - d.cdf(std::nextafter(y(static_cast<Eigen::Index>(i)), -kInf)) == 0.0);
        }
        const auto full = f->predict(X.row(0));
        CHECK(full.cdf(y(0)) - full.cdf(std::nextafter(y(0), -kInf)) > 0.0);
    }
    SUBCASE("seeded fits agree") {
        const auto g = QuantileForest::fit(X, y, {.trees = 200, .min_leaf = 10, .seed = 4});
        CHECK(g->predict(Eigen::RowVector2d(0.1, 0.2)).quantile(0.3) == f->predict(Eigen::RowVector2d(0.1, 0.2)).quantile(0.3));
    }
}

TEST_CASE("quantile forest on a constant outcome") {
    std::mt19937_64 rng(19);
    const Matrix X = gaussian_design(200, 3, rng);
    const auto f = QuantileForest::fit(X, Vector::Constant(200, 2.5), {.trees = 20, .seed = 1});
    const auto d = f->predict(Eigen::RowVector3d(0.0, 1.0, -1.0));
    CHECK(d.quantile(0.01) == 2.5);
    CHECK(d.quantile(0.99) == 2.5);
    CHECK_THROWS_AS(QuantileForest::fit(X.topRows(5), Vector::Zero(5), {.min_leaf = 10}), Error);
}

TEST_CASE("nearest-neighbour quantiles") {
    Matrix X(50, 1);
    Vector y(50);
    for (int i = 0; i < 50; ++i) {
        X(i, 0) = i;
        y(i) = 10.0 * i;
    }
    const auto m = KnnQuantile::fit(X, y, {.k = 5});
    const auto d = m->predict(Eigen::RowVectorXd::Constant(1, 20.2));
    CHECK(d.support() == std::vector<double>{180.0, 190.0, 200.0, 210.0, 220.0});
    const auto loo = m->predict_training(20);
    CHECK(loo.cdf(200.0) - loo.cdf(199.0) == 0.0);
    CHECK(loo.support().size() == 5);
    const auto auto_k = KnnQuantile::fit(X, y);
    CHECK(auto_k->predict(Eigen::RowVectorXd::Constant(1, 0.0)).support().size() == 10);
}
