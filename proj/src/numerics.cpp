#include "surrosens/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <thread>

#include <boost/math/special_functions/erf.hpp>

namespace surrosens {

double normal_quantile(double p) {
    if (p <= 0.0) return -kInf;
    if (p >= 1.0) return kInf;
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

namespace {

struct ReferenceRule {
    std::vector<double> x;
    std::vector<double> w;
};

ReferenceRule compute_reference_rule(std::size_t n) {
    if (n == 1) return {{0.0}, {2.0}};
    ReferenceRule rule{std::vector<double>(n), std::vector<double>(n)};
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        // Tricomi initial guess, then Newton on P_n.
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        auto legendre = [n](double t, double& value, double& derivative) {
            double p0 = 1.0;
            double p1 = t;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            value = p1;
            derivative = static_cast<double>(n) * (t * p1 - p0) / (t * t - 1.0);
        };
        double p = 0.0;
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            legendre(z, p, dp);
            const double dz = p / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        legendre(z, p, dp);
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.x[i] = -z;
        rule.x[n - 1 - i] = z;
        rule.w[i] = w;
        rule.w[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.x[n / 2] = 0.0;
    return rule;
}

const ReferenceRule& reference_rule(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<ReferenceRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<ReferenceRule>(compute_reference_rule(n));
    return *slot;
}

std::atomic<unsigned> g_thread_limit{0};

}  // namespace

QuadratureRule gauss_legendre(std::size_t n, double a, double b) {
    if (n == 0) throw config_error("gauss_legendre: need at least one node");
    const auto& ref = reference_rule(n);
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < n; ++i) {
        rule.nodes[i] = mid + half * ref.x[i];
        rule.weights[i] = half * ref.w[i];
    }
    return rule;
}

QuadratureRule probit_gauss_legendre(std::size_t n, double z_max) {
    QuadratureRule z_rule = gauss_legendre(n, -z_max, z_max);
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        rule.nodes[i] = normal_cdf(z_rule.nodes[i]);
        rule.weights[i] = z_rule.weights[i] * normal_pdf(z_rule.nodes[i]);
    }
    return rule;
}

QuadratureRule tanh_sinh(std::size_t n, double a, double b, double t_max) {
    if (n < 3) throw config_error("tanh_sinh: need at least three nodes");
    const double h = 2.0 * t_max / static_cast<double>(n - 1);
    const double len = b - a;
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = -t_max + h * static_cast<double>(i);
        const double s = 0.5 * std::numbers::pi * std::sinh(t);
        const double cs = std::cosh(s);
        rule.nodes[i] = a + len / (1.0 + std::exp(-2.0 * s));
        rule.weights[i] = len * h * 0.25 * std::numbers::pi * std::cosh(t) / (cs * cs);
    }
    return rule;
}

void set_thread_limit(unsigned threads) { g_thread_limit.store(threads); }

unsigned thread_limit() {
    const unsigned limit = g_thread_limit.load();
    if (limit > 0) return limit;
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {
thread_local bool t_in_worker = false;
}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = t_in_worker ? 1 : std::min<std::size_t>(thread_limit(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        t_in_worker = true;
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace surrosens
