#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "oracles.hpp"
#include "surrosens/dml.hpp"
#include "surrosens/oracle_dgp.hpp"

namespace population {

using namespace surrosens;

// Gauss-Legendre on [a, b] from Boost's tabulated nodes.
struct Rule {
    std::vector<double> x;
    std::vector<double> w;
};

inline Rule gauss_rule(double a, double b) {
    using G = boost::math::quadrature::gauss<double, 40>;
    Rule r;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < G::abscissa().size(); ++i) {
        for (double sign : {-1.0, 1.0}) {
            r.x.push_back(mid + sign * half * G::abscissa()[i]);
            r.w.push_back(half * G::weights()[i]);
        }
    }
    return r;
}

enum class Direction { RhoSX, RhoX, PhiSX, Mu1, Mu0, MuBar1, MuBar0, Cutoff };

inline const char* direction_name(Direction d) {
    switch (d) {
        case Direction::RhoSX: return "rho(s,x)";
        case Direction::RhoX: return "rho(x)";
        case Direction::PhiSX: return "phi(s,x)";
        case Direction::Mu1: return "mu1";
        case Direction::Mu0: return "mu0";
        case Direction::MuBar1: return "mubar1";
        case Direction::MuBar0: return "mubar0";
        case Direction::Cutoff: return "cutoff";
    }
    return "";
}

inline double logit_shift(double p, double delta) {
    const double l = std::log(p / (1.0 - p)) + delta;
    return 1.0 / (1.0 + std::exp(-l));
}

inline double direction_sx(double s, double x) { return std::cos(1.3 * s) + x - 0.5; }
inline double direction_x(double x) { return 2.0 * (x - 0.5); }

// Population expectation of the moment under the simulation design at
// oracle nuisances shifted by eps along one direction. Integrates X on
// [0,1], S | W, X ~ N(x + w, 1) and Y | S, X ~ N(s + x/2, 1).
class PopulationMoment {
public:
    PopulationMoment(const DgpOracle& oracle, NuisanceTarget target) : o_(oracle), t_(std::move(target)) {
        x_rule_ = gauss_rule(0.0, 1.0);
        z_rule_ = gauss_rule(-8.5, 8.5);
        if (t_.worst_case()) {
            for (double x : x_rule_.x)
                for (int w : {0, 1}) mubar_[{x, w}] = o_.cond_mean_bound(*t_.bound, w, x);
            return;
        }
        // Smooth copula: take mu_w = E[h_w(Y) | s, x] and d from the same
        // discretised dual, so the population nuisances match the moment.
        for (double x : x_rule_.x) {
            for (int w : {0, 1}) {
                double mubar[2] = {0.0, 0.0};
                for (std::size_t iz = 0; iz < z_rule_.x.size(); ++iz) {
                    const double s = x + w + z_rule_.x[iz];
                    const auto key = std::make_pair(s, x);
                    if (!rows_.count(key)) {
                        const double m = s + 0.5 * x;
                        const RowIntegrator integ(t_.copula, 1.0 - o_.surrogacy(s, x),
                                                  [&](double u) { return o_.quantile(u, s, x); });
                        const Rule y = gauss_rule(m - 9.0, m + 9.0);
                        std::vector<double> duals;
                        MomentRow r;
                        r.phi = o_.phi();
                        r.rho_x = o_.propensity_x(x);
                        r.rho_sx = o_.surrogacy(s, x);
                        r.phi_sx = o_.selection(s, x);
                        r.cutoff = integ.d_weight();
                        for (std::size_t i = 0; i < y.x.size(); ++i) {
                            duals.push_back(integ.h_dual(1, y.x[i]));
                            duals.push_back(integ.h_dual(0, y.x[i]));
                            const double wt = y.w[i] * oracle::phi(y.x[i] - m);
                            r.mu1 += wt * duals[duals.size() - 2];
                            r.mu0 += wt * duals.back();
                        }
                        rows_.emplace(key, r);
                        dual_cache_.emplace(key, std::move(duals));
                    }
                    const double wz = z_rule_.w[iz] * oracle::phi(z_rule_.x[iz]);
                    mubar[1] += wz * rows_.at(key).mu1;
                    mubar[0] += wz * rows_.at(key).mu0;
                }
                mubar_[{x, w}] = mubar[w];
            }
        }
        for (auto& [key, r] : rows_) {
            r.mubar1 = mubar_.at({key.second, 1});
            r.mubar0 = mubar_.at({key.second, 0});
        }
    }

    double operator()(Direction dir, double eps, double tau) {
        const double rho = o_.config().rho;
        const double p_e = o_.phi();
        double total = 0.0;
        for (std::size_t ix = 0; ix < x_rule_.x.size(); ++ix) {
            const double x = x_rule_.x[ix];
            for (int w : {0, 1}) {
                const double pw = w ? rho : 1.0 - rho;
                for (std::size_t iz = 0; iz < z_rule_.x.size(); ++iz) {
                    const double s = x + w + z_rule_.x[iz];
                    const double weight = x_rule_.w[ix] * pw * z_rule_.w[iz] * oracle::phi(z_rule_.x[iz]);
                    MomentRow base = row_at(s, x, dir, eps);
                    // experimental: W | s, x ~ Bernoulli(rho(s, x))
                    const double rsx = o_.surrogacy(s, x);
                    double e_part = 0.0;
                    for (int wi : {0, 1}) {
                        MomentRow r = base;
                        r.experimental = true;
                        r.w = wi;
                        e_part += (wi ? rsx : 1.0 - rsx) * evaluate_moment(r, tau, t_).value;
                    }
                    const double o_part = observational(base, s, x, dir, eps, tau);
                    total += weight * (p_e * e_part + (1.0 - p_e) * o_part);
                }
            }
        }
        return total;
    }

private:
    MomentRow row_at(double s, double x, Direction dir, double eps) {
        const auto key = std::make_pair(s, x);
        auto it = rows_.find(key);
        if (it == rows_.end()) it = rows_.emplace(key, oracle_row(s, x)).first;
        MomentRow r = it->second;
        const double g = direction_sx(s, x);
        switch (dir) {
            case Direction::RhoSX: r.rho_sx = logit_shift(r.rho_sx, eps * g); break;
            case Direction::RhoX: r.rho_x = logit_shift(r.rho_x, eps * direction_x(x)); break;
            case Direction::PhiSX: r.phi_sx = logit_shift(r.phi_sx, eps * g); break;
            case Direction::Mu1: r.mu1 += eps * g; break;
            case Direction::Mu0: r.mu0 += eps * g; break;
            case Direction::MuBar1: r.mubar1 += eps * direction_x(x); break;
            case Direction::MuBar0: r.mubar0 += eps * direction_x(x); break;
            case Direction::Cutoff: r.cutoff += eps * g; break;
        }
        return r;
    }

    MomentRow oracle_row(double s, double x) const {
        MomentRow r;
        r.phi = o_.phi();
        r.rho_x = o_.propensity_x(x);
        r.rho_sx = o_.surrogacy(s, x);
        r.phi_sx = o_.selection(s, x);
        r.cutoff = o_.cutoff(*t_.bound, s, x);
        r.mu1 = o_.wsi_bound(*t_.bound, 1, s, x);
        r.mu0 = o_.wsi_bound(*t_.bound, 0, s, x);
        r.mubar1 = mubar_.at({x, 1});
        r.mubar0 = mubar_.at({x, 0});
        return r;
    }

    double observational(MomentRow r, double s, double x, Direction dir, double eps, double tau) {
        r.experimental = false;
        r.w = -1;
        const double m = s + 0.5 * x;
        const double lo = m - 9.0, hi = m + 9.0;
        double out = 0.0;
        auto add_piece = [&](double a, double b, auto&& value) {
            if (b <= a) return;
            const Rule y = gauss_rule(a, b);
            for (std::size_t i = 0; i < y.x.size(); ++i) out += y.w[i] * oracle::phi(y.x[i] - m) * value(y.x[i]);
        };
        if (t_.worst_case()) {
            const double k = std::clamp(r.cutoff, lo, hi);
            auto value = [&](double y) {
                r.y = y;
                return evaluate_moment(r, tau, t_).value;
            };
            add_piece(lo, k, value);
            add_piece(k, hi, value);
            return out;
        }
        const bool reuse = dir != Direction::RhoSX || eps == 0.0;
        const auto key = std::make_pair(s, x);
        std::vector<double>* cached = nullptr;
        if (reuse) {
            auto it = dual_cache_.find(key);
            if (it != dual_cache_.end()) cached = &it->second;
        }
        std::vector<double> duals;
        if (!cached) {
            const RowIntegrator integ(t_.copula, 1.0 - r.rho_sx, [&](double u) { return o_.quantile(u, s, x); });
            const Rule y = gauss_rule(lo, hi);
            for (double yi : y.x) {
                duals.push_back(integ.h_dual(1, yi));
                duals.push_back(integ.h_dual(0, yi));
            }
            if (reuse) cached = &(dual_cache_[key] = duals);
        }
        const std::vector<double>& d = cached ? *cached : duals;
        std::size_t idx = 0;
        add_piece(lo, hi, [&](double y) {
            r.y = y;
            r.dual1 = d[2 * idx];
            r.dual0 = d[2 * idx + 1];
            ++idx;
            return evaluate_moment(r, tau, t_).value;
        });
        return out;
    }

    const DgpOracle& o_;
    NuisanceTarget t_;
    Rule x_rule_;
    Rule z_rule_;
    std::map<std::pair<double, int>, double> mubar_;
    std::map<std::pair<double, double>, MomentRow> rows_;
    std::map<std::pair<double, double>, std::vector<double>> dual_cache_;
};

struct OrthogonalityResult {
    double max_diff;
    double slope;
};

inline OrthogonalityResult orthogonality(PopulationMoment& pm, Direction dir) {
    const double base = pm(dir, 0.0, 0.0);
    std::vector<double> le, ld;
    double max_diff = 0.0;
    for (double eps : {0.2, 0.1, 0.05}) {
        const double d = std::abs(pm(dir, eps, 0.0) - base);
        max_diff = std::max(max_diff, d);
        le.push_back(std::log(eps));
        ld.push_back(std::log(std::max(d, 1e-300)));
    }
    const double me = (le[0] + le[1] + le[2]) / 3.0, md = (ld[0] + ld[1] + ld[2]) / 3.0;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 3; ++i) {
        num += (le[i] - me) * (ld[i] - md);
        den += (le[i] - me) * (le[i] - me);
    }
    return {max_diff, num / den};
}

}  // namespace population
