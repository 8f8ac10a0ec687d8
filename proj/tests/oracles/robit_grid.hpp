#pragma once

// Brute-force reference implementations used to cross-check the trust
// estimator. Nothing here shares code with the library paths under test: the
// CDF comes from direct quadrature of the density and the fit from an
// exhaustive likelihood scan, not from incomplete-beta series or IRLS.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace oracle {

// Student-t density written out from the definition.
inline double t_pdf(double x, double nu) {
    const double c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                     0.5 * std::log(nu * std::acos(-1.0));
    return std::exp(c - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
}

// Derivative of the density, for the Euler-Maclaurin endpoint correction:
// f'(x) = -f(x) (nu + 1) x / (nu + x^2).
inline double t_pdf_deriv(double x, double nu) {
    return -t_pdf(x, nu) * (nu + 1.0) * x / (nu + x * x);
}

// CDF by cumulative trapezoid integration of the density over [lo, 0], with
// the tail mass F(lo) integrated separately after the substitution u = -1/x
// (which maps (-inf, lo] onto the finite interval [0, -1/lo] and leaves a
// smooth integrand). Symmetry gives the upper half, so log(1 - F(u)) never
// suffers cancellation.
class TCdfTable {
public:
    explicit TCdfTable(double nu, double lo = -60.0, double du = 5e-4)
        : lo_(lo), du_(du) {
        const auto n = static_cast<std::size_t>(std::llround(-lo / du)) + 1;
        table_.resize(n);
        const double d_lo = t_pdf_deriv(lo, nu);
        double acc = tail_mass(nu, -lo);
        table_[0] = acc;
        double prev = t_pdf(lo, nu);
        for (std::size_t i = 1; i < n; ++i) {
            const double x = lo + du * static_cast<double>(i);
            const double cur = t_pdf(x, nu);
            acc += 0.5 * (prev + cur) * du;
            // Endpoint correction knocks the trapezoid error down from
            // O(du^2) to O(du^4): int_a^b f = T - du^2/12 (f'(b) - f'(a)).
            table_[i] = acc - du * du / 12.0 * (t_pdf_deriv(x, nu) - d_lo);
            prev = cur;
        }
        // The cumulative sum should land on exactly 1/2 at x = 0; scale the
        // residual quadrature drift away.
        const double scale = 0.5 / table_.back();
        for (double& v : table_) v *= scale;
    }

    double cdf(double x) const { return x <= 0.0 ? lower(x) : 1.0 - lower(-x); }

    double log_cdf(double x) const {
        return x <= 0.0 ? std::log(lower(x)) : std::log1p(-lower(-x));
    }

private:
    // Mass of the lower tail: int_{-inf}^{-L} f(x) dx. The substitution
    // u = -1/x turns it into int_0^{1/L} f(1/u) / u^2 du, whose integrand is
    // smooth on the closed interval for nu >= 1 (at u = 0 it tends to zero
    // for nu > 1 and to f(0) for nu = 1), so a fine trapezoid rule nails it.
    static double tail_mass(double nu, double L) {
        constexpr std::size_t panels = 8192;
        const double h = 1.0 / (L * static_cast<double>(panels));
        double acc = 0.5 * (nu > 1.0 ? 0.0 : t_pdf(0.0, nu));
        for (std::size_t k = 1; k < panels; ++k) {
            const double u = h * static_cast<double>(k);
            acc += t_pdf(1.0 / u, nu) / (u * u);
        }
        const double u_hi = 1.0 / L;
        acc += 0.5 * t_pdf(L, nu) / (u_hi * u_hi);
        return acc * h;
    }

    double lower(double x) const {  // x <= 0
        if (x <= lo_) return table_.front();
        const double pos = (x - lo_) / du_;
        const auto i = std::min(static_cast<std::size_t>(pos), table_.size() - 2);
        const double frac = pos - static_cast<double>(i);
        return table_[i] + frac * (table_[i + 1] - table_[i]);
    }

    double lo_;
    double du_;
    std::vector<double> table_;
};

// One evidence record on the half-unit feature lattice: the features are
// (a/2, b/2) with a, b integers in [-2, 2], and s is the binary outcome.
struct GridRecord {
    int a = 0;
    int b = 0;
    int s = 0;
};

struct GridFit {
    bool usable = false;     // argmax interior, curvature well conditioned
    double beta1 = 0.0;      // refined coefficients
    double beta2 = 0.0;
    double raw_beta1 = 0.0;  // lattice argmax before refinement
    double raw_beta2 = 0.0;
    double log_lik = 0.0;    // at the lattice argmax
};

// Exhaustive robit log-likelihood scan over beta = (i, j) * step for
// i, j in [-K, K]. Every linear predictor is u = (a i + b j) * step / 2 with
// integer a i + b j, so the log-CDF values live on one precomputed lattice
// and the scan is pure table walks. The lattice argmax is then polished by
// one Newton step on the quadratic through its 3x3 neighborhood, which stays
// a function of the same grid values.
class RobitGridSearch {
public:
    explicit RobitGridSearch(double nu, double step = 0.01, double beta_max = 10.0)
        : step_(step), K_(static_cast<int>(std::llround(beta_max / step))) {
        const TCdfTable cdf(nu);
        M_ = 4 * K_;  // |a i + b j| <= 2K + 2K
        log_cdf_.resize(2 * static_cast<std::size_t>(M_) + 1);
        for (int m = -M_; m <= M_; ++m) {
            log_cdf_[static_cast<std::size_t>(m + M_)] = cdf.log_cdf(0.5 * step_ * m);
        }
    }

    GridFit fit(const std::vector<GridRecord>& records) const {
        // Fold s = 0 records through 1 - F(u) = F(-u) and merge duplicates,
        // so each record group is one table lookup per lattice point.
        struct Group {
            int a, b;
            double count;
        };
        std::vector<Group> groups;
        for (const auto& rec : records) {
            const int a = rec.s == 1 ? rec.a : -rec.a;
            const int b = rec.s == 1 ? rec.b : -rec.b;
            bool merged = false;
            for (auto& g : groups) {
                if (g.a == a && g.b == b) {
                    g.count += 1.0;
                    merged = true;
                    break;
                }
            }
            if (!merged) groups.push_back({a, b, 1.0});
        }

        double best = -std::numeric_limits<double>::infinity();
        int best_i = 0;
        int best_j = 0;
        for (int i = -K_; i <= K_; ++i) {
            std::vector<std::ptrdiff_t> idx(groups.size());
            for (std::size_t g = 0; g < groups.size(); ++g) {
                idx[g] = static_cast<std::ptrdiff_t>(groups[g].a) * i -
                         static_cast<std::ptrdiff_t>(groups[g].b) * K_ + M_;
            }
            for (int j = -K_; j <= K_; ++j) {
                double ll = 0.0;
                for (std::size_t g = 0; g < groups.size(); ++g) {
                    ll += groups[g].count * log_cdf_[static_cast<std::size_t>(idx[g])];
                    idx[g] += groups[g].b;
                }
                if (ll > best) {
                    best = ll;
                    best_i = i;
                    best_j = j;
                }
            }
        }

        GridFit out;
        out.raw_beta1 = best_i * step_;
        out.raw_beta2 = best_j * step_;
        out.log_lik = best;
        if (std::abs(best_i) > K_ - 2 || std::abs(best_j) > K_ - 2) {
            return out;  // argmax at or next to the boundary: not identified
        }

        // Quadratic through the 3x3 stencil around the argmax.
        const auto ll_at = [&](int i, int j) {
            double ll = 0.0;
            for (const auto& g : groups) {
                ll += g.count *
                      log_cdf_[static_cast<std::size_t>(g.a * i + g.b * j + M_)];
            }
            return ll;
        };
        const double c0 = best;
        const double cp0 = ll_at(best_i + 1, best_j), cm0 = ll_at(best_i - 1, best_j);
        const double c0p = ll_at(best_i, best_j + 1), c0m = ll_at(best_i, best_j - 1);
        const double cpp = ll_at(best_i + 1, best_j + 1), cpm = ll_at(best_i + 1, best_j - 1);
        const double cmp = ll_at(best_i - 1, best_j + 1), cmm = ll_at(best_i - 1, best_j - 1);
        const double g1 = 0.5 * (cp0 - cm0);
        const double g2 = 0.5 * (c0p - c0m);
        const double h11 = cp0 - 2.0 * c0 + cm0;
        const double h22 = c0p - 2.0 * c0 + c0m;
        const double h12 = 0.25 * (cpp - cpm - cmp + cmm);
        const double det = h11 * h22 - h12 * h12;
        // Identifiability gate: the likelihood must curve downward in every
        // direction with enough margin that one lattice step resolves it.
        constexpr double min_curv = 2e-5;  // per lattice-step^2, in nats
        if (!(h11 < -min_curv) || !(h22 < -min_curv) || !(det > min_curv * min_curv)) {
            return out;
        }
        double d1 = -(h22 * g1 - h12 * g2) / det;
        double d2 = -(h11 * g2 - h12 * g1) / det;
        // The argmax bounds the optimum to within one lattice step.
        if (std::abs(d1) > 1.0 || std::abs(d2) > 1.0) return out;
        out.beta1 = (best_i + d1) * step_;
        out.beta2 = (best_j + d2) * step_;
        out.usable = true;
        return out;
    }

private:
    double step_;
    int K_;
    int M_ = 0;
    std::vector<double> log_cdf_;
};

}  // namespace oracle
