#include "trustfield/logittrust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "trustfield/errors.hpp"

namespace trustfield::logittrust {
namespace {

constexpr double kUClamp = 30.0;
constexpr double kDenFloor = 1e-12;

void check_nu(double nu) {
    if (!(nu > 0.0)) {
        throw std::domain_error("student-t: degrees of freedom must be positive, got " +
                                std::to_string(nu));
    }
}

double log_pdf_norm(double nu) {
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
           0.5 * std::log(nu * std::numbers::pi);
}

// Continued fraction for the regularized incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
    constexpr double eps = 3e-16;
    constexpr double tiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    throw NumericalError("incomplete beta continued fraction did not converge");
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(log_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return bt * beta_cf(a, b, x) / a;
    }
    return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

// Student-t evaluator with per-nu constants hoisted out of the hot loop.
// Integer degrees of freedom take the closed trigonometric form
// (arctan series), everything else the incomplete beta route.
class TDist {
public:
    explicit TDist(double nu) : nu_(nu), log_norm_(log_pdf_norm(nu)) {
        check_nu(nu);
        const double rounded = std::round(nu);
        if (rounded >= 1.0 && rounded <= 64.0 && std::abs(nu - rounded) == 0.0) {
            int_nu_ = static_cast<int>(rounded);
            sqrt_nu_ = std::sqrt(nu);
            // Series coefficients: odd nu uses c_j *= 2j/(2j+1) on cos^{2j+1},
            // even nu uses c_j *= (2j-1)/(2j) on cos^{2j}.
            double c = 1.0;
            if (int_nu_ % 2 == 1) {
                for (int j = 0; j <= (int_nu_ - 3) / 2; ++j) {
                    if (j > 0) c *= (2.0 * j) / (2.0 * j + 1.0);
                    coeffs_.push_back(c);
                }
            } else {
                for (int j = 0; 2 * j <= int_nu_ - 2; ++j) {
                    if (j > 0) c *= (2.0 * j - 1.0) / (2.0 * j);
                    coeffs_.push_back(c);
                }
            }
        }
    }

    double nu() const { return nu_; }

    double pdf(double x) const {
        return std::exp(log_norm_ - 0.5 * (nu_ + 1.0) * std::log1p(x * x / nu_));
    }

    double cdf(double x) const {
        if (x == 0.0) return 0.5;
        if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
        if (std::isinf(x)) return x > 0.0 ? 1.0 : 0.0;
        if (int_nu_ > 0) return cdf_integer(x);
        const double z = nu_ / (nu_ + x * x);
        const double tail = 0.5 * incomplete_beta(0.5 * nu_, 0.5, z);
        return x > 0.0 ? 1.0 - tail : tail;
    }

private:
    double cdf_integer(double x) const {
        const double theta = std::atan2(x, sqrt_nu_);
        const double sin_t = std::sin(theta);
        const double cos_t = std::cos(theta);
        const double cos2 = cos_t * cos_t;
        double sum = 0.0;
        double pow_cos = (int_nu_ % 2 == 1) ? cos_t : 1.0;
        for (const double c : coeffs_) {
            sum += c * pow_cos;
            pow_cos *= cos2;
        }
        // A(x) is odd in x; both branches fold into 0.5 + A/2.
        double a;
        if (int_nu_ % 2 == 1) {
            a = (2.0 / std::numbers::pi) * (theta + sin_t * sum);
        } else {
            a = sin_t * sum;
        }
        return std::clamp(0.5 + 0.5 * a, 0.0, 1.0);
    }

    double nu_ = 0.0;
    double log_norm_ = 0.0;
    int int_nu_ = 0;  // 0 when the closed form does not apply
    double sqrt_nu_ = 0.0;
    std::vector<double> coeffs_;
};

double sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

void check_params(const TrustParams& params) {
    if (!(params.nu0 > 0.0)) {
        throw ConfigError("trust: nu0 must be positive");
    }
    if (!(params.threshold > 0.0 && params.threshold < 1.0)) {
        throw ConfigError("trust: threshold must lie strictly between 0 and 1");
    }
    if (params.max_iterations < 1) {
        throw ConfigError("trust: max_iterations must be at least 1");
    }
    if (!(params.convergence_tol > 0.0)) {
        throw ConfigError("trust: convergence_tol must be positive");
    }
    if (params.ridge < 0.0) {
        throw ConfigError("trust: ridge must be non-negative");
    }
    if (!(params.pfd_scale > 0.0)) {
        throw ConfigError("trust: pfd_scale must be positive");
    }
}

std::string window_list(const EvidenceHistory& history) {
    std::string out;
    for (const auto& rec : history.records) {
        if (!out.empty()) out += ", ";
        out += std::to_string(rec.window_index);
    }
    return out;
}

}  // namespace

double student_t_pdf(double x, double nu) {
    check_nu(nu);
    if (!std::isfinite(x)) {
        if (std::isnan(x)) throw std::domain_error("student-t pdf: x is NaN");
        return 0.0;
    }
    return std::exp(log_pdf_norm(nu) - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
}

double student_t_cdf(double x, double nu) {
    check_nu(nu);
    if (std::isnan(x)) throw std::domain_error("student-t cdf: x is NaN");
    return TDist(nu).cdf(x);
}

void EvidenceHistory::append(EvidenceRecord record) {
    records.push_back(std::move(record));
    while (records.size() > capacity) records.pop_front();
}

std::optional<BehaviorVector> normalize_behavior(const netsim::WindowMetrics& metrics,
                                                 double pfd_scale) {
    if (!(pfd_scale > 0.0)) {
        throw ConfigError("trust: pfd_scale must be positive");
    }
    if (metrics.packets_received == 0) return std::nullopt;
    BehaviorVector x;
    x.raw_pfr = metrics.pfr;
    x.raw_pfd = metrics.pfd;
    x.pfr_norm = 2.0 * metrics.pfr - 1.0;
    x.pfd_norm = 2.0 * (1.0 - std::exp(-metrics.pfd / pfd_scale)) - 1.0;
    return x;
}

TrustEstimate initial_trust(const BehaviorVector& x, const Coefficients& beta0) {
    TrustEstimate est;
    est.beta = beta0;
    est.theta = predict_trust(beta0, x);
    est.iterations_used = 0;
    est.converged = true;
    return est;
}

FitResult fit_beta(const EvidenceHistory& history, const TrustParams& params) {
    check_params(params);
    if (history.records.empty()) {
        throw DataError("fit_beta: evidence history is empty");
    }
    const TDist t0(params.nu0);
    const TDist t2(params.nu0 + 2.0);
    const double scale = std::sqrt(1.0 + 2.0 / params.nu0);

    FitResult result;
    result.beta = {1.0, 1.0};
    for (int iter = 1; iter <= params.max_iterations; ++iter) {
        double s00 = params.ridge;
        double s11 = params.ridge;
        double s01 = 0.0;
        double r0 = 0.0;
        double r1 = 0.0;
        for (const auto& rec : history.records) {
            const double x0 = rec.x.pfr_norm;
            const double x1 = rec.x.pfd_norm;
            const double u = std::clamp(x0 * result.beta[0] + x1 * result.beta[1],
                                        -kUClamp, kUClamp);
            const double sign = rec.s == 1 ? 1.0 : -1.0;  // 2s - 1
            const double s_val = static_cast<double>(rec.s);
            const double den = std::max(s_val - sign * t0.cdf(-u), kDenFloor);
            const double num = std::max(s_val - sign * t2.cdf(-scale * u), kDenFloor);
            const double w = num / den;
            if (!(w > 0.0)) {
                throw NumericalError("fit_beta: non-positive weight in windows [" +
                                     window_list(history) + "]");
            }
            const double s_star = u + sign * t0.pdf(u) / num;
            s00 += w * x0 * x0;
            s01 += w * x0 * x1;
            s11 += w * x1 * x1;
            r0 += w * x0 * s_star;
            r1 += w * x1 * s_star;
        }
        const double det = s00 * s11 - s01 * s01;
        if (!(det > 0.0) || det <= 1e-14 * s00 * s11) {
            throw NumericalError("fit_beta: singular weighted design matrix in windows [" +
                                 window_list(history) + "]");
        }
        const Coefficients next{(s11 * r0 - s01 * r1) / det,
                                (s00 * r1 - s01 * r0) / det};
        const double step = std::max(std::abs(next[0] - result.beta[0]),
                                     std::abs(next[1] - result.beta[1]));
        result.beta = next;
        result.iterations = iter;
        if (step < params.convergence_tol) {
            result.converged = true;
            break;
        }
    }
    return result;
}

double predict_trust(const Coefficients& beta, const BehaviorVector& x) {
    return sigmoid(beta[0] * x.pfr_norm + beta[1] * x.pfd_norm);
}

int classify(double theta, double threshold) {
    return theta > threshold ? 1 : 0;
}

TrustEstimate update_step(EvidenceHistory& history, const netsim::WindowMetrics& metrics,
                          const TrustParams& params) {
    check_params(params);
    const auto x = normalize_behavior(metrics, params.pfd_scale);
    if (!x) {
        TrustEstimate est = history.last_estimate.value_or(TrustEstimate{});
        est.stale = true;
        return est;
    }
    TrustEstimate est;
    if (history.records.empty()) {
        est = initial_trust(*x, {1.0, 1.0});
    } else {
        const FitResult fit = fit_beta(history, params);
        est.theta = predict_trust(fit.beta, *x);
        est.beta = fit.beta;
        est.iterations_used = fit.iterations;
        est.converged = fit.converged;
    }
    int s = 0;
    if (params.labeler == Labeler::pfr_rule) {
        s = metrics.pfr > 0.5 ? 1 : 0;
    } else {
        s = classify(est.theta, params.threshold);
    }
    history.append(EvidenceRecord{metrics.window_index, *x, s});
    history.last_estimate = est;
    return est;
}

}  // namespace trustfield::logittrust
