#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "trustfield/netsim.hpp"

namespace trustfield::logittrust {

/// Density of the standard Student-t distribution with nu > 0 degrees of
/// freedom. Throws std::domain_error for nu <= 0 or non-finite x.
double student_t_pdf(double x, double nu);

/// CDF of the standard Student-t distribution, evaluated through the
/// regularized incomplete beta function (closed trigonometric forms are used
/// for integer nu). Absolute accuracy better than 1e-10.
double student_t_cdf(double x, double nu);

using Coefficients = std::array<double, 2>;

/// Behavior features for one subject in one sensing window, centered to
/// [-1, 1]. The raw PFR/PFD values are retained for audit.
struct BehaviorVector {
    double pfr_norm = 0.0;
    double pfd_norm = 0.0;
    double raw_pfr = 0.0;
    double raw_pfd = 0.0;
};

struct EvidenceRecord {
    int window_index = 0;
    BehaviorVector x;
    int s = 0;  // binary outcome {0, 1}
};

/// How the binary evidence label is produced from a window's estimate.
enum class Labeler {
    self_threshold,  // s = 1 iff the model's own theta exceeds the threshold
    pfr_rule,        // s = 1 iff raw PFR > 0.5
};

struct TrustParams {
    double nu0 = 5.0;             // Student-t degrees of freedom
    double threshold = 0.5;       // trustworthy iff theta > threshold
    int max_iterations = 100;
    double convergence_tol = 1e-6;  // on the max-norm of the beta step
    double ridge = 1e-6;            // regularizer added to S0
    std::size_t history_capacity = 50;
    double pfd_scale = 100.0;  // kappa: PFD squashing scale [1/s]
    Labeler labeler = Labeler::self_threshold;
};

struct TrustEstimate {
    double theta = 0.5;  // in [0, 1]
    Coefficients beta{1.0, 1.0};
    int iterations_used = 0;
    bool converged = false;
    /// Set when no new evidence was available and a previous estimate is
    /// being returned unchanged.
    bool stale = false;
};

/// Rolling evidence table for one (observer, subject) pair.
struct EvidenceHistory {
    int observer_id = 0;
    int subject_id = 0;
    std::size_t capacity = 50;
    std::deque<EvidenceRecord> records;  // ascending window_index
    std::optional<TrustEstimate> last_estimate;

    /// FIFO append: evicts the oldest record once past capacity.
    void append(EvidenceRecord record);
};

/// Maps window metrics to centered features: PFR via 2*pfr - 1, PFD via
/// 2*(1 - exp(-pfd/kappa)) - 1. A window with no received packets carries no
/// evidence and yields nullopt.
std::optional<BehaviorVector> normalize_behavior(const netsim::WindowMetrics& metrics,
                                                 double pfd_scale);

/// First-interaction score: logistic link at the prior coefficients.
TrustEstimate initial_trust(const BehaviorVector& x, const Coefficients& beta0);

struct FitResult {
    Coefficients beta{};
    int iterations = 0;
    bool converged = false;
};

/// EM/IRLS fit of the robit (Student-t latent) regression coefficients over
/// the evidence history, starting from all-ones. Linear systems are
/// regularized by params.ridge; u is clamped to [-30, 30] and saturating
/// denominators floored at 1e-12.
FitResult fit_beta(const EvidenceHistory& history, const TrustParams& params);

/// Expected next outcome under the fitted coefficients (logistic link).
double predict_trust(const Coefficients& beta, const BehaviorVector& x);

/// 1 iff theta is strictly greater than the threshold.
int classify(double theta, double threshold);

/// One sensing-window update for a pair: score the new behavior (initial
/// trust on first contact, fit + predict afterwards), label it, and append
/// the (x, s) evidence to the history. When the metrics carry no evidence
/// the history is unchanged and the previous estimate comes back stale.
TrustEstimate update_step(EvidenceHistory& history, const netsim::WindowMetrics& metrics,
                          const TrustParams& params);

}  // namespace trustfield::logittrust
