#pragma once

#include "sants/rng.hpp"

namespace sants {

inline constexpr double kRatioMin = 1e-6;
inline constexpr double kRatioMax = 1.0 - 1e-6;
// Smallest concentration excess over 2; with the ratio clamp it keeps
// alpha - 1 and beta - 1 representably above zero.
inline constexpr double kMinConcentrationExcess = 1e-9;

/// ln(1 + e^x) without overflow or cancellation.
double softplus(double x);
double sigmoid(double x);

/// Nonnegative hazard increment for a raw stop score.
inline double hazard_increment(double score) { return softplus(score); }

/// Stopping quantities at one decision point.
struct StopDecision {
    double delta_hazard = 0.0;
    double hazard = 0.0;
    double stop_cdf = 0.0;   // F = 1 - exp(-H)
    double stop_prob = 0.0;  // h = 1 - exp(-dH)
};

StopDecision stop_probabilities(double hazard_prev, double delta_hazard);

/// log h and log(1 - h) for h = 1 - exp(-softplus(score)), which equals
/// sigmoid(score). Both stay finite for any finite score.
double log_stop_prob(double score);
double log_continue_prob(double score);

struct BetaParams {
    double alpha = 1.0;
    double beta = 1.0;
};

/// Jump distribution at one decision point.
struct ProgressionDecision {
    double mode = 0.5;
    double concentration = 2.0;
    BetaParams params;
    double ratio = 0.5;
};

/// Mode/concentration to Beta(alpha, beta): alpha = m (c - 2) + 1, beta = (1 - m)(c - 2) + 1.
BetaParams beta_from_mode(double mode, double concentration);

double clamp_ratio(double r);

/// Draws from Beta(alpha, beta) via the gamma-ratio construction, clamped.
double sample_ratio(const BetaParams& p, Rng& rng);

/// Log density of Beta(alpha, beta) at r in (0, 1).
double ratio_log_pdf(const BetaParams& p, double r);

/// d log pdf / d alpha and d beta.
BetaParams ratio_log_pdf_grad(const BetaParams& p, double r);

/// KL(Bernoulli(sigmoid(score)) || Bernoulli(ref)) and its derivative in score.
double bernoulli_kl(double score, double ref);
double bernoulli_kl_grad(double score, double ref);

/// KL(Beta(p) || Beta(q)) and its gradient with respect to p.
double beta_kl(const BetaParams& p, const BetaParams& q);
BetaParams beta_kl_grad(const BetaParams& p, const BetaParams& q);

}  // namespace sants
