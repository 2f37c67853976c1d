#include "sants/hazard.hpp"

#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "sants/config.hpp"

namespace sants {

namespace {

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

}  // namespace

double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

StopDecision stop_probabilities(double hazard_prev, double delta_hazard) {
    if (!(hazard_prev >= 0.0) || !(delta_hazard >= 0.0)) {
        throw std::invalid_argument("stop_probabilities: hazards must be nonnegative");
    }
    StopDecision d;
    d.delta_hazard = delta_hazard;
    d.hazard = hazard_prev + delta_hazard;
    d.stop_cdf = -std::expm1(-d.hazard);
    d.stop_prob = -std::expm1(-delta_hazard);
    return d;
}

double log_stop_prob(double score) { return -softplus(-score); }

double log_continue_prob(double score) { return -softplus(score); }

BetaParams beta_from_mode(double mode, double concentration) {
    if (!(mode > 0.0 && mode < 1.0)) throw std::invalid_argument("beta_from_mode: mode outside (0, 1)");
    if (!(concentration > 2.0)) throw std::invalid_argument("beta_from_mode: concentration must exceed 2");
    return {mode * (concentration - 2.0) + 1.0, (1.0 - mode) * (concentration - 2.0) + 1.0};
}

double clamp_ratio(double r) { return std::clamp(r, kRatioMin, kRatioMax); }

double sample_ratio(const BetaParams& p, Rng& rng) {
    std::gamma_distribution<double> ga(p.alpha, 1.0);
    std::gamma_distribution<double> gb(p.beta, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return clamp_ratio(x / (x + y));
}

double ratio_log_pdf(const BetaParams& p, double r) {
    if (!(r > 0.0 && r < 1.0)) throw std::domain_error("ratio_log_pdf: r = " + format_real(r) + " outside (0, 1)");
    return (p.alpha - 1.0) * std::log(r) + (p.beta - 1.0) * std::log1p(-r) - log_beta_fn(p.alpha, p.beta);
}

BetaParams ratio_log_pdf_grad(const BetaParams& p, double r) {
    using boost::math::digamma;
    const double psi_sum = digamma(p.alpha + p.beta);
    return {std::log(r) - digamma(p.alpha) + psi_sum, std::log1p(-r) - digamma(p.beta) + psi_sum};
}

double bernoulli_kl(double score, double ref) {
    const double h = sigmoid(score);
    const double log_h = log_stop_prob(score);
    const double log_1mh = log_continue_prob(score);
    return h * (log_h - std::log(ref)) + (1.0 - h) * (log_1mh - std::log1p(-ref));
}

double bernoulli_kl_grad(double score, double ref) {
    // dKL/dh = logit(h) - logit(ref), with logit(h) = score and dh/dscore = h (1 - h).
    const double h = sigmoid(score);
    const double logit_ref = std::log(ref) - std::log1p(-ref);
    return (score - logit_ref) * h * (1.0 - h);
}

double beta_kl(const BetaParams& p, const BetaParams& q) {
    using boost::math::digamma;
    const double psi_sum = digamma(p.alpha + p.beta);
    return log_beta_fn(q.alpha, q.beta) - log_beta_fn(p.alpha, p.beta) +
           (p.alpha - q.alpha) * (digamma(p.alpha) - psi_sum) + (p.beta - q.beta) * (digamma(p.beta) - psi_sum);
}

BetaParams beta_kl_grad(const BetaParams& p, const BetaParams& q) {
    using boost::math::trigamma;
    const double tri_sum = trigamma(p.alpha + p.beta);
    const double cross = (q.alpha - p.alpha + q.beta - p.beta) * tri_sum;
    return {(p.alpha - q.alpha) * trigamma(p.alpha) + cross, (p.beta - q.beta) * trigamma(p.beta) + cross};
}

}  // namespace sants
