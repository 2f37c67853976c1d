#include <gtest/gtest.h>

#include <boost/math/distributions/beta.hpp>
#include <cmath>
#include <random>

#include "sants/hazard.hpp"

using namespace sants;

TEST(Hazard, SoftplusExamples) {
    EXPECT_NEAR(hazard_increment(0.0), std::log(2.0), 1e-15);
    const double small = hazard_increment(-40.0);
    EXPECT_GT(small, 0.0);
    EXPECT_NEAR(small, std::exp(-40.0), 1e-28);
    EXPECT_NEAR(hazard_increment(40.0), 40.0, 1e-12);
    EXPECT_TRUE(std::isfinite(hazard_increment(1e6)));
    EXPECT_GE(hazard_increment(-1e6), 0.0);
}

TEST(Hazard, StopProbabilityExamples) {
    auto s = stop_probabilities(0.0, 0.0);
    EXPECT_EQ(s.stop_cdf, 0.0);
    EXPECT_EQ(s.stop_prob, 0.0);
    s = stop_probabilities(0.0, std::log(2.0));
    EXPECT_NEAR(s.stop_cdf, 0.5, 1e-15);
    EXPECT_NEAR(s.stop_prob, 0.5, 1e-15);
    s = stop_probabilities(std::log(2.0), std::log(2.0));
    EXPECT_NEAR(s.stop_cdf, 0.75, 1e-15);
    EXPECT_NEAR(s.stop_prob, 0.5, 1e-15);
}

TEST(Hazard, StopProbEqualsSigmoidOfScore) {
    for (double g = -30.0; g <= 30.0; g += 0.37) {
        const auto s = stop_probabilities(0.0, hazard_increment(g));
        EXPECT_NEAR(s.stop_prob, sigmoid(g), 1e-12);
        EXPECT_NEAR(log_stop_prob(g), std::log(sigmoid(g)), 1e-12);
        EXPECT_NEAR(log_continue_prob(g), -softplus(g), 1e-12);
    }
    EXPECT_TRUE(std::isfinite(log_stop_prob(-800.0)));
    EXPECT_TRUE(std::isfinite(log_continue_prob(800.0)));
}

TEST(Hazard, SurvivalProductProperty) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 3.0);
    for (int trial = 0; trial < 1000; ++trial) {
        double H = 0.0, survival = 1.0, prevF = 0.0;
        for (int k = 0; k < 30; ++k) {
            const auto s = stop_probabilities(H, hazard_increment(n(rng)));
            H = s.hazard;
            survival *= 1.0 - s.stop_prob;
            EXPECT_NEAR(1.0 - s.stop_cdf, survival, 1e-12);
            EXPECT_GE(s.stop_cdf, prevF);
            EXPECT_NEAR(s.stop_cdf, 1.0 - std::exp(-s.hazard), 1e-12);
            prevF = s.stop_cdf;
        }
    }
}

TEST(Beta, ModeParameterizationExamples) {
    auto p = beta_from_mode(0.5, 4.0);
    EXPECT_DOUBLE_EQ(p.alpha, 2.0);
    EXPECT_DOUBLE_EQ(p.beta, 2.0);
    p = beta_from_mode(0.9, 12.0);
    EXPECT_NEAR(p.alpha, 10.0, 1e-12);
    EXPECT_NEAR(p.beta, 2.0, 1e-12);
}

TEST(Beta, ModeRecoveredAndParamsAboveOne) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> um(1e-4, 1.0 - 1e-4), uc(2.01, 200.0);
    for (int i = 0; i < 5000; ++i) {
        const double m = um(rng), c = uc(rng);
        const auto p = beta_from_mode(m, c);
        EXPECT_GT(p.alpha, 1.0);
        EXPECT_GT(p.beta, 1.0);
        EXPECT_NEAR((p.alpha - 1.0) / (p.alpha + p.beta - 2.0), m, 1e-12);
    }
}

TEST(Beta, LogPdfExamples) {
    const BetaParams p{2.0, 2.0};
    EXPECT_NEAR(ratio_log_pdf(p, 0.5), std::log(1.5), 1e-14);
    const double edge = ratio_log_pdf(p, 1e-6);
    EXPECT_TRUE(std::isfinite(edge));
    EXPECT_LT(edge, -10.0);
    EXPECT_THROW(ratio_log_pdf(p, 0.0), std::domain_error);
    EXPECT_THROW(ratio_log_pdf(p, 1.0), std::domain_error);
}

TEST(Beta, LogPdfMatchesBoost) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> ua(1.01, 30.0), ur(0.01, 0.99);
    for (int i = 0; i < 500; ++i) {
        const BetaParams p{ua(rng), ua(rng)};
        const double r = ur(rng);
        boost::math::beta_distribution<double> d(p.alpha, p.beta);
        EXPECT_NEAR(ratio_log_pdf(p, r), std::log(boost::math::pdf(d, r)), 1e-9);
    }
}

TEST(Beta, SampleMeanSymmetric) {
    Rng rng(14);
    const BetaParams p{2.0, 2.0};
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double r = sample_ratio(p, rng);
        ASSERT_GT(r, 0.0);
        ASSERT_LT(r, 1.0);
        sum += r;
    }
    EXPECT_NEAR(sum / n, 0.5, 0.005);
}

TEST(Beta, LogPdfGradientMatchesFiniteDifference) {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> ua(1.1, 20.0), ur(0.05, 0.95);
    for (int i = 0; i < 200; ++i) {
        const BetaParams p{ua(rng), ua(rng)};
        const double r = ur(rng), h = 1e-6;
        const auto g = ratio_log_pdf_grad(p, r);
        const double fa = (ratio_log_pdf({p.alpha + h, p.beta}, r) - ratio_log_pdf({p.alpha - h, p.beta}, r)) / (2 * h);
        const double fb = (ratio_log_pdf({p.alpha, p.beta + h}, r) - ratio_log_pdf({p.alpha, p.beta - h}, r)) / (2 * h);
        EXPECT_NEAR(g.alpha, fa, 1e-6 * std::max(1.0, std::abs(fa)));
        EXPECT_NEAR(g.beta, fb, 1e-6 * std::max(1.0, std::abs(fb)));
    }
}

TEST(Kl, ZeroAtReferenceAndNonnegative) {
    EXPECT_NEAR(bernoulli_kl(std::log(0.01 / 0.99), 0.01), 0.0, 1e-15);
    const BetaParams q = beta_from_mode(0.96, 10.0);
    EXPECT_NEAR(beta_kl(q, q), 0.0, 1e-12);

    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> ug(-20.0, 20.0), ua(1.0001, 50.0), uh(1e-4, 1.0 - 1e-4);
    for (int i = 0; i < 10000; ++i) {
        EXPECT_GE(bernoulli_kl(ug(rng), uh(rng)), 0.0);
        EXPECT_GE(beta_kl({ua(rng), ua(rng)}, {ua(rng), ua(rng)}), -1e-12);
    }
}

TEST(Kl, BernoulliAsymptote) {
    // h -> 1 against h_ref = 0.01 approaches ln(1/0.01).
    EXPECT_NEAR(bernoulli_kl(40.0, 0.01), std::log(100.0), 1e-9);
}

TEST(Kl, GradientsMatchFiniteDifference) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ug(-8.0, 8.0), ua(1.1, 30.0), uh(0.01, 0.99);
    const double h = 1e-6;
    for (int i = 0; i < 200; ++i) {
        const double g = ug(rng), ref = uh(rng);
        const double fd = (bernoulli_kl(g + h, ref) - bernoulli_kl(g - h, ref)) / (2 * h);
        EXPECT_NEAR(bernoulli_kl_grad(g, ref), fd, 1e-6 * std::max(1.0, std::abs(fd)));

        const BetaParams p{ua(rng), ua(rng)}, q{ua(rng), ua(rng)};
        const auto an = beta_kl_grad(p, q);
        const double fa = (beta_kl({p.alpha + h, p.beta}, q) - beta_kl({p.alpha - h, p.beta}, q)) / (2 * h);
        const double fb = (beta_kl({p.alpha, p.beta + h}, q) - beta_kl({p.alpha, p.beta - h}, q)) / (2 * h);
        EXPECT_NEAR(an.alpha, fa, 1e-5 * std::max(1.0, std::abs(fa)));
        EXPECT_NEAR(an.beta, fb, 1e-5 * std::max(1.0, std::abs(fb)));
    }
}

TEST(Beta, RatioClamp) {
    EXPECT_EQ(clamp_ratio(0.0), kRatioMin);
    EXPECT_EQ(clamp_ratio(1.0), kRatioMax);
    EXPECT_EQ(clamp_ratio(0.3), 0.3);
}
