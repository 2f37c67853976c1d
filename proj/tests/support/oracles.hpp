#pragma once

// Reference implementations written directly from the defining formulas, with
// no calls into the library's reward, statistics or gradient code.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Geometry>

#include "sants/action.hpp"
#include "sants/reward.hpp"
#include "sants/scheduler_net.hpp"

namespace sants::oracle {

// Rotation angle from the quaternion product's vector part (atan2 form).
inline double rotation_angle(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
    const double w = a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
    const Eigen::Vector3d va(a[1], a[2], a[3]), vb(b[1], b[2], b[3]);
    const Eigen::Vector3d v = b[0] * va - a[0] * vb - va.cross(vb);
    return 2.0 * std::atan2(v.norm(), std::abs(w));
}

inline double log_loss(double p, double y, double eps) {
    p = std::min(std::max(p, eps), 1.0 - eps);
    y = std::min(std::max(y, eps), 1.0 - eps);
    return -y * std::log(p) - (1.0 - y) * std::log(1.0 - p);
}

/// Path return for predicted/anchor chunks against a demonstration, in one pass.
inline double path_return(const ActionChunk& pred, const ActionChunk& lo, const ActionChunk& hi,
                          const ActionChunk& demo, int n, int n_full, const RewardConfig& c) {
    const std::size_t T = demo.size();

    std::vector<double> w(T);
    double wsum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t prev = t == 0 ? 0 : t - 1, cur = t == 0 ? 1 : t;
        double wt = 1.0;
        if ((demo[cur].position - demo[prev].position).norm() > c.rho) wt += c.eta_mot;
        if (std::abs(demo[cur].gripper - demo[prev].gripper) > c.gripper_event) wt += c.eta_grip;
        if (4 * t < T) wt *= 1.0 + c.eta_early;
        w[t] = wt;
        wsum += wt;
    }
    for (auto& x : w) x *= static_cast<double>(T) / wsum;

    const auto seq = [&](const ActionChunk& a) {
        double num = 0.0, den = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const double ang = rotation_angle(a[t].orientation, demo[t].orientation);
            const double e = c.seq_weights.position * (a[t].position - demo[t].position).squaredNorm() +
                             c.seq_weights.rotation * ang * ang +
                             c.seq_weights.gripper * log_loss(a[t].gripper, demo[t].gripper, c.bce_clamp);
            num += w[t] * e;
            den += w[t];
        }
        return num / den;
    };
    const auto diff = [&](const ActionChunk& a) {
        double num = 0.0, den = 0.0;
        for (std::size_t t = 0; t + 1 < T; ++t) {
            const Eigen::Vector3d d = (a[t + 1].position - a[t].position) - (demo[t + 1].position - demo[t].position);
            const double ra = rotation_angle(a[t].orientation, a[t + 1].orientation);
            const double rd = rotation_angle(demo[t].orientation, demo[t + 1].orientation);
            const double g = (a[t + 1].gripper - a[t].gripper) - (demo[t + 1].gripper - demo[t].gripper);
            const double e = c.delta_weights.position * d.squaredNorm() +
                             c.delta_weights.rotation * (ra - rd) * (ra - rd) + c.delta_weights.gripper * g * g;
            num += w[t] * e;
            den += w[t];
        }
        return num / den;
    };

    const auto gained = [&](double l_lo, double l_hi, double l_tau, double weight) {
        const double gap = l_lo - l_hi;
        double u = (l_lo - l_tau) / (gap > c.epsilon ? gap : c.epsilon);
        u = u > 1.0 ? 1.0 : (u < -1.0 ? -1.0 : u);
        const double g = gap > 0.0 ? gap : 0.0;
        const double d = g / (g + c.kappa);
        return u >= 0.0 ? weight * d * u : weight * c.lambda_pen * u;
    };
    const double q = gained(seq(lo), seq(hi), seq(pred), c.w_seq) + gained(diff(lo), diff(hi), diff(pred), c.w_delta);

    const int m = std::min(n, n_full);
    double num = 0.0, den = 0.0;
    for (int i = 1; i <= n_full; ++i) {
        const double ci = c.c0 + c.c1 * std::pow(static_cast<double>(i) / n_full, c.gamma);
        den += ci;
        if (i <= m) num += ci;
    }
    return q - c.lambda_c * num / den;
}

/// Scan statistics recomputed with naive loops.
struct NaiveStats {
    int rows = 0;
    double not_best_at_full = 0.0;
    double adjacent_increase = 0.0;
    std::vector<int> histogram;
    double oracle_mean = 0.0;
    double fixed_full_mean = 0.0;
};

inline NaiveStats naive_scan_stats(const std::vector<std::vector<double>>& rows) {
    NaiveStats s;
    if (rows.empty()) return s;
    const std::size_t cols = rows[0].size();
    s.histogram.assign(cols, 0);
    int not_best = 0, increase = 0;
    double sum_min = 0.0, sum_last = 0.0;
    for (const auto& r : rows) {
        std::size_t arg = 0;
        for (std::size_t j = 1; j < cols; ++j)
            if (r[j] < r[arg]) arg = j;
        ++s.histogram[arg];
        if (arg != cols - 1) ++not_best;
        bool inc = false;
        for (std::size_t j = 0; j + 1 < cols; ++j)
            if (r[j + 1] > r[j]) inc = true;
        if (inc) ++increase;
        sum_min += r[arg];
        sum_last += r[cols - 1];
    }
    s.rows = static_cast<int>(rows.size());
    const double n = static_cast<double>(rows.size());
    s.not_best_at_full = not_best / n;
    s.adjacent_increase = increase / n;
    s.oracle_mean = sum_min / n;
    s.fixed_full_mean = sum_last / n;
    return s;
}

/// Objective used for gradient checks: a fixed linear functional of the head outputs.
struct HeadProbe {
    double ws, wm, wc;
    double operator()(const NetOutput& o) const { return ws * o.score + wm * o.mode + wc * o.concentration; }
};

struct GradCheckResult {
    int coordinates = 0;
    double max_rel_error = 0.0;
    int stop_head = 0, jump_head = 0, trunk = 0;
};

/// Central differences on `count` random coordinates (a third drawn from each
/// head, the rest from the trunk), relative error |a - f| / max(|a|, |f|, floor).
inline GradCheckResult gradient_check(SchedulerNet net, const Eigen::VectorXd& feature, double sigma,
                                      const HeadProbe& probe, int count, std::uint64_t seed, double step = 1e-5,
                                      double floor = 1e-7) {
    ForwardCache cache;
    net.forward(feature, sigma, &cache);
    std::vector<double> grad(net.parameter_count(), 0.0);
    net.backward(cache, {probe.ws, probe.wm, probe.wc}, grad);

    const auto& L = net.layout();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> stop_idx(L.ws, L.wj - 1), jump_idx(L.wj, L.total - 1),
        trunk_idx(0, L.ws - 1);
    GradCheckResult res;
    for (int i = 0; i < count; ++i) {
        std::size_t k;
        if (i % 3 == 0) {
            k = stop_idx(rng);
            ++res.stop_head;
        } else if (i % 3 == 1) {
            k = jump_idx(rng);
            ++res.jump_head;
        } else {
            k = trunk_idx(rng);
            ++res.trunk;
        }
        const double orig = net.params()[k];
        net.mutable_params()[k] = orig + step;
        const double up = probe(net.forward(feature, sigma));
        net.mutable_params()[k] = orig - step;
        const double down = probe(net.forward(feature, sigma));
        net.mutable_params()[k] = orig;
        const double fd = (up - down) / (2.0 * step);
        const double rel = std::abs(grad[k] - fd) / std::max({std::abs(grad[k]), std::abs(fd), floor});
        res.max_rel_error = std::max(res.max_rel_error, rel);
        ++res.coordinates;
    }
    return res;
}

}  // namespace sants::oracle
