#include "sants/reward.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "sants/checksum.hpp"
#include "sants/grid.hpp"
#include "sants/scheduler.hpp"

namespace sants {

namespace {

void check_lengths(const ActionChunk& pred, const ActionChunk& demo) {
    if (pred.size() != demo.size()) throw std::invalid_argument("action chunks differ in length");
}

double bce(double pred, double target, double clamp) {
    const double p = std::clamp(pred, clamp, 1.0 - clamp);
    const double y = std::clamp(target, clamp, 1.0 - clamp);
    return -(y * std::log(p) + (1.0 - y) * std::log1p(-p));
}

double weighted_mean(const std::vector<double>& terms, const std::vector<double>& weights) {
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
        num += weights[t] * terms[t];
        den += weights[t];
    }
    // Mean over t of w_t * term_t with weights renormalized to mean one.
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace

void RewardConfig::validate() const {
    const auto fail = [](const std::string& what) { throw ConfigError("reward config: " + what); };
    for (double w : {w_seq, w_delta, seq_weights.position, seq_weights.rotation, seq_weights.gripper,
                     delta_weights.position, delta_weights.rotation, delta_weights.gripper, eta_mot, eta_grip,
                     eta_early, lambda_pen, lambda_c, c0, c1, rho, gripper_event}) {
        if (!(w >= 0.0)) fail("weights and thresholds must be >= 0");
    }
    if (!(epsilon > 0.0)) fail("epsilon must be > 0");
    if (!(kappa > 0.0)) fail("kappa must be > 0");
    if (!(gamma >= 0.0)) fail("gamma must be >= 0");
    if (!(sigma_hi >= 0.0 && sigma_hi < sigma_lo && sigma_lo <= 1.0)) fail("require 0 <= sigma_hi < sigma_lo <= 1");
    if (!(bce_clamp > 0.0 && bce_clamp < 0.5)) fail("bce_clamp must be in (0, 0.5)");
}

void read_reward_config(KeyValueDocument& doc, RewardConfig& cfg) {
    doc.read("reward.sigma_lo", cfg.sigma_lo);
    doc.read("reward.sigma_hi", cfg.sigma_hi);
    doc.read("reward.sigma_ref", cfg.sigma_ref);
    doc.read("reward.w_seq", cfg.w_seq);
    doc.read("reward.w_delta", cfg.w_delta);
    doc.read("reward.seq_position", cfg.seq_weights.position);
    doc.read("reward.seq_rotation", cfg.seq_weights.rotation);
    doc.read("reward.seq_gripper", cfg.seq_weights.gripper);
    doc.read("reward.delta_position", cfg.delta_weights.position);
    doc.read("reward.delta_rotation", cfg.delta_weights.rotation);
    doc.read("reward.delta_gripper", cfg.delta_weights.gripper);
    doc.read("reward.rho", cfg.rho);
    doc.read("reward.eta_mot", cfg.eta_mot);
    doc.read("reward.eta_grip", cfg.eta_grip);
    doc.read("reward.eta_early", cfg.eta_early);
    doc.read("reward.gripper_event", cfg.gripper_event);
    doc.read("reward.lambda_pen", cfg.lambda_pen);
    doc.read("reward.lambda_c", cfg.lambda_c);
    doc.read("reward.c0", cfg.c0);
    doc.read("reward.c1", cfg.c1);
    doc.read("reward.gamma", cfg.gamma);
    doc.read("reward.epsilon", cfg.epsilon);
    doc.read("reward.kappa", cfg.kappa);
    doc.read("reward.bce_clamp", cfg.bce_clamp);
    cfg.validate();
}

std::string to_key_value_text(const RewardConfig& cfg) {
    std::string out;
    const auto put = [&out](std::string_view key, double v) {
        out += "reward.";
        out += key;
        out += " = ";
        out += format_real(v);
        out += '\n';
    };
    put("sigma_lo", cfg.sigma_lo);
    put("sigma_hi", cfg.sigma_hi);
    put("sigma_ref", cfg.sigma_ref);
    put("w_seq", cfg.w_seq);
    put("w_delta", cfg.w_delta);
    put("seq_position", cfg.seq_weights.position);
    put("seq_rotation", cfg.seq_weights.rotation);
    put("seq_gripper", cfg.seq_weights.gripper);
    put("delta_position", cfg.delta_weights.position);
    put("delta_rotation", cfg.delta_weights.rotation);
    put("delta_gripper", cfg.delta_weights.gripper);
    put("rho", cfg.rho);
    put("eta_mot", cfg.eta_mot);
    put("eta_grip", cfg.eta_grip);
    put("eta_early", cfg.eta_early);
    put("gripper_event", cfg.gripper_event);
    put("lambda_pen", cfg.lambda_pen);
    put("lambda_c", cfg.lambda_c);
    put("c0", cfg.c0);
    put("c1", cfg.c1);
    put("gamma", cfg.gamma);
    put("epsilon", cfg.epsilon);
    put("kappa", cfg.kappa);
    put("bce_clamp", cfg.bce_clamp);
    return out;
}

std::vector<double> keyframe_weights(const ActionChunk& demo, const RewardConfig& cfg) {
    const std::size_t T = demo.size();
    if (T < 2) throw std::invalid_argument("keyframe_weights: need at least two timesteps");
    std::vector<double> w(T, 1.0);
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t a = t == 0 ? 0 : t - 1;
        const std::size_t b = t == 0 ? 1 : t;
        const double motion = (demo[b].position - demo[a].position).norm();
        const double grip = std::abs(demo[b].gripper - demo[a].gripper);
        if (motion > cfg.rho) w[t] += cfg.eta_mot;
        if (grip > cfg.gripper_event) w[t] += cfg.eta_grip;
    }
    if (cfg.eta_early != 0.0) {
        const std::size_t early = (T + 3) / 4;
        for (std::size_t t = 0; t < early; ++t) w[t] *= 1.0 + cfg.eta_early;
    }
    double mean = 0.0;
    for (double v : w) mean += v;
    mean /= static_cast<double>(T);
    for (double& v : w) v /= mean;
    return w;
}

double seq_error(const ActionChunk& pred, const ActionChunk& demo, const std::vector<double>& weights,
                 const RewardConfig& cfg) {
    check_lengths(pred, demo);
    if (weights.size() != demo.size()) throw std::invalid_argument("seq_error: weight length mismatch");
    const auto& cw = cfg.seq_weights;
    std::vector<double> terms(demo.size());
    for (std::size_t t = 0; t < demo.size(); ++t) {
        const double angle = quaternion_angle(pred[t].orientation, demo[t].orientation);
        terms[t] = cw.position * (pred[t].position - demo[t].position).squaredNorm() +
                   cw.rotation * angle * angle + cw.gripper * bce(pred[t].gripper, demo[t].gripper, cfg.bce_clamp);
    }
    return weighted_mean(terms, weights);
}

double delta_error(const ActionChunk& pred, const ActionChunk& demo, const std::vector<double>& weights,
                   const RewardConfig& cfg) {
    check_lengths(pred, demo);
    if (demo.size() < 2) throw std::invalid_argument("delta_error: need at least two timesteps");
    if (weights.size() != demo.size()) throw std::invalid_argument("delta_error: weight length mismatch");
    const auto& cw = cfg.delta_weights;
    const std::size_t n = demo.size() - 1;
    std::vector<double> terms(n);
    for (std::size_t t = 0; t < n; ++t) {
        const Eigen::Vector3d dp_hat = pred[t + 1].position - pred[t].position;
        const Eigen::Vector3d dp_star = demo[t + 1].position - demo[t].position;
        const double th_hat = quaternion_angle(pred[t].orientation, pred[t + 1].orientation);
        const double th_star = quaternion_angle(demo[t].orientation, demo[t + 1].orientation);
        const double dg = (pred[t + 1].gripper - pred[t].gripper) - (demo[t + 1].gripper - demo[t].gripper);
        terms[t] = cw.position * (dp_hat - dp_star).squaredNorm() +
                   cw.rotation * (th_hat - th_star) * (th_hat - th_star) + cw.gripper * dg * dg;
    }
    const std::vector<double> w(weights.begin(), weights.begin() + static_cast<std::ptrdiff_t>(n));
    return weighted_mean(terms, w);
}

double masked_action_error(const ActionChunk& pred, const ActionChunk& demo, const std::vector<double>& weights,
                           const RewardConfig& cfg) {
    check_lengths(pred, demo);
    if (weights.size() != demo.size()) throw std::invalid_argument("masked_action_error: weight length mismatch");
    const auto& cw = cfg.seq_weights;
    std::vector<double> terms(demo.size());
    for (std::size_t t = 0; t < demo.size(); ++t) {
        const double angle = quaternion_angle(pred[t].orientation, demo[t].orientation);
        const double dg = pred[t].gripper - demo[t].gripper;
        terms[t] = cw.position * (pred[t].position - demo[t].position).squaredNorm() +
                   cw.rotation * angle * angle + cw.gripper * dg * dg;
    }
    return weighted_mean(terms, weights);
}

double anchor_gain(double loss_lo, double loss_hi, double loss_tau, double epsilon) {
    const double gap = std::max(loss_lo - loss_hi, epsilon);
    return std::clamp((loss_lo - loss_tau) / gap, -1.0, 1.0);
}

double difficulty_gate(double loss_lo, double loss_hi, double kappa) {
    if (!(kappa > 0.0)) throw std::invalid_argument("difficulty_gate: kappa must be positive");
    const double g = std::max(loss_lo - loss_hi, 0.0);
    return g / (g + kappa);
}

double quality_term(double u_seq, double u_delta, double d_seq, double d_delta, const RewardConfig& cfg) {
    const auto term = [&cfg](double w, double u, double d) {
        return w * (d * std::max(u, 0.0) - cfg.lambda_pen * std::max(-u, 0.0));
    };
    return term(cfg.w_seq, u_seq, d_seq) + term(cfg.w_delta, u_delta, d_delta);
}

UpdateCost update_cost(int n, int n_full, const RewardConfig& cfg) {
    if (n < 0) throw std::invalid_argument("update_cost: negative update count");
    if (n_full < 1) throw std::invalid_argument("update_cost: n_full must be positive");
    UpdateCost out;
    if (n > n_full) {
        out.clamped = true;
        n = n_full;
    }
    const auto c = [&](int i) {
        return cfg.c0 + cfg.c1 * std::pow(static_cast<double>(i) / static_cast<double>(n_full), cfg.gamma);
    };
    double partial = 0.0, total = 0.0;
    for (int i = 1; i <= n_full; ++i) {
        total += c(i);
        if (i <= n) partial += c(i);
    }
    out.cost = total > 0.0 ? cfg.lambda_c * partial / total : 0.0;
    return out;
}

std::uint32_t latent_digest(const LatentState& x) {
    return crc32(std::as_bytes(std::span(x.data(), static_cast<std::size_t>(x.size()))));
}

AnchorCache compute_anchors(const FrozenPolicy& policy, const EpisodeSpec& episode, const LatentState& init_noise,
                            const SchedulerConfig& sched, const RewardConfig& cfg) {
    if (cfg.sigma_hi != sched.sigma_full) {
        throw ConfigError("reward.sigma_hi must equal scheduler.sigma_full (full anchor uses the full grid)");
    }
    if (!(cfg.sigma_lo < sched.sigma_start)) throw ConfigError("reward.sigma_lo must be below sigma_start");
    AnchorCache cache;
    cache.episode_seed = episode.seed;
    cache.noise_digest = latent_digest(init_noise);
    const double shallow[] = {sched.sigma_start, cfg.sigma_lo};
    const auto lo = run_fixed_levels(policy, episode, shallow, init_noise);
    cache.action_lo = policy.act(episode, lo.terminal_latent, lo.terminal_sigma);
    const auto grid = build_full_grid(sched);
    const auto hi = run_fixed_levels(policy, episode, grid, init_noise);
    cache.action_hi = policy.act(episode, hi.terminal_latent, hi.terminal_sigma);
    return cache;
}

RewardBreakdown path_return(const ActionChunk& action_tau, int n_updates, const EpisodeSpec& episode,
                            const AnchorCache& anchors, int n_full, const RewardConfig& cfg) {
    if (anchors.episode_seed != episode.seed) throw std::invalid_argument("path_return: anchors belong to another episode");
    const auto w = keyframe_weights(episode.demo, cfg);
    RewardBreakdown r;
    r.seq_tau = seq_error(action_tau, episode.demo, w, cfg);
    r.seq_lo = seq_error(anchors.action_lo, episode.demo, w, cfg);
    r.seq_hi = seq_error(anchors.action_hi, episode.demo, w, cfg);
    r.delta_tau = delta_error(action_tau, episode.demo, w, cfg);
    r.delta_lo = delta_error(anchors.action_lo, episode.demo, w, cfg);
    r.delta_hi = delta_error(anchors.action_hi, episode.demo, w, cfg);
    r.u_seq = anchor_gain(r.seq_lo, r.seq_hi, r.seq_tau, cfg.epsilon);
    r.u_delta = anchor_gain(r.delta_lo, r.delta_hi, r.delta_tau, cfg.epsilon);
    r.d_seq = difficulty_gate(r.seq_lo, r.seq_hi, cfg.kappa);
    r.d_delta = difficulty_gate(r.delta_lo, r.delta_hi, cfg.kappa);
    r.quality = quality_term(r.u_seq, r.u_delta, r.d_seq, r.d_delta, cfg);
    const auto c = update_cost(n_updates, n_full, cfg);
    r.cost = c.cost;
    r.cost_clamped = c.clamped;
    r.n_updates = n_updates;
    r.ret = r.quality - r.cost;
    return r;
}

RewardBreakdown path_return(const NoiseTrajectory& traj, const EpisodeSpec& episode, const FrozenPolicy& policy,
                            const LatentState& init_noise, const AnchorCache& anchors, int n_full,
                            const RewardConfig& cfg) {
    if (anchors.noise_digest != latent_digest(init_noise)) {
        throw std::invalid_argument("path_return: anchors were computed from a different initial noise");
    }
    const auto action = policy.act(episode, traj.terminal_latent, traj.terminal_sigma);
    return path_return(action, traj.n_updates, episode, anchors, n_full, cfg);
}

std::string to_json_line(const RewardBreakdown& r) {
    nlohmann::ordered_json j;
    j["L_seq_tau"] = r.seq_tau;
    j["L_delta_tau"] = r.delta_tau;
    j["L_seq_lo"] = r.seq_lo;
    j["L_seq_hi"] = r.seq_hi;
    j["L_delta_lo"] = r.delta_lo;
    j["L_delta_hi"] = r.delta_hi;
    j["u_seq"] = r.u_seq;
    j["u_delta"] = r.u_delta;
    j["D_seq"] = r.d_seq;
    j["D_delta"] = r.d_delta;
    j["Q"] = r.quality;
    j["C"] = r.cost;
    j["R"] = r.ret;
    j["n_updates"] = r.n_updates;
    j["cost_clamped"] = r.cost_clamped;
    return j.dump();
}

}  // namespace sants
