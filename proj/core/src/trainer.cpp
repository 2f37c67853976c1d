#include "sants/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "sants/grid.hpp"
#include "sants/parallel.hpp"

namespace sants {

namespace {

// d/dm and d/dc of a function of Beta(alpha, beta) given its alpha/beta partials.
std::pair<double, double> chain_mode_conc(const BetaParams& d, double mode, double conc) {
    return {(conc - 2.0) * (d.alpha - d.beta), mode * d.alpha + (1.0 - mode) * d.beta};
}

BetaParams reference_beta(double reference_ratio, const TrainerConfig& cfg) {
    return beta_from_mode(clamp_ratio(reference_ratio), cfg.kl_ref_concentration);
}

// One forward pass per decision, shared by log-probability and KL terms.
struct PathEval {
    std::vector<ForwardCache> caches;
    std::vector<NetOutput> outputs;
    std::vector<HeadGrad> dlogp;
    std::vector<HeadGrad> dkl;  // already divided by the decision count
    double logprob = 0.0;
    double kl = 0.0;
};

PathEval evaluate_path(const SchedulerNet& net, const PathSample& sample, const TrainerConfig& cfg, bool want_grad) {
    const auto& records = sample.rollout.decisions;
    const std::size_t n = records.size();
    PathEval ev;
    ev.outputs.resize(n);
    if (want_grad) {
        ev.caches.resize(n);
        ev.dlogp.resize(n);
        ev.dkl.resize(n);
    }
    const bool stop_on = adaptive_stop(sample.mode);
    const bool jump_on = adaptive_jump(sample.mode);
    const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& rec = records[k];
        const NetOutput out = net.forward(rec.feature, rec.sigma, want_grad ? &ev.caches[k] : nullptr);
        ev.outputs[k] = out;
        const double h = sigmoid(out.score);
        HeadGrad lp{}, kl{};

        if (stop_on) {
            if (rec.stopped) {
                ev.logprob += log_stop_prob(out.score);
                lp.score = 1.0 - h;
            } else {
                ev.logprob += log_continue_prob(out.score);
                lp.score = -h;
            }
            ev.kl += inv_n * bernoulli_kl(out.score, cfg.kl_ref_stop);
            kl.score = inv_n * bernoulli_kl_grad(out.score, cfg.kl_ref_stop);
        }
        if (jump_on) {
            const BetaParams p = beta_from_mode(out.mode, out.concentration);
            if (rec.ratio) {
                ev.logprob += cfg.jump_logprob_scale * ratio_log_pdf(p, *rec.ratio);
                const auto [dm, dc] = chain_mode_conc(ratio_log_pdf_grad(p, *rec.ratio), out.mode, out.concentration);
                lp.mode = cfg.jump_logprob_scale * dm;
                lp.concentration = cfg.jump_logprob_scale * dc;
            }
            const BetaParams q = reference_beta(rec.reference_ratio, cfg);
            ev.kl += inv_n * beta_kl(p, q);
            const auto [dm, dc] = chain_mode_conc(beta_kl_grad(p, q), out.mode, out.concentration);
            kl.mode = inv_n * dm;
            kl.concentration = inv_n * dc;
        }
        if (want_grad) {
            ev.dlogp[k] = lp;
            ev.dkl[k] = kl;
        }
    }
    return ev;
}

void backprop(const SchedulerNet& net, const PathEval& ev, double w_logp, double w_kl, std::span<double> grad) {
    for (std::size_t k = 0; k < ev.caches.size(); ++k) {
        const HeadGrad g{w_logp * ev.dlogp[k].score + w_kl * ev.dkl[k].score,
                         w_logp * ev.dlogp[k].mode + w_kl * ev.dkl[k].mode,
                         w_logp * ev.dlogp[k].concentration + w_kl * ev.dkl[k].concentration};
        if (g.score == 0.0 && g.mode == 0.0 && g.concentration == 0.0) continue;
        net.backward(ev.caches[k], g, grad);
    }
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void TrainerConfig::validate() const {
    const auto fail = [](const std::string& what) { throw ConfigError("trainer config: " + what); };
    if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
    if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
    if (ppo_epochs < 1) fail("ppo_epochs must be >= 1");
    if (!(clip_range > 0.0 && clip_range < 1.0)) fail("clip_range must be in (0, 1)");
    if (!(grad_norm_clip > 0.0)) fail("grad_norm_clip must be > 0");
    if (!(lambda_kl >= 0.0)) fail("lambda_kl must be >= 0");
    if (!(jump_logprob_scale > 0.0)) fail("jump_logprob_scale must be > 0");
    if (!(ema_decay >= 0.0 && ema_decay < 1.0)) fail("ema_decay must be in [0, 1)");
    if (total_updates < 0) fail("total_updates must be >= 0");
    if (rollouts_per_update < 1) fail("rollouts_per_update must be >= 1");
    if (eval_interval < 1) fail("eval_interval must be >= 1");
    if (eval_episodes < 0) fail("eval_episodes must be >= 0");
    if (!(kl_ref_stop > 0.0 && kl_ref_stop < 1.0)) fail("kl_ref_stop must be in (0, 1)");
    if (!(kl_ref_concentration > 2.0)) fail("kl_ref_concentration must be > 2");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam betas in [0, 1)");
    if (!(adam_eps > 0.0)) fail("adam_eps must be > 0");
    if (hidden1 < 1 || hidden2 < 1) fail("hidden widths must be >= 1");
    if (!(init_head_scale >= 0.0)) fail("init_head_scale must be >= 0");
}

void read_trainer_config(KeyValueDocument& doc, TrainerConfig& cfg) {
    doc.read("trainer.learning_rate", cfg.learning_rate);
    doc.read("trainer.weight_decay", cfg.weight_decay);
    doc.read("trainer.ppo_epochs", cfg.ppo_epochs);
    doc.read("trainer.clip_range", cfg.clip_range);
    doc.read("trainer.grad_norm_clip", cfg.grad_norm_clip);
    doc.read("trainer.lambda_kl", cfg.lambda_kl);
    doc.read("trainer.jump_logprob_scale", cfg.jump_logprob_scale);
    doc.read("trainer.ema_decay", cfg.ema_decay);
    doc.read("trainer.total_updates", cfg.total_updates);
    doc.read("trainer.rollouts_per_update", cfg.rollouts_per_update);
    doc.read("trainer.eval_interval", cfg.eval_interval);
    doc.read("trainer.eval_episodes", cfg.eval_episodes);
    doc.read("trainer.kl_ref_stop", cfg.kl_ref_stop);
    doc.read("trainer.kl_ref_concentration", cfg.kl_ref_concentration);
    doc.read("trainer.adam_beta1", cfg.adam_beta1);
    doc.read("trainer.adam_beta2", cfg.adam_beta2);
    doc.read("trainer.adam_eps", cfg.adam_eps);
    doc.read("trainer.hidden1", cfg.hidden1);
    doc.read("trainer.hidden2", cfg.hidden2);
    doc.read("trainer.init_head_scale", cfg.init_head_scale);
    doc.read("trainer.init_stop_bias", cfg.init_stop_bias);
    doc.read("trainer.init_mode_bias", cfg.init_mode_bias);
    doc.read("trainer.init_concentration_bias", cfg.init_concentration_bias);
    if (doc.contains("trainer.mode")) {
        std::string mode;
        doc.read("trainer.mode", mode);
        cfg.mode = parse_schedule_mode(mode);
    }
    cfg.validate();
}

std::string to_key_value_text(const TrainerConfig& cfg) {
    std::string out;
    const auto put = [&out](std::string_view key, const std::string& value) {
        out += "trainer.";
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    };
    put("learning_rate", format_real(cfg.learning_rate));
    put("weight_decay", format_real(cfg.weight_decay));
    put("ppo_epochs", std::to_string(cfg.ppo_epochs));
    put("clip_range", format_real(cfg.clip_range));
    put("grad_norm_clip", format_real(cfg.grad_norm_clip));
    put("lambda_kl", format_real(cfg.lambda_kl));
    put("jump_logprob_scale", format_real(cfg.jump_logprob_scale));
    put("ema_decay", format_real(cfg.ema_decay));
    put("total_updates", std::to_string(cfg.total_updates));
    put("rollouts_per_update", std::to_string(cfg.rollouts_per_update));
    put("eval_interval", std::to_string(cfg.eval_interval));
    put("eval_episodes", std::to_string(cfg.eval_episodes));
    put("kl_ref_stop", format_real(cfg.kl_ref_stop));
    put("kl_ref_concentration", format_real(cfg.kl_ref_concentration));
    put("adam_beta1", format_real(cfg.adam_beta1));
    put("adam_beta2", format_real(cfg.adam_beta2));
    put("adam_eps", format_real(cfg.adam_eps));
    put("hidden1", std::to_string(cfg.hidden1));
    put("hidden2", std::to_string(cfg.hidden2));
    put("init_head_scale", format_real(cfg.init_head_scale));
    put("init_stop_bias", format_real(cfg.init_stop_bias));
    put("init_mode_bias", format_real(cfg.init_mode_bias));
    put("init_concentration_bias", format_real(cfg.init_concentration_bias));
    put("mode", std::string(to_string(cfg.mode)));
    return out;
}

double path_logprob(const SchedulerNet& net, const PathSample& sample, const TrainerConfig& cfg,
                    std::span<double> grad, double weight) {
    const bool want_grad = !grad.empty();
    const PathEval ev = evaluate_path(net, sample, cfg, want_grad);
    if (want_grad) backprop(net, ev, weight, 0.0, grad);
    return ev.logprob;
}

double kl_reference_penalty(const SchedulerNet& net, const PathSample& sample, const TrainerConfig& cfg,
                            std::span<double> grad, double weight) {
    const bool want_grad = !grad.empty();
    const PathEval ev = evaluate_path(net, sample, cfg, want_grad);
    if (want_grad) backprop(net, ev, 0.0, weight, grad);
    return ev.kl;
}

double kl_reference_penalty(std::span<const NetOutput> outputs, const PathSample& sample, const TrainerConfig& cfg) {
    const auto& records = sample.rollout.decisions;
    if (outputs.size() != records.size()) throw std::invalid_argument("kl_reference_penalty: output count mismatch");
    if (records.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k < records.size(); ++k) {
        if (adaptive_stop(sample.mode)) total += bernoulli_kl(outputs[k].score, cfg.kl_ref_stop);
        if (adaptive_jump(sample.mode)) {
            total += beta_kl(beta_from_mode(outputs[k].mode, outputs[k].concentration),
                             reference_beta(records[k].reference_ratio, cfg));
        }
    }
    return total / static_cast<double>(records.size());
}

double clip_grad_norm(std::span<double> grad, double max_norm) {
    double sq = 0.0;
    for (double g : grad) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (double& g : grad) g *= scale;
    }
    return norm;
}

void adamw_step(std::span<double> params, std::span<const double> grad, AdamState& state, const TrainerConfig& cfg) {
    if (grad.size() != params.size()) throw std::invalid_argument("adamw_step: size mismatch");
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
        state.step = 0;
    }
    ++state.step;
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    const double decay = 1.0 - cfg.learning_rate * cfg.weight_decay;
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad[i];
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] = params[i] * decay - cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
}

PpoStats ppo_update(SchedulerNet& net, std::span<const PathSample> samples, EmaBaseline& baseline, AdamState& adam,
                    const TrainerConfig& cfg) {
    PpoStats stats;
    if (samples.empty()) return stats;
    const double inv_b = 1.0 / static_cast<double>(samples.size());
    std::vector<double> advantages(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) advantages[i] = samples[i].reward.ret - baseline.value;
    for (double a : advantages) stats.advantage += a * inv_b;

    const std::vector<double> snapshot(net.params().begin(), net.params().end());
    const AdamState adam_snapshot = adam;
    std::vector<double> grad(net.parameter_count());

    for (int epoch = 0; epoch < cfg.ppo_epochs && !stats.aborted; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0, surrogate = 0.0, kl = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto& s = samples[i];
            const PathEval ev = evaluate_path(net, s, cfg, true);
            const double ratio = std::exp(ev.logprob - s.behavior_logprob);
            if (epoch == 0 && i == 0) stats.first_ratio = ratio;
            const double a = advantages[i];
            const double unclipped = ratio * a;
            const double clipped = std::clamp(ratio, 1.0 - cfg.clip_range, 1.0 + cfg.clip_range) * a;
            const double obj = std::min(unclipped, clipped);
            // Gradient flows only through the unclipped branch when it is the active minimum.
            const double d_logp = unclipped <= clipped ? -a * ratio : 0.0;
            surrogate += obj * inv_b;
            kl += ev.kl * inv_b;
            loss += (-obj + cfg.lambda_kl * ev.kl) * inv_b;
            backprop(net, ev, d_logp * inv_b, cfg.lambda_kl * inv_b, grad);
        }
        stats.loss = loss;
        stats.surrogate = surrogate;
        stats.kl = kl;
        if (!std::isfinite(loss) || !all_finite(grad)) {
            stats.aborted = true;
            stats.abort_reason = "non-finite loss or gradient at epoch " + std::to_string(epoch);
            break;
        }
        stats.grad_norm = clip_grad_norm(grad, cfg.grad_norm_clip);
        adamw_step(net.mutable_params(), grad, adam, cfg);
        if (!all_finite(net.params())) {
            stats.aborted = true;
            stats.abort_reason = "non-finite parameters after step at epoch " + std::to_string(epoch);
        }
    }
    if (stats.aborted) {
        auto p = net.mutable_params();
        std::copy(snapshot.begin(), snapshot.end(), p.begin());
        adam = adam_snapshot;
    }
    for (const auto& s : samples) {
        if (std::isfinite(s.reward.ret)) baseline.update(s.reward.ret, cfg.ema_decay);
    }
    return stats;
}

std::vector<EvalEpisode> prepare_eval(const SyntheticPolicy& policy, std::vector<EpisodeSpec> episodes,
                                      const SchedulerConfig& sched, const RewardConfig& reward, int workers) {
    std::vector<EvalEpisode> out(episodes.size());
    parallel_for(episodes.size(), workers, [&](std::size_t i) {
        out[i].episode = std::move(episodes[i]);
        out[i].init_noise = policy.initial_noise(out[i].episode);
        out[i].anchors = compute_anchors(policy, out[i].episode, out[i].init_noise, sched, reward);
    });
    return out;
}

EpisodeScore score_trajectory(const SyntheticPolicy& policy, const EvalEpisode& ev, const NoiseTrajectory& traj,
                              const SchedulerConfig& sched, const RewardConfig& reward) {
    const auto action = policy.act(ev.episode, traj.terminal_latent, traj.terminal_sigma);
    EpisodeScore s;
    s.reward = path_return(action, traj.n_updates, ev.episode, ev.anchors, sched.n_full, reward);
    s.error = masked_action_error(action, ev.episode.demo, keyframe_weights(ev.episode.demo, reward), reward);
    s.terminal_depth = traj.terminal_depth();
    return s;
}

EvalSummary summarize(std::span<const EpisodeScore> scores) {
    EvalSummary out;
    out.episodes = static_cast<int>(scores.size());
    if (scores.empty()) return out;
    for (const auto& s : scores) {
        out.mean_return += s.reward.ret;
        out.mean_error += s.error;
        out.mean_seq_error += s.reward.seq_tau;
        out.mean_delta_error += s.reward.delta_tau;
        out.mean_updates += s.reward.n_updates;
        out.mean_terminal_depth += s.terminal_depth;
    }
    const double n = static_cast<double>(scores.size());
    out.mean_return /= n;
    out.mean_error /= n;
    out.mean_seq_error /= n;
    out.mean_delta_error /= n;
    out.mean_updates /= n;
    out.mean_terminal_depth /= n;
    return out;
}

EvalSummary evaluate_net(const SyntheticPolicy& policy, const SchedulerNet& net, std::span<const EvalEpisode> eval,
                         const SchedulerConfig& sched, const RewardConfig& reward, ScheduleMode mode, int workers) {
    std::vector<EpisodeScore> scores(eval.size());
    parallel_for(eval.size(), workers, [&](std::size_t i) {
        const ScheduleContext ctx{policy, eval[i].episode, sched, mode};
        const auto traj = run_deploy(ctx, net, eval[i].init_noise);
        scores[i] = score_trajectory(policy, eval[i], traj, sched, reward);
    });
    return summarize(scores);
}

bool better_checkpoint(const EvalSummary& a, const EvalSummary& b) {
    if (a.mean_return != b.mean_return) return a.mean_return > b.mean_return;
    return a.mean_updates < b.mean_updates;
}

EpisodeStream make_episode_stream(const SyntheticPolicy& policy, std::uint64_t run_seed) {
    auto index = std::make_shared<std::uint64_t>(0);
    return [&policy, run_seed, index]() -> std::optional<EpisodeSpec> {
        return policy.sample_episode(derive_seed(run_seed, "episodes/train", (*index)++));
    };
}

PathSample sample_path(const SyntheticPolicy& policy, const SchedulerNet& net, const EpisodeSpec& episode,
                       const SchedulerConfig& sched, const RewardConfig& reward, const TrainerConfig& cfg, Rng& rng) {
    const LatentState noise = policy.initial_noise(episode);
    const AnchorCache anchors = compute_anchors(policy, episode, noise, sched, reward);
    const ScheduleContext ctx{policy, episode, sched, cfg.mode};
    PathSample s;
    s.mode = cfg.mode;
    s.rollout = run_rollout(ctx, net, noise, rng);
    s.reward = path_return(s.rollout.trajectory, episode, policy, noise, anchors, sched.n_full, reward);
    s.behavior_logprob = s.rollout.stop_logprob + cfg.jump_logprob_scale * s.rollout.jump_logprob;
    return s;
}

namespace {

std::string eval_line(int update, const EvalSummary& e, bool best) {
    nlohmann::ordered_json j;
    j["eval"] = update;
    j["episodes"] = e.episodes;
    j["mean_return"] = e.mean_return;
    j["mean_error"] = e.mean_error;
    j["mean_seq_error"] = e.mean_seq_error;
    j["mean_delta_error"] = e.mean_delta_error;
    j["mean_updates"] = e.mean_updates;
    j["mean_terminal_depth"] = e.mean_terminal_depth;
    j["best"] = best;
    return j.dump();
}

}  // namespace

TrainResult train(const SyntheticPolicy& policy, SchedulerNet net, const EpisodeStream& stream,
                  std::span<const EvalEpisode> validation, const SchedulerConfig& sched, const RewardConfig& reward,
                  const TrainerConfig& cfg, const TrainOptions& options) {
    cfg.validate();
    sched.validate();
    reward.validate();
    if (net.feature_dim() != policy.feature_dim()) {
        throw ConfigError("scheduler net feature dimension does not match the policy");
    }
    const auto emit = [&options](const std::string& line) {
        if (options.log) options.log(line);
    };

    TrainResult result{net, net, {}, -1, 0, 0, false, policy.state_checksum(), 0};
    EmaBaseline baseline;
    AdamState adam;

    for (int u = 0; u < cfg.total_updates; ++u) {
        if (u == 0) {
            nlohmann::ordered_json h;
            h["header"] = "sants-train";
            h["mode"] = std::string(to_string(cfg.mode));
            h["parameters"] = net.parameter_count();
            h["selection"] = "validation mean return, ties broken by fewer updates";
            h["policy_checksum"] = result.policy_checksum_before;
            emit(h.dump());
        }
        std::vector<EpisodeSpec> episodes;
        for (int j = 0; j < cfg.rollouts_per_update; ++j) {
            auto ep = stream();
            if (!ep) break;
            episodes.push_back(std::move(*ep));
        }
        if (episodes.size() < static_cast<std::size_t>(cfg.rollouts_per_update)) {
            result.stream_exhausted = true;
            nlohmann::ordered_json j;
            j["event"] = "episode stream exhausted";
            j["update"] = u;
            emit(j.dump());
            break;
        }

        std::vector<PathSample> samples(episodes.size());
        parallel_for(episodes.size(), options.workers, [&](std::size_t i) {
            const auto index = static_cast<std::uint64_t>(u) * static_cast<std::uint64_t>(cfg.rollouts_per_update) + i;
            Rng rng = make_rng(cfg.seed, "rollout", index);
            samples[i] = sample_path(policy, net, episodes[i], sched, reward, cfg, rng);
        });

        const double baseline_before = baseline.value;
        const PpoStats stats = ppo_update(net, samples, baseline, adam, cfg);
        if (stats.aborted) ++result.aborted_updates;
        result.updates_done = u + 1;

        nlohmann::ordered_json j;
        j["update"] = u;
        double mean_r = 0.0, mean_q = 0.0, mean_c = 0.0, mean_n = 0.0;
        for (const auto& s : samples) {
            mean_r += s.reward.ret;
            mean_q += s.reward.quality;
            mean_c += s.reward.cost;
            mean_n += s.reward.n_updates;
        }
        const double inv = 1.0 / static_cast<double>(samples.size());
        j["episode"] = samples.size() == 1 ? episodes[0].seed : 0;
        j["R"] = mean_r * inv;
        j["Q"] = mean_q * inv;
        j["C"] = mean_c * inv;
        j["n_updates"] = mean_n * inv;
        j["kl"] = stats.kl;
        j["loss"] = stats.loss;
        j["grad_norm"] = stats.grad_norm;
        j["ratio0"] = stats.first_ratio;
        j["advantage"] = stats.advantage;
        j["baseline_before"] = baseline_before;
        j["baseline"] = baseline.value;
        if (stats.aborted) {
            j["aborted"] = true;
            j["reason"] = stats.abort_reason;
        }
        emit(j.dump());

        const bool eval_now = !validation.empty() && ((u + 1) % cfg.eval_interval == 0 || u + 1 == cfg.total_updates);
        if (eval_now) {
            const auto summary = evaluate_net(policy, net, validation, sched, reward, cfg.mode, options.workers);
            const bool best = result.best_update < 0 || better_checkpoint(summary, result.best_eval);
            if (best) {
                result.best_net = net;
                result.best_eval = summary;
                result.best_update = u + 1;
                if (options.on_best) options.on_best(result.best_net, summary, u + 1);
            }
            emit(eval_line(u + 1, summary, best));
        }
    }
    if (validation.empty() && result.updates_done > 0) result.best_net = net;
    result.final_net = std::move(net);
    result.policy_checksum_after = policy.state_checksum();
    return result;
}

}  // namespace sants
