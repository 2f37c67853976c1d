#include "sants/ablation.hpp"

#include "sants/grid.hpp"
#include "sants/parallel.hpp"

namespace sants {

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::FixedFull: return "fixed_full";
        case Variant::FixedK: return "fixed_k";
        case Variant::StopOnly: return "stop_only";
        case Variant::JumpOnly: return "jump_only";
        case Variant::Full: return "full";
    }
    return "?";
}

Variant parse_variant(std::string_view s) {
    if (s == "fixed_full") return Variant::FixedFull;
    if (s == "fixed_k") return Variant::FixedK;
    if (s == "stop_only") return Variant::StopOnly;
    if (s == "jump_only") return Variant::JumpOnly;
    if (s == "full") return Variant::Full;
    throw ConfigError("unknown ablation variant '" + std::string(s) + "'");
}

bool is_learned(Variant v) { return v != Variant::FixedFull && v != Variant::FixedK; }

ScheduleMode schedule_mode(Variant v) {
    if (v == Variant::StopOnly) return ScheduleMode::StopOnly;
    if (v == Variant::JumpOnly) return ScheduleMode::JumpOnly;
    return ScheduleMode::Full;
}

AblationRow run_ablation(Variant variant, const SyntheticPolicy& policy, std::span<const EvalEpisode> eval,
                         const SchedulerConfig& sched, const RewardConfig& reward, const SchedulerNet* net, int k,
                         int workers) {
    if (eval.empty()) throw std::invalid_argument("run_ablation: empty evaluation split");
    AblationRow row;
    row.variant = variant;
    row.name = std::string(to_string(variant));
    if (is_learned(variant)) {
        if (!net) throw std::invalid_argument("run_ablation: learned variant needs a scheduler net");
        row.summary = evaluate_net(policy, *net, eval, sched, reward, schedule_mode(variant), workers);
        return row;
    }
    std::vector<double> levels;
    if (variant == Variant::FixedFull) {
        levels = build_full_grid(sched);
    } else {
        if (k < 1) throw ConfigError("fixed_k needs k >= 1");
        levels = build_fixed_k_grid(sched, k);
        row.k = k;
        row.name += "=" + std::to_string(k);
    }
    std::vector<EpisodeScore> scores(eval.size());
    parallel_for(eval.size(), workers, [&](std::size_t i) {
        const auto traj = run_fixed_levels(policy, eval[i].episode, levels, eval[i].init_noise);
        scores[i] = score_trajectory(policy, eval[i], traj, sched, reward);
    });
    row.summary = summarize(scores);
    return row;
}

std::string ablation_csv(std::span<const AblationRow> rows) {
    std::string out = "variant,k,episodes,mean_error,mean_updates,mean_return,mean_seq_error,mean_delta_error,"
                      "mean_terminal_depth\n";
    for (const auto& r : rows) {
        const auto& s = r.summary;
        out += r.name + ',' + std::to_string(r.k) + ',' + std::to_string(s.episodes) + ',' + format_real(s.mean_error) +
               ',' + format_real(s.mean_updates) + ',' + format_real(s.mean_return) + ',' +
               format_real(s.mean_seq_error) + ',' + format_real(s.mean_delta_error) + ',' +
               format_real(s.mean_terminal_depth) + '\n';
    }
    return out;
}

}  // namespace sants
