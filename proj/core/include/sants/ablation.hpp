#pragma once

#include <span>
#include <string>
#include <string_view>

#include "sants/trainer.hpp"

namespace sants {

enum class Variant { FixedFull, FixedK, StopOnly, JumpOnly, Full };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);
bool is_learned(Variant v);
ScheduleMode schedule_mode(Variant v);

struct AblationRow {
    std::string name;  // e.g. "fixed_k=5"
    Variant variant = Variant::Full;
    int k = 0;
    EvalSummary summary;
};

/// Evaluates one variant on a prepared split. Learned variants need `net`
/// (trained for that variant); fixed variants ignore it.
AblationRow run_ablation(Variant variant, const SyntheticPolicy& policy, std::span<const EvalEpisode> eval,
                         const SchedulerConfig& sched, const RewardConfig& reward, const SchedulerNet* net = nullptr,
                         int k = 5, int workers = 1);

/// CSV with a fixed header: variant,k,episodes,mean_error,mean_updates,mean_return,...
std::string ablation_csv(std::span<const AblationRow> rows);

}  // namespace sants
