#include "sants/run_config.hpp"

#include <sstream>

#include "sants/grid.hpp"

namespace sants {

namespace {

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw ConfigError("diagnostics.depth_fractions: empty entry");
        try {
            std::size_t used = 0;
            const std::string token = item.substr(b, e - b + 1);
            out.push_back(std::stod(token, &used));
            if (used != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
            throw ConfigError("diagnostics.depth_fractions: bad number '" + item + "'");
        }
    }
    return out;
}

RunConfig from_document(KeyValueDocument& doc, const std::map<std::string, std::string>& overrides) {
    for (const auto& [k, v] : overrides) doc.set(k, v);
    RunConfig cfg;
    doc.read("run.seed", cfg.seed);
    read_scheduler_config(doc, cfg.scheduler);
    read_testbed_config(doc, cfg.testbed);
    read_reward_config(doc, cfg.reward);
    read_trainer_config(doc, cfg.trainer);
    read_diagnostics_config(doc, cfg.diagnostics);
    doc.finish();
    cfg.trainer.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

}  // namespace

void DiagnosticsConfig::validate() const {
    const auto fail = [](const std::string& what) { throw ConfigError("diagnostics config: " + what); };
    if (scan_episodes < 1) fail("scan_episodes must be >= 1");
    if (rollout_episodes < 1) fail("rollout_episodes must be >= 1");
    if (validation_episodes < 0) fail("validation_episodes must be >= 0");
    if (eval_episodes < 1) fail("eval_episodes must be >= 1");
    if (fixed_k < 1) fail("fixed_k must be >= 1");
    try {
        (void)depths();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
}

std::vector<double> DiagnosticsConfig::depths() const {
    return depth_fractions.empty() ? default_depth_fractions() : build_depth_grid(depth_fractions);
}

void read_diagnostics_config(KeyValueDocument& doc, DiagnosticsConfig& cfg) {
    doc.read("diagnostics.scan_episodes", cfg.scan_episodes);
    if (doc.contains("diagnostics.depth_fractions")) {
        std::string list;
        doc.read("diagnostics.depth_fractions", list);
        cfg.depth_fractions = parse_list(list);
    }
    doc.read("diagnostics.rollout_episodes", cfg.rollout_episodes);
    doc.read("diagnostics.validation_episodes", cfg.validation_episodes);
    doc.read("diagnostics.eval_episodes", cfg.eval_episodes);
    doc.read("diagnostics.fixed_k", cfg.fixed_k);
    cfg.validate();
}

std::string to_key_value_text(const DiagnosticsConfig& cfg) {
    std::string list;
    for (double d : cfg.depths()) {
        if (!list.empty()) list += ", ";
        list += format_real(d);
    }
    std::string out;
    out += "diagnostics.scan_episodes = " + std::to_string(cfg.scan_episodes) + '\n';
    out += "diagnostics.depth_fractions = " + list + '\n';
    out += "diagnostics.rollout_episodes = " + std::to_string(cfg.rollout_episodes) + '\n';
    out += "diagnostics.validation_episodes = " + std::to_string(cfg.validation_episodes) + '\n';
    out += "diagnostics.eval_episodes = " + std::to_string(cfg.eval_episodes) + '\n';
    out += "diagnostics.fixed_k = " + std::to_string(cfg.fixed_k) + '\n';
    return out;
}

void RunConfig::validate() const {
    scheduler.validate();
    testbed.validate();
    reward.validate();
    trainer.validate();
    diagnostics.validate();
    if (scheduler.d_feat != testbed.d_feat) throw ConfigError("scheduler.d_feat must equal testbed.d_feat");
    if (reward.sigma_lo != scheduler.sigma_early) throw ConfigError("reward.sigma_lo must equal scheduler.sigma_early");
    if (reward.sigma_hi != scheduler.sigma_full) throw ConfigError("reward.sigma_hi must equal scheduler.sigma_full");
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          const std::map<std::string, std::string>& overrides) {
    KeyValueDocument doc = path ? KeyValueDocument::load(*path) : KeyValueDocument::parse("");
    return from_document(doc, overrides);
}

RunConfig parse_run_config(std::string_view text, const std::map<std::string, std::string>& overrides) {
    KeyValueDocument doc = KeyValueDocument::parse(text);
    return from_document(doc, overrides);
}

std::string to_key_value_text(const RunConfig& cfg) {
    std::string out = "run.seed = " + std::to_string(cfg.seed) + '\n';
    out += to_key_value_text(cfg.scheduler);
    out += to_key_value_text(cfg.testbed);
    out += to_key_value_text(cfg.reward);
    out += to_key_value_text(cfg.trainer);
    out += to_key_value_text(cfg.diagnostics);
    return out;
}

}  // namespace sants
