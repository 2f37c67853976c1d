#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>

#include "sants/ablation.hpp"
#include "sants/checkpoint.hpp"
#include "sants/checksum.hpp"
#include "sants/diagnostics.hpp"
#include "sants/episode_io.hpp"
#include "sants/parallel.hpp"
#include "sants/run_config.hpp"
#include "sants/scheduler.hpp"
#include "sants/trainer.hpp"

#ifndef SANTS_VERSION
#define SANTS_VERSION "unknown"
#endif

namespace sants::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::string run_dir;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    std::vector<std::string> sets;
};

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Owns a run directory: config snapshot, manifest and output inventory.
class RunDir {
  public:
    RunDir(const Common& common, std::string command, const RunConfig& cfg, std::vector<std::string> argv)
        : root_(common.run_dir), command_(std::move(command)), argv_(std::move(argv)) {
        if (root_.empty()) throw ConfigError("--run-dir is required");
        std::error_code ec;
        fs::create_directories(root_, ec);
        if (ec || !fs::is_directory(root_)) throw ConfigError("cannot create run directory " + root_.string());
        config_text_ = to_key_value_text(cfg);
        seed_ = cfg.seed;
        start_ = utc_now();
        write("config-" + command_ + ".snapshot", config_text_);
        write_manifest("running");
    }

    const fs::path& root() const { return root_; }
    fs::path path(const std::string& name) const { return root_ / name; }

    void write(const std::string& name, std::string_view contents) {
        write_file_atomic(path(name), contents);
        record(name);
    }

    void record(const std::string& name) {
        if (std::find(outputs_.begin(), outputs_.end(), name) == outputs_.end()) outputs_.push_back(name);
    }

    void finish(const std::string& status) { write_manifest(status); }

  private:
    void write_manifest(const std::string& status) {
        nlohmann::ordered_json m;
        m["tool"] = "sants";
        m["version"] = SANTS_VERSION;
        m["command"] = command_;
        m["argv"] = argv_;
        m["seed"] = seed_;
        m["config"] = config_text_;
        m["start"] = start_;
        if (status != "running") m["end"] = utc_now();
        m["status"] = status;
        auto inventory = nlohmann::ordered_json::array();
        for (const auto& name : outputs_) {
            nlohmann::ordered_json e;
            e["path"] = name;
            std::error_code ec;
            const auto size = fs::file_size(path(name), ec);
            e["bytes"] = ec ? 0 : size;
            e["crc32"] = ec ? 0u : crc32_file(path(name));
            inventory.push_back(std::move(e));
        }
        m["outputs"] = std::move(inventory);
        write_file_atomic(path("manifest-" + command_ + ".json"), m.dump(2) + "\n");
    }

    fs::path root_;
    std::string command_;
    std::vector<std::string> argv_;
    std::string config_text_;
    std::uint64_t seed_ = 0;
    std::string start_;
    std::vector<std::string> outputs_;
};

void add_common(CLI::App& app, Common& c) {
    app.add_option("--config", c.config, "Key-value config file")->envname("SANTS_CONFIG");
    app.add_option("--run-dir", c.run_dir, "Output directory")->envname("SANTS_RUN_DIR");
    app.add_option("--seed", c.seed, "Run seed (overrides run.seed)")->envname("SANTS_SEED");
    app.add_option("--workers", c.workers, "Worker threads for episode-parallel work")
        ->envname("SANTS_WORKERS")
        ->check(CLI::Range(1, 1024));
    app.add_option("--set", c.sets, "Config override key=value (repeatable)");
}

RunConfig resolve_config(const Common& c, std::map<std::string, std::string> overrides) {
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
        overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    if (c.seed) overrides["run.seed"] = std::to_string(*c.seed);
    std::optional<fs::path> path;
    if (!c.config.empty()) path = c.config;
    return load_run_config(path, overrides);
}

/// Arguments that are not folded into the config snapshot, kept for replay.
std::vector<std::string> replay_args(const std::vector<std::string>& args) {
    static const std::vector<std::string> folded = {"--config", "--run-dir", "--seed", "--set"};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const auto& a = args[i];
        bool skip = false;
        for (const auto& f : folded) {
            if (a == f) {
                ++i;
                skip = true;
                break;
            }
            if (a.rfind(f + "=", 0) == 0) {
                skip = true;
                break;
            }
        }
        if (!skip) out.push_back(a);
    }
    return out;
}

SchedulerNet load_net_for(const fs::path& path, const SyntheticPolicy& policy) {
    SchedulerNet net = load_checkpoint(path);
    if (net.feature_dim() != policy.feature_dim()) {
        throw DataError("checkpoint " + path.string() + " expects feature dimension " +
                        std::to_string(net.feature_dim()) + ", policy has " + std::to_string(policy.feature_dim()));
    }
    return net;
}

void put(std::map<std::string, std::string>& ov, const std::string& key, const std::optional<int>& v) {
    if (v) ov[key] = std::to_string(*v);
}

struct TrainOutcome {
    SchedulerNet best;
    EvalSummary eval;
    int best_update = -1;
    int updates = 0;
};

TrainOutcome run_training(const RunConfig& cfg, const SyntheticPolicy& policy, SchedulerNet init, RunDir& dir,
                          const std::string& prefix, int workers) {
    const auto validation = prepare_eval(policy, sample_split(policy, cfg.seed, "validation",
                                                              cfg.diagnostics.validation_episodes),
                                         cfg.scheduler, cfg.reward, workers);
    const std::string log_name = prefix + "train_log.jsonl";
    const std::string best_name = prefix + "best.ckpt";
    std::ofstream log(dir.path(log_name), std::ios::binary | std::ios::trunc);
    if (!log) throw DataError("cannot open " + dir.path(log_name).string());
    dir.record(log_name);
    TrainOptions opt;
    opt.workers = workers;
    opt.log = [&log](const std::string& line) { log << line << '\n' << std::flush; };
    opt.on_best = [&](const SchedulerNet& net, const EvalSummary&, int) {
        save_checkpoint(dir.path(best_name), net);
        dir.record(best_name);
    };
    auto res = train(policy, std::move(init), make_episode_stream(policy, cfg.seed), validation, cfg.scheduler,
                     cfg.reward, cfg.trainer, opt);
    log.close();
    if (res.policy_checksum_before != res.policy_checksum_after) {
        throw std::logic_error("frozen policy state changed during training");
    }
    if (res.best_update < 0) {
        save_checkpoint(dir.path(best_name), res.best_net);
        dir.record(best_name);
    }
    save_checkpoint(dir.path(prefix + "final.ckpt"), res.final_net);
    dir.record(prefix + "final.ckpt");
    return {std::move(res.best_net), res.best_eval, res.best_update, res.updates_done};
}

int cmd_train(const Common& c, const std::vector<std::string>& argv, std::optional<int> updates,
              const std::string& mode, const std::string& init_path, std::ostream& out) {
    std::map<std::string, std::string> ov;
    put(ov, "trainer.total_updates", updates);
    if (!mode.empty()) ov["trainer.mode"] = mode;
    const RunConfig cfg = resolve_config(c, ov);
    RunDir dir(c, "train", cfg, argv);
    const SyntheticPolicy policy(cfg.testbed, cfg.seed);
    SchedulerNet init = init_path.empty() ? SchedulerNet::initialized(cfg.trainer.net_shape(cfg.testbed.d_feat),
                                                                     cfg.seed, cfg.trainer.net_init())
                                          : load_net_for(init_path, policy);
    dir.write("init.ckpt", serialize_checkpoint(init));
    const auto outcome = run_training(cfg, policy, std::move(init), dir, "", c.workers);
    dir.finish("ok");
    out << "train: updates=" << outcome.updates << " best_update=" << outcome.best_update
        << " val_mean_return=" << format_real(outcome.eval.mean_return)
        << " val_mean_updates=" << format_real(outcome.eval.mean_updates) << '\n';
    return 0;
}

int cmd_rollout(const Common& c, const std::vector<std::string>& argv, const std::string& checkpoint,
                std::optional<int> episodes, const std::string& mode_name, std::ostream& out) {
    std::map<std::string, std::string> ov;
    put(ov, "diagnostics.rollout_episodes", episodes);
    const RunConfig cfg = resolve_config(c, ov);
    const ScheduleMode mode = mode_name.empty() ? cfg.trainer.mode : parse_schedule_mode(mode_name);
    RunDir dir(c, "rollout", cfg, argv);
    const SyntheticPolicy policy(cfg.testbed, cfg.seed);
    const SchedulerNet net = load_net_for(checkpoint, policy);
    const auto eval = prepare_eval(policy, sample_split(policy, cfg.seed, "rollout", cfg.diagnostics.rollout_episodes),
                                   cfg.scheduler, cfg.reward, c.workers);
    std::vector<NoiseTrajectory> runs(eval.size());
    std::vector<EpisodeScore> scores(eval.size());
    parallel_for(eval.size(), c.workers, [&](std::size_t i) {
        const ScheduleContext ctx{policy, eval[i].episode, cfg.scheduler, mode};
        runs[i] = run_deploy(ctx, net, eval[i].init_noise);
        scores[i] = score_trajectory(policy, eval[i], runs[i], cfg.scheduler, cfg.reward);
    });
    std::vector<std::uint64_t> seeds;
    std::string summary_csv = "seed,phase,corruption,n_updates,n_forward,terminal_depth,return,quality,cost,error\n";
    for (std::size_t i = 0; i < eval.size(); ++i) {
        const auto& ep = eval[i].episode;
        seeds.push_back(ep.seed);
        summary_csv += std::to_string(ep.seed) + ',' + std::string(to_string(ep.phase)) + ',' +
                       std::string(to_string(ep.corruption)) + ',' + std::to_string(runs[i].n_updates) + ',' +
                       std::to_string(runs[i].n_forward) + ',' + format_real(runs[i].terminal_depth()) + ',' +
                       format_real(scores[i].reward.ret) + ',' + format_real(scores[i].reward.quality) + ',' +
                       format_real(scores[i].reward.cost) + ',' + format_real(scores[i].error) + '\n';
    }
    dir.write("rollout_traces.csv", export_traces(runs, seeds));
    dir.write("rollout_episodes.csv", summary_csv);
    const auto s = summarize(scores);
    dir.finish("ok");
    out << "rollout: episodes=" << s.episodes << " mode=" << to_string(mode)
        << " mean_return=" << format_real(s.mean_return) << " mean_n_updates=" << format_real(s.mean_updates)
        << " mean_error=" << format_real(s.mean_error) << '\n';
    return 0;
}

int cmd_depth_scan(const Common& c, const std::vector<std::string>& argv, std::optional<int> episodes,
                   std::ostream& out, std::ostream& err) {
    std::map<std::string, std::string> ov;
    put(ov, "diagnostics.scan_episodes", episodes);
    const RunConfig cfg = resolve_config(c, ov);
    RunDir dir(c, "depth-scan", cfg, argv);
    const SyntheticPolicy policy(cfg.testbed, cfg.seed);
    const auto eps = sample_split(policy, cfg.seed, "scan", cfg.diagnostics.scan_episodes);
    const auto m = depth_scan(policy, eps, cfg.diagnostics.depths(), cfg.scheduler, cfg.reward, c.workers);
    std::vector<std::string> warnings;
    const auto curves = phase_curves(m, &warnings);
    for (const auto& w : warnings) err << "warning: " << w << '\n';
    dir.write("scan_episodes.jsonl", serialize_episodes(eps, cfg.testbed));
    dir.write("scan_matrix.csv", scan_matrix_csv(m));
    dir.write("phase_curves.csv", phase_curves_csv(m.depths, curves));
    dir.finish("ok");
    out << "depth-scan: rows=" << m.rows();
    for (const auto& cv : curves) {
        out << ' ' << to_string(cv.phase) << "_rows=" << cv.rows << ' ' << to_string(cv.phase)
            << "_full_depth=" << format_real(cv.mean.back());
    }
    out << '\n';
    return 0;
}

int cmd_stats(const Common& c, const std::vector<std::string>& argv, const std::string& input, std::ostream& out) {
    const RunConfig cfg = resolve_config(c, {});
    RunDir dir(c, "stats", cfg, argv);
    const fs::path src = input.empty() ? dir.path("scan_matrix.csv") : fs::path(input);
    const auto m = parse_scan_matrix_csv(read_file(src));
    const auto stats = scan_stats(m);
    dir.write("scan_stats.csv", scan_stats_csv(stats));
    dir.finish("ok");
    for (const auto& s : stats) {
        out << "stats: " << s.label << " rows=" << s.rows << " not_best_at_full=" << format_real(s.not_best_at_full_rate)
            << " adjacent_increase=" << format_real(s.adjacent_increase_rate)
            << " oracle_mean=" << format_real(s.oracle_mean) << " fixed_full_mean=" << format_real(s.fixed_full_mean)
            << '\n';
    }
    return 0;
}

int cmd_ablate(const Common& c, const std::vector<std::string>& argv, const std::vector<std::string>& variant_names,
               std::optional<int> k, std::optional<int> episodes, const std::vector<std::string>& checkpoints,
               std::ostream& out) {
    std::map<std::string, std::string> ov;
    put(ov, "diagnostics.fixed_k", k);
    put(ov, "diagnostics.eval_episodes", episodes);
    const RunConfig cfg = resolve_config(c, ov);
    std::vector<Variant> variants;
    for (const auto& v : variant_names) variants.push_back(parse_variant(v));
    std::map<Variant, std::string> ckpt;
    for (const auto& entry : checkpoints) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos) {
            ckpt[Variant::Full] = entry;
        } else {
            const Variant v = parse_variant(entry.substr(0, eq));
            if (!is_learned(v)) throw ConfigError("checkpoint given for fixed variant " + entry.substr(0, eq));
            ckpt[v] = entry.substr(eq + 1);
        }
    }
    RunDir dir(c, "ablate", cfg, argv);
    const SyntheticPolicy policy(cfg.testbed, cfg.seed);
    const auto eval = prepare_eval(policy, sample_split(policy, cfg.seed, "eval", cfg.diagnostics.eval_episodes),
                                   cfg.scheduler, cfg.reward, c.workers);
    std::vector<AblationRow> rows;
    for (Variant v : variants) {
        std::optional<SchedulerNet> net;
        if (is_learned(v)) {
            if (auto it = ckpt.find(v); it != ckpt.end()) {
                net = load_net_for(it->second, policy);
            } else {
                RunConfig vc = cfg;
                vc.trainer.mode = schedule_mode(v);
                auto init = SchedulerNet::initialized(vc.trainer.net_shape(vc.testbed.d_feat), vc.seed,
                                                      vc.trainer.net_init());
                net = run_training(vc, policy, std::move(init), dir, std::string(to_string(v)) + "_", c.workers).best;
            }
        }
        rows.push_back(run_ablation(v, policy, eval, cfg.scheduler, cfg.reward, net ? &*net : nullptr,
                                    cfg.diagnostics.fixed_k, c.workers));
    }
    dir.write("ablation.csv", ablation_csv(rows));
    dir.finish("ok");
    for (const auto& r : rows) {
        out << "ablate: " << r.name << " mean_error=" << format_real(r.summary.mean_error)
            << " mean_n_updates=" << format_real(r.summary.mean_updates)
            << " mean_return=" << format_real(r.summary.mean_return) << '\n';
    }
    return 0;
}

int cmd_init_checkpoint(const Common& c, const std::vector<std::string>& argv, const std::string& output,
                        bool always_stop, std::ostream& out) {
    const RunConfig cfg = resolve_config(c, {});
    RunDir dir(c, "init-checkpoint", cfg, argv);
    NetInit init = cfg.trainer.net_init();
    if (always_stop) {
        // Zero head weights and a large stop bias: F >= eta at the first decision.
        init.head_scale = 0.0;
        init.stop_bias = 40.0;
    }
    const auto net = SchedulerNet::initialized(cfg.trainer.net_shape(cfg.testbed.d_feat), cfg.seed, init);
    const std::string name = output.empty() ? "init.ckpt" : output;
    dir.write(name, serialize_checkpoint(net));
    dir.finish("ok");
    out << "init-checkpoint: " << dir.path(name).string() << " parameters=" << net.parameter_count() << '\n';
    return 0;
}

int cmd_replay(const std::string& manifest_path, const std::string& run_dir, std::ostream& out, std::ostream& err) {
    if (run_dir.empty()) throw ConfigError("--run-dir is required");
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest " + manifest_path + ": " + e.what());
    }
    if (!m.contains("argv") || !m.contains("config")) throw DataError("manifest lacks argv/config");
    fs::create_directories(run_dir);
    const fs::path cfg_path = fs::path(run_dir) / "replay.config";
    write_file_atomic(cfg_path, m["config"].get<std::string>());
    auto args = m["argv"].get<std::vector<std::string>>();
    args.push_back("--config");
    args.push_back(cfg_path.string());
    args.push_back("--run-dir");
    args.push_back(run_dir);
    return run(args, out, err);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"sants: adaptive noise-trajectory scheduling on a synthetic video-action testbed"};
    app.require_subcommand(1);
    app.set_version_flag("--version", SANTS_VERSION);

    Common common;
    std::optional<int> updates, episodes, k;
    std::string mode, checkpoint, input, output, init_path, manifest;
    std::vector<std::string> variants{"fixed_full", "fixed_k", "stop_only", "jump_only", "full"};
    std::vector<std::string> checkpoints;
    bool always_stop = false;

    auto* train = app.add_subcommand("train", "Train the scheduler with path-level PPO");
    add_common(*train, common);
    train->add_option("--updates", updates, "Optimization updates (trainer.total_updates)");
    train->add_option("--mode", mode, "full | stop_only | jump_only");
    train->add_option("--init-checkpoint", init_path, "Start from this checkpoint");

    auto* rollout = app.add_subcommand("rollout", "Deterministic deployment on a fresh split");
    add_common(*rollout, common);
    rollout->add_option("--checkpoint", checkpoint, "Scheduler checkpoint")->required()->envname("SANTS_CHECKPOINT");
    rollout->add_option("--episodes", episodes, "Episode count");
    rollout->add_option("--mode", mode, "full | stop_only | jump_only");

    auto* scan = app.add_subcommand("depth-scan", "Fixed-grid depth scan");
    add_common(*scan, common);
    scan->add_option("--episodes", episodes, "Episode count");

    auto* stats = app.add_subcommand("stats", "Statistics over a scan matrix");
    add_common(*stats, common);
    stats->add_option("--input", input, "Scan matrix CSV (default: <run-dir>/scan_matrix.csv)");

    auto* ablate = app.add_subcommand("ablate", "Evaluate schedule variants on one split");
    add_common(*ablate, common);
    ablate->add_option("--variants", variants, "Variants to evaluate")->delimiter(',');
    ablate->add_option("--k", k, "Steps of the fixed_k baseline");
    ablate->add_option("--episodes", episodes, "Evaluation episode count");
    ablate->add_option("--checkpoint", checkpoints, "VARIANT=PATH (or PATH for full); missing ones are trained")
        ->envname("SANTS_CHECKPOINT");

    auto* init = app.add_subcommand("init-checkpoint", "Write a freshly initialized checkpoint");
    add_common(*init, common);
    init->add_option("--output", output, "File name inside the run directory");
    init->add_flag("--always-stop", always_stop, "Stop at the first decision");

    auto* replay = app.add_subcommand("replay", "Re-run a command from its manifest");
    replay->add_option("--manifest", manifest, "manifest-<command>.json")->required();
    replay->add_option("--run-dir", common.run_dir, "Fresh output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << SANTS_VERSION << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    const auto argv = replay_args(args);
    if (train->parsed()) return cmd_train(common, argv, updates, mode, init_path, out);
    if (rollout->parsed()) return cmd_rollout(common, argv, checkpoint, episodes, mode, out);
    if (scan->parsed()) return cmd_depth_scan(common, argv, episodes, out, err);
    if (stats->parsed()) return cmd_stats(common, argv, input, out);
    if (ablate->parsed()) return cmd_ablate(common, argv, variants, k, episodes, checkpoints, out);
    if (init->parsed()) return cmd_init_checkpoint(common, argv, output, always_stop, out);
    if (replay->parsed()) return cmd_replay(manifest, common.run_dir, out, err);
    return 2;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const NumericFault& e) {
        const fs::path dump = fs::temp_directory_path() / "sants_numeric_fault.txt";
        std::error_code ec;
        write_file_atomic(dump, e.what());
        err << "numeric fault: trajectory dump written to " << dump.string() << '\n';
        return 3;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace sants::cli
