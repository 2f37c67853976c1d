#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sants {

/// Invalid or unreadable configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Non-finite value produced during integration or optimization. Exit code 3.
class NumericFault : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Corrupt or mismatched data file (checksum, dimensions, schema). Exit code 4.
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Noise-trajectory parameters shared by the scheduler, anchors and diagnostics.
struct SchedulerConfig {
    double sigma_start = 1.00;
    double sigma_early = 0.963;
    double eta = 0.85;        // deployment stop threshold on F
    double sigma_min = 0.01;  // forced terminal noise level
    double sigma_full = 0.0;  // terminal level of the full reference grid
    int n_full = 25;
    int max_decisions = 0;    // 0 selects 4 * n_full
    int d_feat = 32;

    int decision_cap() const { return max_decisions > 0 ? max_decisions : 4 * n_full; }

    /// Throws ConfigError when any ordering or range invariant is violated.
    void validate() const;
};

/// Flat `key = value` document. Keys are consumed by the typed readers; any key
/// left unconsumed when `finish()` is called is reported as unknown.
class KeyValueDocument {
  public:
    static KeyValueDocument parse(std::string_view text, std::string_view origin = "<string>");
    static KeyValueDocument load(const std::filesystem::path& path);

    bool contains(std::string_view key) const;

    void read(std::string_view key, double& out);
    void read(std::string_view key, int& out);
    void read(std::string_view key, std::uint64_t& out);
    void read(std::string_view key, bool& out);
    void read(std::string_view key, std::string& out);

    /// Apply an override as if it had appeared in the file (later wins).
    void set(std::string key, std::string value);

    /// Throws ConfigError listing every key that no reader consumed.
    void finish() const;

    const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

  private:
    const std::string* lookup(std::string_view key);

    std::string origin_;
    std::map<std::string, std::string, std::less<>> entries_;
    std::set<std::string, std::less<>> consumed_;
};

void read_scheduler_config(KeyValueDocument& doc, SchedulerConfig& cfg);
std::string to_key_value_text(const SchedulerConfig& cfg);

/// Renders a double with 17 significant digits (round-trip exact).
std::string format_real(double value);

}  // namespace sants
