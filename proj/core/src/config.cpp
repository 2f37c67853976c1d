#include "sants/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sants {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    T value{};
    const auto* begin = text.data();
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError("config key '" + std::string(key) + "': cannot parse '" +
                          std::string(text) + "'");
    }
    return value;
}

}  // namespace

void SchedulerConfig::validate() const {
    const auto fail = [](const std::string& what) { throw ConfigError("scheduler config: " + what); };
    if (!(0.0 <= sigma_full && sigma_full <= sigma_min)) fail("require 0 <= sigma_full <= sigma_min");
    if (!(sigma_min < sigma_early)) fail("require sigma_min < sigma_early");
    if (!(sigma_early < sigma_start)) fail("require sigma_early < sigma_start");
    if (!(sigma_start <= 1.0)) fail("require sigma_start <= 1");
    if (!(eta > 0.0 && eta < 1.0)) fail("require 0 < eta < 1");
    if (n_full < 2) fail("require n_full >= 2");
    if (max_decisions != 0 && max_decisions < n_full) fail("require max_decisions >= n_full");
    if (d_feat < 1) fail("require d_feat >= 1");
}

KeyValueDocument KeyValueDocument::parse(std::string_view text, std::string_view origin) {
    KeyValueDocument doc;
    doc.origin_ = std::string(origin);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) {
            if (nl == text.size()) break;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(doc.origin_ + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(doc.origin_ + ":" + std::to_string(line_no) + ": empty key");
        }
        if (doc.entries_.contains(key)) {
            throw ConfigError(doc.origin_ + ":" + std::to_string(line_no) + ": duplicate key '" +
                              std::string(key) + "'");
        }
        doc.entries_.emplace(std::string(key), std::string(value));
        if (nl == text.size()) break;
    }
    return doc;
}

KeyValueDocument KeyValueDocument::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

bool KeyValueDocument::contains(std::string_view key) const { return entries_.contains(key); }

const std::string* KeyValueDocument::lookup(std::string_view key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    consumed_.emplace(key);
    return &it->second;
}

void KeyValueDocument::read(std::string_view key, double& out) {
    if (const auto* v = lookup(key)) {
        out = parse_number<double>(key, *v);
        if (!std::isfinite(out)) throw ConfigError("config key '" + std::string(key) + "' must be finite");
    }
}

void KeyValueDocument::read(std::string_view key, int& out) {
    if (const auto* v = lookup(key)) out = parse_number<int>(key, *v);
}

void KeyValueDocument::read(std::string_view key, std::uint64_t& out) {
    if (const auto* v = lookup(key)) out = parse_number<std::uint64_t>(key, *v);
}

void KeyValueDocument::read(std::string_view key, bool& out) {
    if (const auto* v = lookup(key)) {
        if (*v == "true" || *v == "1") {
            out = true;
        } else if (*v == "false" || *v == "0") {
            out = false;
        } else {
            throw ConfigError("config key '" + std::string(key) + "': expected true/false");
        }
    }
}

void KeyValueDocument::read(std::string_view key, std::string& out) {
    if (const auto* v = lookup(key)) out = *v;
}

void KeyValueDocument::set(std::string key, std::string value) {
    entries_.insert_or_assign(std::move(key), std::move(value));
}

void KeyValueDocument::finish() const {
    std::string unknown;
    for (const auto& [key, value] : entries_) {
        if (!consumed_.contains(key)) {
            if (!unknown.empty()) unknown += ", ";
            unknown += key;
        }
    }
    if (!unknown.empty()) throw ConfigError(origin_ + ": unknown config keys: " + unknown);
}

void read_scheduler_config(KeyValueDocument& doc, SchedulerConfig& cfg) {
    doc.read("scheduler.sigma_start", cfg.sigma_start);
    doc.read("scheduler.sigma_early", cfg.sigma_early);
    doc.read("scheduler.eta", cfg.eta);
    doc.read("scheduler.sigma_min", cfg.sigma_min);
    doc.read("scheduler.sigma_full", cfg.sigma_full);
    doc.read("scheduler.n_full", cfg.n_full);
    doc.read("scheduler.max_decisions", cfg.max_decisions);
    doc.read("scheduler.d_feat", cfg.d_feat);
    cfg.validate();
}

std::string to_key_value_text(const SchedulerConfig& cfg) {
    std::ostringstream out;
    out << "scheduler.sigma_start = " << format_real(cfg.sigma_start) << '\n'
        << "scheduler.sigma_early = " << format_real(cfg.sigma_early) << '\n'
        << "scheduler.eta = " << format_real(cfg.eta) << '\n'
        << "scheduler.sigma_min = " << format_real(cfg.sigma_min) << '\n'
        << "scheduler.sigma_full = " << format_real(cfg.sigma_full) << '\n'
        << "scheduler.n_full = " << cfg.n_full << '\n'
        << "scheduler.max_decisions = " << cfg.max_decisions << '\n'
        << "scheduler.d_feat = " << cfg.d_feat << '\n';
    return out.str();
}

std::string format_real(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

}  // namespace sants
