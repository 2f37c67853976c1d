#include "sants/diagnostics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sants/grid.hpp"
#include "sants/parallel.hpp"
#include "sants/scheduler.hpp"

namespace sants {

namespace {

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_real(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw DataError("scan csv: bad number '" + s + "'");
    }
    if (used != s.size()) throw DataError("scan csv: bad number '" + s + "'");
    return v;
}

}  // namespace

bool ScanMatrix::complete(std::size_t r) const {
    for (bool v : valid[r]) {
        if (!v) return false;
    }
    return !valid[r].empty();
}

void ScanMatrix::add_row(std::uint64_t seed, Phase phase, Corruption corruption, std::span<const double> raw) {
    if (raw.size() != depths.size()) throw std::invalid_argument("ScanMatrix::add_row: column count mismatch");
    std::vector<double> row(raw.size(), 0.0);
    std::vector<bool> ok(raw.size(), false);
    double ref = 0.0;
    for (std::size_t j = 0; j < raw.size(); ++j) {
        if (std::isfinite(raw[j]) && raw[j] >= 0.0) {
            ref = raw[j];
            break;
        }
    }
    if (ref > 0.0) {
        for (std::size_t j = 0; j < raw.size(); ++j) {
            if (std::isfinite(raw[j]) && raw[j] >= 0.0) {
                row[j] = raw[j] / ref;
                ok[j] = true;
            }
        }
    }
    seeds.push_back(seed);
    phases.push_back(phase);
    corruptions.push_back(corruption);
    values.push_back(std::move(row));
    valid.push_back(std::move(ok));
}

std::string ScanMatrix::check_invariants() const {
    const std::size_t n = values.size();
    if (valid.size() != n || seeds.size() != n || phases.size() != n || corruptions.size() != n) {
        return "row metadata length mismatch";
    }
    for (std::size_t r = 0; r < n; ++r) {
        if (values[r].size() != depths.size() || valid[r].size() != depths.size()) {
            return "row " + std::to_string(r) + " has the wrong column count";
        }
        bool first = true;
        for (std::size_t j = 0; j < depths.size(); ++j) {
            if (!valid[r][j]) continue;
            if (first && values[r][j] != 1.0) return "row " + std::to_string(r) + " is not self-normalized";
            first = false;
            if (!(values[r][j] >= 0.0)) return "row " + std::to_string(r) + " has a negative entry";
        }
    }
    return {};
}

std::size_t depth_level_index(std::span<const double> grid, double depth) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (1.0 - grid[i] >= depth - 1e-12) return i;
    }
    throw std::invalid_argument("depth_level_index: depth " + format_real(depth) + " beyond the grid");
}

ScanMatrix depth_scan(const SyntheticPolicy& policy, std::span<const EpisodeSpec> episodes,
                      std::span<const double> depth_fractions, const SchedulerConfig& sched,
                      const RewardConfig& reward, int workers) {
    if (episodes.empty()) throw std::invalid_argument("depth_scan: no episodes");
    ScanMatrix m;
    m.depths = build_depth_grid(depth_fractions);
    const auto grid = build_full_grid(sched);
    std::vector<std::size_t> index(m.depths.size());
    for (std::size_t j = 0; j < m.depths.size(); ++j) index[j] = depth_level_index(grid, m.depths[j]);
    const std::size_t last = index.back();
    const std::span<const double> levels(grid.data(), last + 1);

    std::vector<std::vector<double>> raw(episodes.size());
    parallel_for(episodes.size(), workers, [&](std::size_t e) {
        const auto& ep = episodes[e];
        const auto states = integrate_levels(policy, ep, levels, policy.initial_noise(ep));
        const auto weights = keyframe_weights(ep.demo, reward);
        raw[e].resize(index.size());
        for (std::size_t j = 0; j < index.size(); ++j) {
            const auto action = policy.act(ep, states[index[j]], grid[index[j]]);
            raw[e][j] = masked_action_error(action, ep.demo, weights, reward);
        }
    });
    for (std::size_t e = 0; e < episodes.size(); ++e) {
        m.add_row(episodes[e].seed, episodes[e].phase, episodes[e].corruption, raw[e]);
    }
    return m;
}

std::vector<PhaseCurve> phase_curves(const ScanMatrix& m, std::vector<std::string>* warnings) {
    std::vector<PhaseCurve> out;
    for (Phase phase : {Phase::Coarse, Phase::Fine}) {
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            if (m.phases[r] == phase && m.complete(r)) rows.push_back(r);
        }
        if (rows.empty()) {
            if (warnings) warnings->push_back("phase " + std::string(to_string(phase)) + " has no complete rows");
            continue;
        }
        PhaseCurve c;
        c.phase = phase;
        c.rows = static_cast<int>(rows.size());
        c.mean.assign(m.cols(), 0.0);
        c.sem.assign(m.cols(), 0.0);
        const double n = static_cast<double>(rows.size());
        for (std::size_t j = 0; j < m.cols(); ++j) {
            double sum = 0.0;
            for (auto r : rows) sum += m.values[r][j];
            const double mean = sum / n;
            double ss = 0.0;
            for (auto r : rows) ss += (m.values[r][j] - mean) * (m.values[r][j] - mean);
            c.mean[j] = mean;
            c.sem[j] = rows.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::size_t best_depth(std::span<const double> row) {
    if (row.empty()) throw std::invalid_argument("best_depth: empty row");
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
        if (row[j] < row[best]) best = j;
    }
    return best;
}

std::vector<ScanStats> scan_stats(const ScanMatrix& m) {
    const auto collect = [&m](std::string label, auto&& keep) {
        ScanStats s;
        s.label = std::move(label);
        s.best_depth_histogram.assign(m.cols(), 0);
        int not_best = 0, increases = 0;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            if (!m.complete(r) || !keep(r)) continue;
            const auto& row = m.values[r];
            const std::size_t b = best_depth(row);
            ++s.rows;
            ++s.best_depth_histogram[b];
            if (b != row.size() - 1) ++not_best;
            for (std::size_t j = 0; j + 1 < row.size(); ++j) {
                if (row[j + 1] > row[j]) {
                    ++increases;
                    break;
                }
            }
            s.oracle_mean += row[b];
            s.fixed_full_mean += row.back();
        }
        if (s.rows > 0) {
            const double n = s.rows;
            s.not_best_at_full_rate = not_best / n;
            s.adjacent_increase_rate = increases / n;
            s.oracle_mean /= n;
            s.fixed_full_mean /= n;
        }
        return s;
    };
    std::vector<ScanStats> out;
    for (Phase phase : {Phase::Coarse, Phase::Fine}) {
        auto s = collect(std::string(to_string(phase)), [&](std::size_t r) { return m.phases[r] == phase; });
        if (s.rows > 0) out.push_back(std::move(s));
    }
    auto all = collect("all", [](std::size_t) { return true; });
    if (all.rows == 0) throw std::invalid_argument("scan_stats: no complete rows");
    out.push_back(std::move(all));
    return out;
}

std::string scan_matrix_csv(const ScanMatrix& m) {
    std::string out = "seed,phase,corruption";
    for (double d : m.depths) out += ",depth_" + format_real(d);
    out += '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out += std::to_string(m.seeds[r]);
        out += ',';
        out += to_string(m.phases[r]);
        out += ',';
        out += to_string(m.corruptions[r]);
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out += ',';
            if (m.valid[r][j]) out += format_real(m.values[r][j]);
        }
        out += '\n';
    }
    return out;
}

ScanMatrix parse_scan_matrix_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw DataError("scan csv: empty file");
    const auto header = split(line, ',');
    if (header.size() < 4 || header[0] != "seed" || header[1] != "phase" || header[2] != "corruption") {
        throw DataError("scan csv: unexpected header");
    }
    ScanMatrix m;
    for (std::size_t j = 3; j < header.size(); ++j) {
        constexpr std::string_view prefix = "depth_";
        if (header[j].rfind(prefix, 0) != 0) throw DataError("scan csv: bad column '" + header[j] + "'");
        m.depths.push_back(parse_real(header[j].substr(prefix.size())));
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size()) {
            throw DataError("scan csv: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                            " cells");
        }
        std::vector<double> row(m.depths.size(), 0.0);
        std::vector<bool> ok(m.depths.size(), false);
        for (std::size_t j = 0; j < m.depths.size(); ++j) {
            if (cells[j + 3].empty()) continue;
            row[j] = parse_real(cells[j + 3]);
            ok[j] = true;
        }
        try {
            m.seeds.push_back(std::stoull(cells[0]));
        } catch (const std::exception&) {
            throw DataError("scan csv: bad seed '" + cells[0] + "'");
        }
        m.phases.push_back(parse_phase(cells[1]));
        m.corruptions.push_back(parse_corruption(cells[2]));
        m.values.push_back(std::move(row));
        m.valid.push_back(std::move(ok));
    }
    if (auto err = m.check_invariants(); !err.empty()) throw DataError("scan csv: " + err);
    return m;
}

std::string phase_curves_csv(std::span<const double> depths, std::span<const PhaseCurve> curves) {
    std::string out = "phase,depth,rows,mean,sem\n";
    for (const auto& c : curves) {
        for (std::size_t j = 0; j < depths.size(); ++j) {
            out += std::string(to_string(c.phase)) + ',' + format_real(depths[j]) + ',' + std::to_string(c.rows) +
                   ',' + format_real(c.mean[j]) + ',' + format_real(c.sem[j]) + '\n';
        }
    }
    return out;
}

std::string scan_stats_csv(std::span<const ScanStats> stats) {
    std::string out =
        "phase,rows,not_best_at_full_rate,adjacent_increase_rate,oracle_mean,fixed_full_mean,best_depth_histogram\n";
    for (const auto& s : stats) {
        std::string hist;
        for (std::size_t j = 0; j < s.best_depth_histogram.size(); ++j) {
            if (j) hist += ';';
            hist += std::to_string(s.best_depth_histogram[j]);
        }
        out += s.label + ',' + std::to_string(s.rows) + ',' + format_real(s.not_best_at_full_rate) + ',' +
               format_real(s.adjacent_increase_rate) + ',' + format_real(s.oracle_mean) + ',' +
               format_real(s.fixed_full_mean) + ',' + hist + '\n';
    }
    return out;
}

std::string export_traces(std::span<const NoiseTrajectory> runs, std::span<const std::uint64_t> seeds) {
    if (!seeds.empty() && seeds.size() != runs.size()) throw std::invalid_argument("export_traces: seed count mismatch");
    std::string out = "run,seed,terminal_depth,n_updates,n_forward,step,decision,sigma,stop_cdf,ratio\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& t = runs[i];
        const std::string prefix = std::to_string(i) + ',' + (seeds.empty() ? std::string() : std::to_string(seeds[i])) +
                                   ',' + format_real(t.terminal_depth()) + ',' + std::to_string(t.n_updates) + ',' +
                                   std::to_string(t.n_forward) + ',';
        for (std::size_t k = 0; k < t.steps.size(); ++k) {
            const auto& s = t.steps[k];
            out += prefix + std::to_string(k) + ',' + std::string(to_string(s.decision)) + ',' +
                   format_real(s.sigma_before) + ',' + format_real(s.stop_cdf) + ',' +
                   (s.ratio ? format_real(*s.ratio) : std::string()) + '\n';
        }
    }
    return out;
}

}  // namespace sants
