#include "sants/episode_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sants/checksum.hpp"
#include "sants/rng.hpp"

namespace sants {

std::string serialize_episodes(const std::vector<EpisodeSpec>& episodes, const TestbedConfig& cfg) {
    std::string out;
    for (const auto& ep : episodes) {
        nlohmann::ordered_json j;
        j["seed"] = ep.seed;
        j["phase"] = to_string(ep.phase);
        j["corruption"] = to_string(ep.corruption);
        j["d_z"] = cfg.d_z;
        j["d_c"] = cfg.d_c;
        j["horizon"] = cfg.horizon;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<EpisodeSpec> parse_episodes(std::string_view text, const SyntheticPolicy& policy) {
    std::vector<EpisodeSpec> episodes;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    const auto& cfg = policy.config();
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            if (j.at("d_z").get<int>() != cfg.d_z || j.at("d_c").get<int>() != cfg.d_c ||
                j.at("horizon").get<int>() != cfg.horizon) {
                throw DataError("episode dimensions do not match the testbed configuration");
            }
            episodes.push_back(policy.make_episode(j.at("seed").get<std::uint64_t>(),
                                                   parse_phase(j.at("phase").get<std::string>()),
                                                   parse_corruption(j.at("corruption").get<std::string>())));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("episode file line " + std::to_string(line_no) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("episode file line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return episodes;
}

void save_episodes(const std::filesystem::path& path, const std::vector<EpisodeSpec>& episodes,
                   const TestbedConfig& cfg) {
    write_file_atomic(path, serialize_episodes(episodes, cfg));
}

std::vector<EpisodeSpec> load_episodes(const std::filesystem::path& path, const SyntheticPolicy& policy) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open episode file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_episodes(buf.str(), policy);
}

std::vector<EpisodeSpec> sample_split(const SyntheticPolicy& policy, std::uint64_t run_seed,
                                      std::string_view split, int count) {
    std::vector<EpisodeSpec> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    const std::string stream = "episodes/" + std::string(split);
    for (int i = 0; i < count; ++i) {
        out.push_back(policy.sample_episode(derive_seed(run_seed, stream, static_cast<std::uint64_t>(i))));
    }
    return out;
}

}  // namespace sants
