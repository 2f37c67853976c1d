#include "sants/testbed.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "sants/checksum.hpp"
#include "sants/rng.hpp"

namespace sants {

namespace {

constexpr int kChannels = 7;  // position xyz, rotation vector xyz, gripper logit

Eigen::MatrixXd gaussian_matrix(Rng& rng, int rows, int cols, double stddev) {
    std::normal_distribution<double> normal(0.0, stddev);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = normal(rng);
    }
    return m;
}

Eigen::VectorXd gaussian_vector(Rng& rng, int n, double stddev) {
    std::normal_distribution<double> normal(0.0, stddev);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::string_view to_string(Phase p) { return p == Phase::Coarse ? "coarse" : "fine"; }

std::string_view to_string(Corruption c) { return c == Corruption::None ? "none" : "late_degrade"; }

Phase parse_phase(std::string_view s) {
    if (s == "coarse") return Phase::Coarse;
    if (s == "fine") return Phase::Fine;
    throw DataError("unknown phase '" + std::string(s) + "'");
}

Corruption parse_corruption(std::string_view s) {
    if (s == "none") return Corruption::None;
    if (s == "late_degrade") return Corruption::LateDegrade;
    throw DataError("unknown corruption '" + std::string(s) + "'");
}

void TestbedConfig::validate() const {
    const auto fail = [](const std::string& what) { throw ConfigError("testbed config: " + what); };
    if (d_z < 1 || d_c < 1 || d_feat < 1) fail("dimensions must be positive");
    if (horizon < 2) fail("horizon must be >= 2");
    if (basis < 1) fail("basis must be >= 1");
    if (!(p_coarse >= 0.0 && p_coarse <= 1.0)) fail("p_coarse must be in [0, 1]");
    if (!(p_late_degrade >= 0.0 && p_late_degrade <= 1.0)) fail("p_late_degrade must be in [0, 1]");
    if (!(degrade_threshold > 0.0 && degrade_threshold < 1.0)) fail("degrade_threshold must be in (0, 1)");
    if (degrade_peak < 0.0) fail("degrade_peak must be >= 0");
    if (!(coarse_floor >= 0.0 && coarse_floor <= 1.0 && fine_floor >= 0.0 && fine_floor <= 1.0)) {
        fail("residual floors must be in [0, 1]");
    }
    if (!(coarse_exponent > 0.0 && fine_exponent > 0.0)) fail("residual exponents must be positive");
    if (coarse_residual_scale < 0.0 || fine_residual_scale < 0.0) fail("residual scales must be >= 0");
    if (!(latent_gain > 0.0)) fail("latent_gain must be positive");
}

void read_testbed_config(KeyValueDocument& doc, TestbedConfig& cfg) {
    doc.read("testbed.d_z", cfg.d_z);
    doc.read("testbed.d_c", cfg.d_c);
    doc.read("testbed.d_feat", cfg.d_feat);
    doc.read("testbed.horizon", cfg.horizon);
    doc.read("testbed.basis", cfg.basis);
    doc.read("testbed.p_coarse", cfg.p_coarse);
    doc.read("testbed.p_late_degrade", cfg.p_late_degrade);
    doc.read("testbed.degrade_threshold", cfg.degrade_threshold);
    doc.read("testbed.degrade_peak", cfg.degrade_peak);
    doc.read("testbed.risk_signature", cfg.risk_signature);
    doc.read("testbed.coarse_floor", cfg.coarse_floor);
    doc.read("testbed.coarse_exponent", cfg.coarse_exponent);
    doc.read("testbed.coarse_residual_scale", cfg.coarse_residual_scale);
    doc.read("testbed.fine_floor", cfg.fine_floor);
    doc.read("testbed.fine_exponent", cfg.fine_exponent);
    doc.read("testbed.fine_residual_scale", cfg.fine_residual_scale);
    doc.read("testbed.latent_gain", cfg.latent_gain);
    doc.read("testbed.position_scale", cfg.position_scale);
    doc.read("testbed.rotation_scale", cfg.rotation_scale);
    doc.read("testbed.gripper_gain", cfg.gripper_gain);
    cfg.validate();
}

std::string to_key_value_text(const TestbedConfig& cfg) {
    std::string out;
    const auto put = [&out](std::string_view key, const std::string& value) {
        out += "testbed.";
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    };
    put("d_z", std::to_string(cfg.d_z));
    put("d_c", std::to_string(cfg.d_c));
    put("d_feat", std::to_string(cfg.d_feat));
    put("horizon", std::to_string(cfg.horizon));
    put("basis", std::to_string(cfg.basis));
    put("p_coarse", format_real(cfg.p_coarse));
    put("p_late_degrade", format_real(cfg.p_late_degrade));
    put("degrade_threshold", format_real(cfg.degrade_threshold));
    put("degrade_peak", format_real(cfg.degrade_peak));
    put("risk_signature", format_real(cfg.risk_signature));
    put("coarse_floor", format_real(cfg.coarse_floor));
    put("coarse_exponent", format_real(cfg.coarse_exponent));
    put("coarse_residual_scale", format_real(cfg.coarse_residual_scale));
    put("fine_floor", format_real(cfg.fine_floor));
    put("fine_exponent", format_real(cfg.fine_exponent));
    put("fine_residual_scale", format_real(cfg.fine_residual_scale));
    put("latent_gain", format_real(cfg.latent_gain));
    put("position_scale", format_real(cfg.position_scale));
    put("rotation_scale", format_real(cfg.rotation_scale));
    put("gripper_gain", format_real(cfg.gripper_gain));
    return out;
}

LatentState integrate_step(const LatentState& x, const Eigen::VectorXd& v, double sigma_from, double sigma_to) {
    if (sigma_to > sigma_from) {
        throw std::invalid_argument("integrate_step: sigma_to " + format_real(sigma_to) + " > sigma_from " +
                                    format_real(sigma_from));
    }
    if (x.size() != v.size()) throw std::invalid_argument("integrate_step: dimension mismatch");
    return x + v * (sigma_to - sigma_from);
}

SyntheticPolicy::SyntheticPolicy(TestbedConfig cfg, std::uint64_t run_seed)
    : cfg_(std::move(cfg)), run_seed_(run_seed) {
    cfg_.validate();
    const int in_dim = cfg_.d_z + cfg_.d_c + 1 + 2;
    auto proj_rng = make_rng(run_seed_, "testbed/projection");
    projection_ = gaussian_matrix(proj_rng, cfg_.d_feat, in_dim, 1.0 / std::sqrt(static_cast<double>(in_dim)));

    auto head_rng = make_rng(run_seed_, "testbed/action-head");
    const int coefs = kChannels * cfg_.basis;
    readout_x_ = gaussian_matrix(head_rng, coefs, cfg_.d_z, 1.0 / std::sqrt(static_cast<double>(cfg_.d_z)));
    readout_c_ = gaussian_matrix(head_rng, coefs, cfg_.d_c, 1.0 / std::sqrt(static_cast<double>(cfg_.d_c)));

    basis_.resize(cfg_.horizon, cfg_.basis);
    for (int t = 0; t < cfg_.horizon; ++t) {
        for (int k = 0; k < cfg_.basis; ++k) {
            basis_(t, k) = std::cos(std::numbers::pi * k * t / static_cast<double>(cfg_.horizon - 1));
        }
    }
}

std::uint32_t SyntheticPolicy::state_checksum() const {
    std::string blob = to_key_value_text(cfg_);
    blob += std::to_string(run_seed_);
    const auto append = [&blob](const Eigen::MatrixXd& m) {
        blob.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
    };
    append(projection_);
    append(readout_x_);
    append(readout_c_);
    append(basis_);
    return crc32(blob);
}

double SyntheticPolicy::residual_multiplier(Phase phase, double sigma) const {
    const double floor = phase == Phase::Coarse ? cfg_.coarse_floor : cfg_.fine_floor;
    const double exponent = phase == Phase::Coarse ? cfg_.coarse_exponent : cfg_.fine_exponent;
    return floor + (1.0 - floor) * std::pow(std::max(sigma, 0.0), exponent);
}

double SyntheticPolicy::residual_weight(const EpisodeSpec& episode, double sigma) const {
    if (episode.corruption != Corruption::LateDegrade || sigma >= cfg_.degrade_threshold) {
        return residual_multiplier(episode.phase, sigma);
    }
    const double at_threshold = residual_multiplier(episode.phase, cfg_.degrade_threshold);
    const double t = (cfg_.degrade_threshold - std::max(sigma, 0.0)) / cfg_.degrade_threshold;
    return at_threshold + (cfg_.degrade_peak - at_threshold) * t;
}

ForwardOutput SyntheticPolicy::forward(const EpisodeSpec& episode, const LatentState& x, double sigma) const {
    if (x.size() != cfg_.d_z) throw std::invalid_argument("synthetic forward: latent dimension mismatch");
    if (!(sigma >= 0.0 && sigma <= 1.0)) throw std::invalid_argument("synthetic forward: sigma outside [0, 1]");
    ForwardOutput out;
    // Straight path x_sigma = (1 - sigma) x0 + sigma * eps, so dx/dsigma = eps - x0.
    if (sigma > 0.0) {
        const Eigen::VectorXd eps_hat = (x - (1.0 - sigma) * episode.x0) / sigma;
        out.velocity = eps_hat - episode.x0;
    } else {
        out.velocity = x - episode.x0;
    }

    Eigen::VectorXd input(projection_.cols());
    input << x, episode.cond.vector, sigma, (episode.phase == Phase::Coarse ? 1.0 : 0.0),
        (episode.phase == Phase::Fine ? 1.0 : 0.0);
    out.feature = projection_ * input;
    return out;
}

ActionChunk SyntheticPolicy::decode(const EpisodeSpec& episode, const LatentState& x, double residual_weight) const {
    Eigen::VectorXd coef = cfg_.latent_gain * (readout_x_ * x) + readout_c_ * episode.cond.vector;
    if (residual_weight != 0.0) coef += residual_weight * episode.residual;
    const int k_count = cfg_.basis;
    std::vector<ActionStep> steps(static_cast<std::size_t>(cfg_.horizon));
    for (int t = 0; t < cfg_.horizon; ++t) {
        double y[kChannels];
        for (int ch = 0; ch < kChannels; ++ch) {
            y[ch] = basis_.row(t).dot(coef.segment(ch * k_count, k_count));
        }
        auto& s = steps[static_cast<std::size_t>(t)];
        s.position = cfg_.position_scale * Eigen::Vector3d(y[0], y[1], y[2]);
        s.orientation = quaternion_from_rotation_vector(cfg_.rotation_scale * Eigen::Vector3d(y[3], y[4], y[5]));
        s.gripper = logistic(cfg_.gripper_gain * y[6]);
    }
    return ActionChunk(std::move(steps));
}

ActionChunk SyntheticPolicy::ideal_action(const EpisodeSpec& episode, const LatentState& x) const {
    return decode(episode, x, 0.0);
}

ActionChunk SyntheticPolicy::act(const EpisodeSpec& episode, const LatentState& x, double sigma) const {
    if (x.size() != cfg_.d_z) throw std::invalid_argument("synthetic act: latent dimension mismatch");
    return decode(episode, x, residual_weight(episode, sigma));
}

EpisodeSpec SyntheticPolicy::make_episode(std::uint64_t seed, Phase phase, Corruption corruption) const {
    EpisodeSpec ep;
    ep.seed = seed;
    ep.phase = phase;
    ep.corruption = corruption;

    auto body = make_rng(seed, "episode/body");
    ep.cond.vector = gaussian_vector(body, cfg_.d_c, 1.0);
    if (corruption == Corruption::LateDegrade) ep.cond.vector[0] += cfg_.risk_signature;
    ep.x0 = gaussian_vector(body, cfg_.d_z, 1.0);

    const double scale = phase == Phase::Coarse ? cfg_.coarse_residual_scale : cfg_.fine_residual_scale;
    ep.residual = gaussian_vector(body, kChannels * cfg_.basis, scale);

    ep.demo = ideal_action(ep, ep.x0);
    return ep;
}

EpisodeSpec SyntheticPolicy::sample_episode(std::uint64_t seed) const {
    auto labels = make_rng(seed, "episode/labels");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Phase phase = unit(labels) < cfg_.p_coarse ? Phase::Coarse : Phase::Fine;
    const Corruption corruption = unit(labels) < cfg_.p_late_degrade ? Corruption::LateDegrade : Corruption::None;
    return make_episode(seed, phase, corruption);
}

LatentState SyntheticPolicy::initial_noise(const EpisodeSpec& episode) const {
    auto rng = make_rng(episode.seed, "episode/init-noise");
    return gaussian_vector(rng, cfg_.d_z, 1.0);
}

}  // namespace sants
