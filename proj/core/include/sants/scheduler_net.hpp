#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sants {

struct NetShape {
    int input = 33;  // d_feat + 1
    int hidden1 = 512;
    int hidden2 = 256;

    bool operator==(const NetShape&) const = default;
};

/// Raw head outputs: stop score g, Beta mode m in (0, 1), concentration c > 2.
struct NetOutput {
    double score = 0.0;
    double mode = 0.5;
    double concentration = 2.0;
};

/// Upstream gradient with respect to (g, m, c).
struct HeadGrad {
    double score = 0.0;
    double mode = 0.0;
    double concentration = 0.0;
};

/// Activations retained by `forward` for a matching `backward` call.
struct ForwardCache {
    Eigen::VectorXd input;
    Eigen::VectorXd pre1, act1, pre2, act2;
    double mode_pre = 0.0;
    double conc_pre = 0.0;
    double mode = 0.5;
    bool mode_clamped = false;
    std::uint64_t net_id = 0;
    std::uint64_t version = 0;
};

struct NetInit {
    double head_scale = 0.01;  // stddev of head weights
    double stop_bias = 0.0;
    double mode_bias = 0.0;
    double concentration_bias = 0.0;
};

/// Two-layer SiLU trunk with a stop head (1 output) and a jump head (2 outputs).
/// Parameters live in one flat buffer in declared order:
/// W1, b1, W2, b2, W_stop, b_stop, W_jump, b_jump (matrices column-major).
class SchedulerNet {
  public:
    static constexpr const char* kActivation = "silu";

    explicit SchedulerNet(NetShape shape = {});
    SchedulerNet(const SchedulerNet& other);
    SchedulerNet& operator=(const SchedulerNet& other);
    SchedulerNet(SchedulerNet&&) noexcept;
    SchedulerNet& operator=(SchedulerNet&&) noexcept;
    ~SchedulerNet() = default;

    static SchedulerNet initialized(NetShape shape, std::uint64_t seed, const NetInit& init = {});

    const NetShape& shape() const { return shape_; }
    int feature_dim() const { return shape_.input - 1; }
    std::size_t parameter_count() const { return params_.size(); }

    std::span<const double> params() const { return params_; }
    /// Mutable access; bumps the version so older caches are rejected.
    std::span<double> mutable_params();

    std::uint64_t version() const { return version_; }

    NetOutput forward(const Eigen::VectorXd& feature, double sigma, ForwardCache* cache = nullptr) const;

    /// Accumulates parameter gradients of a scalar objective with head partials
    /// `grad` into `out` (same layout as params()).
    void backward(const ForwardCache& cache, const HeadGrad& grad, std::span<double> out) const;

    /// Layout offsets for tests and tooling.
    struct Layout {
        std::size_t w1, b1, w2, b2, ws, bs, wj, bj, total;
    };
    const Layout& layout() const { return layout_; }

  private:
    NetShape shape_;
    Layout layout_{};
    std::vector<double> params_;
    std::uint64_t id_ = 0;
    std::uint64_t version_ = 0;
};

}  // namespace sants
