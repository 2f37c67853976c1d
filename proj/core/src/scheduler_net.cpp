#include "sants/scheduler_net.hpp"

#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>

#include "sants/hazard.hpp"
#include "sants/rng.hpp"

namespace sants {

namespace {

std::atomic<std::uint64_t> next_net_id{1};

using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

double silu(double x) { return x * sigmoid(x); }

double silu_grad(double x) {
    const double s = sigmoid(x);
    return s * (1.0 + x * (1.0 - s));
}

}  // namespace

SchedulerNet::SchedulerNet(NetShape shape) : shape_(shape), id_(next_net_id++) {
    if (shape_.input < 2 || shape_.hidden1 < 1 || shape_.hidden2 < 1) {
        throw std::invalid_argument("SchedulerNet: invalid shape");
    }
    const auto in = static_cast<std::size_t>(shape_.input);
    const auto h1 = static_cast<std::size_t>(shape_.hidden1);
    const auto h2 = static_cast<std::size_t>(shape_.hidden2);
    std::size_t off = 0;
    layout_.w1 = off; off += h1 * in;
    layout_.b1 = off; off += h1;
    layout_.w2 = off; off += h2 * h1;
    layout_.b2 = off; off += h2;
    layout_.ws = off; off += h2;
    layout_.bs = off; off += 1;
    layout_.wj = off; off += 2 * h2;
    layout_.bj = off; off += 2;
    layout_.total = off;
    params_.assign(off, 0.0);
}

SchedulerNet::SchedulerNet(const SchedulerNet& other)
    : shape_(other.shape_), layout_(other.layout_), params_(other.params_), id_(next_net_id++), version_(0) {}

SchedulerNet& SchedulerNet::operator=(const SchedulerNet& other) {
    if (this != &other) {
        shape_ = other.shape_;
        layout_ = other.layout_;
        params_ = other.params_;
        ++version_;
    }
    return *this;
}

SchedulerNet::SchedulerNet(SchedulerNet&&) noexcept = default;
SchedulerNet& SchedulerNet::operator=(SchedulerNet&&) noexcept = default;

SchedulerNet SchedulerNet::initialized(NetShape shape, std::uint64_t seed, const NetInit& init) {
    SchedulerNet net(shape);
    auto rng = make_rng(seed, "scheduler/init");
    auto p = net.mutable_params();
    const auto fill = [&](std::size_t off, std::size_t n, double stddev) {
        std::normal_distribution<double> normal(0.0, stddev);
        for (std::size_t i = 0; i < n; ++i) p[off + i] = normal(rng);
    };
    const auto& L = net.layout_;
    fill(L.w1, L.b1 - L.w1, 1.0 / std::sqrt(static_cast<double>(shape.input)));
    fill(L.w2, L.b2 - L.w2, 1.0 / std::sqrt(static_cast<double>(shape.hidden1)));
    fill(L.ws, L.bs - L.ws, init.head_scale);
    fill(L.wj, L.bj - L.wj, init.head_scale);
    p[L.bs] = init.stop_bias;
    p[L.bj] = init.mode_bias;
    p[L.bj + 1] = init.concentration_bias;
    return net;
}

std::span<double> SchedulerNet::mutable_params() {
    ++version_;
    return params_;
}

NetOutput SchedulerNet::forward(const Eigen::VectorXd& feature, double sigma, ForwardCache* cache) const {
    if (feature.size() != shape_.input - 1) {
        throw std::invalid_argument("SchedulerNet::forward: feature dimension " + std::to_string(feature.size()) +
                                    " != " + std::to_string(shape_.input - 1));
    }
    const auto& L = layout_;
    const int in = shape_.input, h1 = shape_.hidden1, h2 = shape_.hidden2;
    ConstMatMap w1(params_.data() + L.w1, h1, in);
    ConstVecMap b1(params_.data() + L.b1, h1);
    ConstMatMap w2(params_.data() + L.w2, h2, h1);
    ConstVecMap b2(params_.data() + L.b2, h2);
    ConstVecMap ws(params_.data() + L.ws, h2);
    ConstMatMap wj(params_.data() + L.wj, 2, h2);

    Eigen::VectorXd input(in);
    input << feature, sigma;
    Eigen::VectorXd pre1 = w1 * input + b1;
    Eigen::VectorXd act1 = pre1.unaryExpr([](double v) { return silu(v); });
    Eigen::VectorXd pre2 = w2 * act1 + b2;
    Eigen::VectorXd act2 = pre2.unaryExpr([](double v) { return silu(v); });

    NetOutput out;
    out.score = ws.dot(act2) + params_[L.bs];
    const Eigen::Vector2d jump = wj * act2 + Eigen::Vector2d(params_[L.bj], params_[L.bj + 1]);
    // Clamp keeps Beta(alpha, beta) well defined when the logistic saturates.
    const double raw_mode = sigmoid(jump[0]);
    out.mode = clamp_ratio(raw_mode);
    out.concentration = 2.0 + std::max(softplus(jump[1]), kMinConcentrationExcess);

    if (cache) {
        cache->input = std::move(input);
        cache->pre1 = std::move(pre1);
        cache->act1 = std::move(act1);
        cache->pre2 = std::move(pre2);
        cache->act2 = std::move(act2);
        cache->mode_pre = jump[0];
        cache->conc_pre = jump[1];
        cache->mode = out.mode;
        cache->mode_clamped = raw_mode != out.mode;
        cache->net_id = id_;
        cache->version = version_;
    }
    return out;
}

void SchedulerNet::backward(const ForwardCache& cache, const HeadGrad& grad, std::span<double> out) const {
    if (cache.net_id != id_ || cache.version != version_) {
        throw std::logic_error("SchedulerNet::backward: cache does not belong to the current parameters");
    }
    if (out.size() != params_.size()) throw std::invalid_argument("SchedulerNet::backward: gradient size mismatch");
    const auto& L = layout_;
    const int in = shape_.input, h1 = shape_.hidden1, h2 = shape_.hidden2;
    ConstMatMap w2(params_.data() + L.w2, h2, h1);
    ConstVecMap ws(params_.data() + L.ws, h2);
    ConstMatMap wj(params_.data() + L.wj, 2, h2);

    const double d_mode_pre = cache.mode_clamped ? 0.0 : grad.mode * cache.mode * (1.0 - cache.mode);
    const double d_conc_pre =
        softplus(cache.conc_pre) > kMinConcentrationExcess ? grad.concentration * sigmoid(cache.conc_pre) : 0.0;

    // Heads.
    VecMap(out.data() + L.ws, h2) += grad.score * cache.act2;
    out[L.bs] += grad.score;
    MatMap gwj(out.data() + L.wj, 2, h2);
    gwj.row(0) += d_mode_pre * cache.act2.transpose();
    gwj.row(1) += d_conc_pre * cache.act2.transpose();
    out[L.bj] += d_mode_pre;
    out[L.bj + 1] += d_conc_pre;

    // Trunk layer 2.
    Eigen::VectorXd d_act2 = grad.score * ws + wj.transpose() * Eigen::Vector2d(d_mode_pre, d_conc_pre);
    Eigen::VectorXd d_pre2 = d_act2.cwiseProduct(cache.pre2.unaryExpr([](double v) { return silu_grad(v); }));
    MatMap(out.data() + L.w2, h2, h1).noalias() += d_pre2 * cache.act1.transpose();
    VecMap(out.data() + L.b2, h2) += d_pre2;

    // Trunk layer 1.
    Eigen::VectorXd d_act1 = w2.transpose() * d_pre2;
    Eigen::VectorXd d_pre1 = d_act1.cwiseProduct(cache.pre1.unaryExpr([](double v) { return silu_grad(v); }));
    MatMap(out.data() + L.w1, h1, in).noalias() += d_pre1 * cache.input.transpose();
    VecMap(out.data() + L.b1, h1) += d_pre1;
}

}  // namespace sants
