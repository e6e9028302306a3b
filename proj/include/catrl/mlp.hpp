#pragma once

// Actor-critic MLP with hand-written forward/backward passes.
//
// Two separate trunks with identical hidden shape: the actor maps an
// observation to the action mean, the critic to a scalar value.  Hidden
// activations are ELU (alpha = 1).  The action log-std is a state-independent
// parameter vector.  All parameters live in one flat vector, addressed
// through a named block table; Adam moments and the step counter live next
// to them, so a checkpoint is the flat arrays plus the shape header.
//
// Forward/backward operate on row batches (N x dim) so rollouts and updates
// run as dense matrix products.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "catrl/random.hpp"

namespace catrl {

struct NetworkShape {
  int input_dim = 0;
  std::vector<int> hidden;  // may be empty (single linear layer)
  int action_dim = 0;

  void validate() const {
    if (input_dim <= 0 || action_dim <= 0)
      throw std::invalid_argument("network shape: dims must be positive");
    for (int h : hidden)
      if (h <= 0) throw std::invalid_argument("network shape: hidden width must be positive");
  }
  bool operator==(const NetworkShape&) const = default;
};

inline double elu(double z) { return z > 0.0 ? z : std::expm1(z); }
// continuous at 0: both branches give 1
inline double elu_derivative(double z) { return z > 0.0 ? 1.0 : std::exp(z); }

struct ParamBlock {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;  // weight: out x in; bias/vector: n x 1
  Eigen::Index cols = 1;
  Eigen::Index size() const { return rows * cols; }
};

// cached activations from one forward pass, consumed by backward
struct ForwardCache {
  Eigen::MatrixXd input;                        // N x in
  std::vector<Eigen::MatrixXd> actor_pre;      // pre-activations per hidden layer
  std::vector<Eigen::MatrixXd> actor_act;      // post-activations per hidden layer
  std::vector<Eigen::MatrixXd> critic_pre;
  std::vector<Eigen::MatrixXd> critic_act;
};

class ActorCritic {
 public:
  ActorCritic() = default;

  // Orthogonal-style init: gain 1 on hidden layers, 0.01 on the action head
  // so the initial policy is near-deterministic around zero; log-std starts
  // at 0 (sigma = 1).
  ActorCritic(NetworkShape shape, std::uint64_t init_seed) : shape_(std::move(shape)) {
    shape_.validate();
    build_layout();
    values_ = Eigen::VectorXd::Zero(total_);
    grads_ = Eigen::VectorXd::Zero(total_);
    adam_m_ = Eigen::VectorXd::Zero(total_);
    adam_v_ = Eigen::VectorXd::Zero(total_);
    RandomStream rng(init_seed);
    for (const auto& b : blocks_) {
      if (b.cols == 1) continue;  // biases and log_std start at zero
      const bool head = (b.name == "actor.W" + std::to_string(layer_count() - 1));
      const double gain = head ? 0.01 : 1.0;
      orthogonal_fill(block(b.name), gain, rng);
    }
  }

  const NetworkShape& shape() const { return shape_; }
  Eigen::Index parameter_count() const { return total_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }

  Eigen::VectorXd& params() { return values_; }
  const Eigen::VectorXd& params() const { return values_; }
  Eigen::VectorXd& grads() { return grads_; }
  const Eigen::VectorXd& grads() const { return grads_; }
  Eigen::VectorXd& adam_m() { return adam_m_; }
  const Eigen::VectorXd& adam_m() const { return adam_m_; }
  Eigen::VectorXd& adam_v() { return adam_v_; }
  const Eigen::VectorXd& adam_v() const { return adam_v_; }
  std::int64_t& adam_step() { return adam_step_; }
  std::int64_t adam_step() const { return adam_step_; }

  void zero_grads() { grads_.setZero(); }

  Eigen::Map<Eigen::MatrixXd> block(const std::string& name) {
    const ParamBlock& b = find(name);
    return {values_.data() + b.offset, b.rows, b.cols};
  }
  Eigen::Map<const Eigen::MatrixXd> block(const std::string& name) const {
    const ParamBlock& b = find(name);
    return {values_.data() + b.offset, b.rows, b.cols};
  }
  Eigen::Map<Eigen::MatrixXd> grad_block(const std::string& name) {
    const ParamBlock& b = find(name);
    return {grads_.data() + b.offset, b.rows, b.cols};
  }

  Eigen::Map<Eigen::VectorXd> log_std() {
    const ParamBlock& b = find("log_std");
    return {values_.data() + b.offset, b.rows};
  }
  Eigen::Map<const Eigen::VectorXd> log_std() const {
    const ParamBlock& b = find("log_std");
    return {values_.data() + b.offset, b.rows};
  }

  void clamp_log_std(double lo, double hi) {
    auto ls = log_std();
    for (Eigen::Index i = 0; i < ls.size(); ++i)
      ls[i] = std::min(hi, std::max(lo, ls[i]));
  }

  // obs: N x input_dim.  Returns action means (N x action_dim) and fills
  // `value` (N).  `cache` may be null when no backward pass will follow.
  Eigen::MatrixXd forward(const Eigen::Ref<const Eigen::MatrixXd>& obs,
                          Eigen::VectorXd& value,
                          ForwardCache* cache = nullptr) const {
    if (obs.cols() != shape_.input_dim)
      throw std::invalid_argument("forward: wrong observation width");
    if (cache) {
      cache->input = obs;
      cache->actor_pre.clear();
      cache->actor_act.clear();
      cache->critic_pre.clear();
      cache->critic_act.clear();
    }
    Eigen::MatrixXd mean = trunk(obs, "actor",
                                 cache ? &cache->actor_pre : nullptr,
                                 cache ? &cache->actor_act : nullptr);
    Eigen::MatrixXd v = trunk(obs, "critic",
                              cache ? &cache->critic_pre : nullptr,
                              cache ? &cache->critic_act : nullptr);
    value = v.col(0);
    return mean;
  }

  // Accumulates parameter gradients for the batch:
  //   d_mean : N x action_dim   gradient w.r.t. the action means
  //   d_value: N                gradient w.r.t. the values
  //   d_log_std: action_dim     gradient w.r.t. the log-std vector
  void backward(const ForwardCache& cache,
                const Eigen::Ref<const Eigen::MatrixXd>& d_mean,
                const Eigen::Ref<const Eigen::VectorXd>& d_value,
                const Eigen::Ref<const Eigen::VectorXd>& d_log_std) {
    trunk_backward(cache.input, cache.actor_pre, cache.actor_act, "actor", d_mean);
    trunk_backward(cache.input, cache.critic_pre, cache.critic_act, "critic", d_value);
    grad_block("log_std").col(0) += d_log_std;
  }

  int layer_count() const { return static_cast<int>(shape_.hidden.size()) + 1; }

 private:
  const ParamBlock& find(const std::string& name) const {
    for (const auto& b : blocks_)
      if (b.name == name) return b;
    throw std::invalid_argument("unknown parameter block '" + name + "'");
  }

  // layer width list per trunk: input, hidden..., output
  std::vector<int> widths(const std::string& net) const {
    std::vector<int> w;
    w.push_back(shape_.input_dim);
    for (int h : shape_.hidden) w.push_back(h);
    w.push_back(net == "actor" ? shape_.action_dim : 1);
    return w;
  }

  void build_layout() {
    blocks_.clear();
    total_ = 0;
    for (const std::string net : {std::string("actor"), std::string("critic")}) {
      const auto w = widths(net);
      for (std::size_t l = 0; l + 1 < w.size(); ++l) {
        add_block(net + ".W" + std::to_string(l), w[l + 1], w[l]);
        add_block(net + ".b" + std::to_string(l), w[l + 1], 1);
      }
    }
    add_block("log_std", shape_.action_dim, 1);
  }

  void add_block(std::string name, Eigen::Index rows, Eigen::Index cols) {
    blocks_.push_back({std::move(name), total_, rows, cols});
    total_ += rows * cols;
  }

  // W [out x in] <- gain * orthogonal, deterministic given the stream
  static void orthogonal_fill(Eigen::Map<Eigen::MatrixXd> w, double gain,
                              RandomStream& rng) {
    const Eigen::Index out = w.rows(), in = w.cols();
    const Eigen::Index big = std::max(out, in), small = std::min(out, in);
    Eigen::MatrixXd g(big, small);
    for (Eigen::Index i = 0; i < big; ++i)
      for (Eigen::Index j = 0; j < small; ++j) g(i, j) = rng.gaussian();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(small);
    for (Eigen::Index j = 0; j < small; ++j)
      if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    w = gain * (out >= in ? q : Eigen::MatrixXd(q.transpose()));
  }

  Eigen::MatrixXd trunk(const Eigen::Ref<const Eigen::MatrixXd>& input,
                        const std::string& net,
                        std::vector<Eigen::MatrixXd>* pre,
                        std::vector<Eigen::MatrixXd>* act) const {
    Eigen::MatrixXd x = input;
    const int layers = layer_count();
    for (int l = 0; l < layers; ++l) {
      const auto w = block(net + ".W" + std::to_string(l));
      const auto b = block(net + ".b" + std::to_string(l));
      Eigen::MatrixXd z = x * w.transpose();
      z.rowwise() += b.col(0).transpose();
      if (l + 1 < layers) {
        if (pre) pre->push_back(z);
        x = z.unaryExpr([](double v) { return elu(v); });
        if (act) act->push_back(x);
      } else {
        x = std::move(z);
      }
    }
    return x;
  }

  void trunk_backward(const Eigen::MatrixXd& input,
                      const std::vector<Eigen::MatrixXd>& pre,
                      const std::vector<Eigen::MatrixXd>& act,
                      const std::string& net,
                      const Eigen::Ref<const Eigen::MatrixXd>& d_out) {
    const int layers = layer_count();
    if (static_cast<int>(pre.size()) != layers - 1)
      throw std::invalid_argument("backward: cache does not match network depth");
    Eigen::MatrixXd d = d_out;  // gradient w.r.t. current layer output
    for (int l = layers - 1; l >= 0; --l) {
      const Eigen::MatrixXd& layer_in = (l == 0) ? input : act[l - 1];
      grad_block(net + ".W" + std::to_string(l)) += d.transpose() * layer_in;
      grad_block(net + ".b" + std::to_string(l)).col(0) += d.colwise().sum();
      if (l == 0) break;
      const auto w = block(net + ".W" + std::to_string(l));
      Eigen::MatrixXd d_act = d * w;
      d = d_act.cwiseProduct(
          pre[l - 1].unaryExpr([](double z) { return elu_derivative(z); }));
    }
  }

  NetworkShape shape_;
  std::vector<ParamBlock> blocks_;
  Eigen::Index total_ = 0;
  Eigen::VectorXd values_, grads_, adam_m_, adam_v_;
  std::int64_t adam_step_ = 0;
};

}  // namespace catrl
