#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ooc/nn/layers.hpp"
#include "ooc/nn/param_store.hpp"
#include "ooc/util/rng.hpp"

namespace ooc::baselines {

// Fully connected stack with SiLU between layers and a linear head.
// Activations use the column layout of the layer zoo: inputs are (d_in, B),
// outputs (d_out, B). Not movable; layers hold a pointer into the store.
class Mlp {
 public:
  Mlp(std::vector<int> widths, std::uint64_t seed);
  Mlp(const Mlp&) = delete;
  Mlp& operator=(const Mlp&) = delete;

  const float* forward(const float* x, int batch);
  // Accumulates parameter gradients; returns d(loss)/d(input).
  const float* backward(const float* dy);

  // Single-sample convenience wrapper around forward().
  std::vector<double> eval(const std::vector<double>& x);

  nn::ParamStore<float>& params() { return ps_; }
  const nn::ParamStore<float>& params() const { return ps_; }
  const std::vector<int>& widths() const { return widths_; }
  int d_in() const { return widths_.front(); }
  int d_out() const { return widths_.back(); }
  std::size_t param_count() const { return ps_.total(); }

 private:
  std::vector<int> widths_;
  nn::ParamStore<float> ps_;
  std::vector<nn::Linear<float>> lin_;
  std::vector<nn::SiLU<float>> act_;
  std::vector<float> xbuf_;
};

// Mean cross-entropy of column-major logits (k, batch) against integer
// labels, with the softmax gradient written to dlogits (same shape, already
// divided by batch). Numerically stabilized by row max subtraction.
double softmax_xent(const float* logits, const int* labels, int k, int batch,
                    float* dlogits);

// log(sum_a exp(q_a)) over one column of k values, max-stabilized.
double logsumexp(const float* q, int k, int stride);

// Adam over a parameter store; step() consumes the accumulated gradients
// and the caller zeroes them afterwards.
class Adam {
 public:
  Adam(nn::ParamStore<float>& ps, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);
  void step();
  double lr;

 private:
  nn::ParamStore<float>* ps_;
  double beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<float> m_, v_;
};

// Feedforward policy. Discrete heads emit logits and evaluate by argmax;
// continuous heads emit the action mean directly. Evaluation is
// deterministic either way.
class PolicyMLP {
 public:
  PolicyMLP(int d_in, int d_out, bool discrete,
            std::vector<int> hidden = {64, 64}, std::uint64_t seed = 0);

  int act(const std::vector<double>& obs);  // argmax, discrete only
  std::vector<double> logits(const std::vector<double>& obs);
  std::vector<double> mean(const std::vector<double>& obs);
  int sample(const std::vector<double>& obs, Rng& rng);  // softmax draw

  Mlp& net() { return *net_; }
  bool discrete() const { return discrete_; }
  int d_in() const { return net_->d_in(); }
  int d_out() const { return net_->d_out(); }
  const std::vector<int>& hidden() const { return hidden_; }
  std::size_t param_count() const { return net_->param_count(); }

 private:
  bool discrete_;
  std::vector<int> hidden_;
  std::unique_ptr<Mlp> net_;
};

// Action-value head for discrete environments: maps a state to one value
// per action.
class QNetwork {
 public:
  QNetwork(int d_in, int n_actions, std::vector<int> hidden = {64, 64},
           std::uint64_t seed = 0);

  std::vector<double> q_values(const std::vector<double>& obs);
  int greedy(const std::vector<double>& obs);

  Mlp& net() { return *net_; }
  int d_in() const { return net_->d_in(); }
  int n_actions() const { return net_->d_out(); }
  const std::vector<int>& hidden() const { return hidden_; }
  std::size_t param_count() const { return net_->param_count(); }

 private:
  std::vector<int> hidden_;
  std::unique_ptr<Mlp> net_;
};

// Checkpoints follow the project-wide convention: <stem>.json manifest with
// the architecture and a crc32 of the blob, <stem>.bin raw f32 weights in
// registration order.
void save_policy(const std::string& stem, PolicyMLP& policy,
                 const std::string& info);
std::unique_ptr<PolicyMLP> load_policy(const std::string& stem);
void save_qnet(const std::string& stem, QNetwork& qnet,
               const std::string& info);
std::unique_ptr<QNetwork> load_qnet(const std::string& stem);

}  // namespace ooc::baselines
