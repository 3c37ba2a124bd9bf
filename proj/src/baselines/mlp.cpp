#include "ooc/baselines/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "ooc/util/errors.hpp"

namespace ooc::baselines {

Mlp::Mlp(std::vector<int> widths, std::uint64_t seed)
    : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw ContractError("mlp: need at least in and out");
  for (int w : widths_)
    if (w < 1) throw ContractError("mlp: widths must be positive");
  lin_.reserve(widths_.size() - 1);
  for (std::size_t i = 0; i + 1 < widths_.size(); ++i)
    lin_.emplace_back(ps_, "fc" + std::to_string(i), widths_[i],
                      widths_[i + 1]);
  act_.resize(lin_.size() - 1);
  ps_.allocate();
  Rng rng(seed ^ 0x6d6c70ull);
  for (auto& l : lin_) l.init(rng);
}

const float* Mlp::forward(const float* x, int batch) {
  const float* h = x;
  for (std::size_t i = 0; i < lin_.size(); ++i) {
    h = lin_[i].forward(h, batch);
    if (i + 1 < lin_.size())
      h = act_[i].forward(h, static_cast<std::size_t>(widths_[i + 1]) * batch);
  }
  return h;
}

const float* Mlp::backward(const float* dy) {
  const float* d = dy;
  for (std::size_t i = lin_.size(); i-- > 0;) {
    if (i + 1 < lin_.size()) d = act_[i].backward(d);
    d = lin_[i].backward(d);
  }
  return d;
}

std::vector<double> Mlp::eval(const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != d_in())
    throw ContractError("mlp eval: input size mismatch");
  xbuf_.assign(x.begin(), x.end());
  const float* y = forward(xbuf_.data(), 1);
  return std::vector<double>(y, y + d_out());
}

double softmax_xent(const float* logits, const int* labels, int k, int batch,
                    float* dlogits) {
  double loss = 0.0;
  for (int b = 0; b < batch; ++b) {
    float mx = logits[b];
    for (int i = 1; i < k; ++i)
      mx = std::max(mx, logits[static_cast<std::size_t>(i) * batch + b]);
    double z = 0.0;
    for (int i = 0; i < k; ++i)
      z += std::exp(
          static_cast<double>(logits[static_cast<std::size_t>(i) * batch + b]) -
          mx);
    double logz = std::log(z) + mx;
    int y = labels[b];
    if (y < 0 || y >= k) throw ContractError("softmax_xent: label out of range");
    loss += logz -
            logits[static_cast<std::size_t>(y) * batch + b];
    for (int i = 0; i < k; ++i) {
      double p = std::exp(
          static_cast<double>(
              logits[static_cast<std::size_t>(i) * batch + b]) -
          logz);
      dlogits[static_cast<std::size_t>(i) * batch + b] =
          static_cast<float>((p - (i == y ? 1.0 : 0.0)) / batch);
    }
  }
  return loss / batch;
}

double logsumexp(const float* q, int k, int stride) {
  float mx = q[0];
  for (int i = 1; i < k; ++i) mx = std::max(mx, q[static_cast<std::size_t>(i) * stride]);
  double z = 0.0;
  for (int i = 0; i < k; ++i)
    z += std::exp(static_cast<double>(q[static_cast<std::size_t>(i) * stride]) - mx);
  return std::log(z) + mx;
}

Adam::Adam(nn::ParamStore<float>& ps, double lr_in, double beta1, double beta2,
           double eps)
    : lr(lr_in), ps_(&ps), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.assign(ps.total(), 0.0f);
  v_.assign(ps.total(), 0.0f);
}

void Adam::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, t_);
  double bc2 = 1.0 - std::pow(beta2_, t_);
  float* w = ps_->values.data();
  const float* g = ps_->grads.data();
  for (std::size_t i = 0; i < ps_->total(); ++i) {
    m_[i] = static_cast<float>(beta1_ * m_[i] + (1.0 - beta1_) * g[i]);
    v_[i] = static_cast<float>(beta2_ * v_[i] +
                               (1.0 - beta2_) * static_cast<double>(g[i]) * g[i]);
    double mhat = m_[i] / bc1;
    double vhat = v_[i] / bc2;
    w[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + eps_));
  }
}

namespace {

std::vector<int> full_widths(int d_in, const std::vector<int>& hidden,
                             int d_out) {
  std::vector<int> w{d_in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(d_out);
  return w;
}

}  // namespace

PolicyMLP::PolicyMLP(int d_in, int d_out, bool discrete,
                     std::vector<int> hidden, std::uint64_t seed)
    : discrete_(discrete), hidden_(std::move(hidden)) {
  net_ = std::make_unique<Mlp>(full_widths(d_in, hidden_, d_out), seed);
}

int PolicyMLP::act(const std::vector<double>& obs) {
  if (!discrete_) throw ContractError("policy act: continuous head has no argmax");
  auto z = net_->eval(obs);
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

std::vector<double> PolicyMLP::logits(const std::vector<double>& obs) {
  return net_->eval(obs);
}

std::vector<double> PolicyMLP::mean(const std::vector<double>& obs) {
  if (discrete_) throw ContractError("policy mean: discrete head emits logits");
  return net_->eval(obs);
}

int PolicyMLP::sample(const std::vector<double>& obs, Rng& rng) {
  auto z = logits(obs);
  double mx = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    total += v;
  }
  double u = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    acc += z[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(z.size()) - 1;
}

QNetwork::QNetwork(int d_in, int n_actions, std::vector<int> hidden,
                   std::uint64_t seed)
    : hidden_(std::move(hidden)) {
  net_ = std::make_unique<Mlp>(full_widths(d_in, hidden_, n_actions), seed);
}

std::vector<double> QNetwork::q_values(const std::vector<double>& obs) {
  auto q = net_->eval(obs);
  for (double v : q)
    if (!std::isfinite(v))
      throw StateError("q network produced a non-finite value");
  return q;
}

int QNetwork::greedy(const std::vector<double>& obs) {
  auto q = q_values(obs);
  return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

namespace {

std::uint32_t blob_crc(const std::vector<float>& w) {
  uLong c = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(crc32(
      c, reinterpret_cast<const Bytef*>(w.data()),
      static_cast<uInt>(w.size() * sizeof(float))));
}

void save_net(const std::string& stem, const char* kind, Mlp& net,
              bool discrete, const std::vector<int>& hidden,
              const std::string& info) {
  nlohmann::json j;
  j["format"] = "ooc-policy-v1";
  j["kind"] = kind;
  j["d_in"] = net.d_in();
  j["d_out"] = net.d_out();
  j["hidden"] = hidden;
  j["discrete"] = discrete;
  j["info"] = info;
  j["params"] = {{"count", net.params().total()},
                 {"crc32", blob_crc(net.params().values)}};
  std::ofstream jf(stem + ".json");
  if (!jf) throw LoadError("save policy: cannot open " + stem + ".json");
  jf << j.dump(1) << "\n";
  std::ofstream bf(stem + ".bin", std::ios::binary);
  if (!bf) throw LoadError("save policy: cannot open " + stem + ".bin");
  bf.write(reinterpret_cast<const char*>(net.params().values.data()),
           static_cast<std::streamsize>(net.params().total() * sizeof(float)));
  if (!bf) throw LoadError("save policy: short write to " + stem + ".bin");
}

nlohmann::json load_manifest(const std::string& stem, const char* kind) {
  std::ifstream jf(stem + ".json");
  if (!jf) throw LoadError("load policy: cannot open " + stem + ".json");
  nlohmann::json j;
  try {
    jf >> j;
    if (j.at("format").get<std::string>() != "ooc-policy-v1")
      throw LoadError("load policy: unknown format tag in " + stem);
    if (j.at("kind").get<std::string>() != kind)
      throw LoadError("load policy: " + stem + " is not a " + kind +
                      " checkpoint");
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("load policy: bad manifest: ") + e.what());
  }
  return j;
}

void load_weights(const std::string& stem, const nlohmann::json& j, Mlp& net) {
  std::size_t count = j.at("params").at("count").get<std::size_t>();
  if (count != net.params().total())
    throw LoadError("load policy: parameter count mismatch in " + stem);
  std::ifstream bf(stem + ".bin", std::ios::binary);
  if (!bf) throw LoadError("load policy: cannot open " + stem + ".bin");
  bf.read(reinterpret_cast<char*>(net.params().values.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (static_cast<std::size_t>(bf.gcount()) != count * sizeof(float))
    throw LoadError("load policy: short read from " + stem + ".bin");
  if (blob_crc(net.params().values) !=
      j.at("params").at("crc32").get<std::uint32_t>())
    throw LoadError("load policy: crc32 mismatch for " + stem + ".bin");
}

}  // namespace

void save_policy(const std::string& stem, PolicyMLP& policy,
                 const std::string& info) {
  save_net(stem, "policy", policy.net(), policy.discrete(), policy.hidden(),
           info);
}

std::unique_ptr<PolicyMLP> load_policy(const std::string& stem) {
  auto j = load_manifest(stem, "policy");
  auto policy = std::make_unique<PolicyMLP>(
      j.at("d_in").get<int>(), j.at("d_out").get<int>(),
      j.at("discrete").get<bool>(), j.at("hidden").get<std::vector<int>>());
  load_weights(stem, j, policy->net());
  return policy;
}

void save_qnet(const std::string& stem, QNetwork& qnet,
               const std::string& info) {
  save_net(stem, "qnet", qnet.net(), true, qnet.hidden(), info);
}

std::unique_ptr<QNetwork> load_qnet(const std::string& stem) {
  auto j = load_manifest(stem, "qnet");
  auto qnet = std::make_unique<QNetwork>(
      j.at("d_in").get<int>(), j.at("d_out").get<int>(),
      j.at("hidden").get<std::vector<int>>());
  load_weights(stem, j, qnet->net());
  return qnet;
}

}  // namespace ooc::baselines
