#include "ooc/baselines/cql.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "ooc/util/errors.hpp"

namespace ooc::baselines {

TransitionSet transitions_roundabout(const data::Dataset& ds) {
  TransitionSet set;
  set.d_s = ds.meta.d_s;
  set.k = ds.meta.d_a;
  for (const auto& rec : ds.records)
    for (int t = 0; t < rec.h; ++t) {
      const float* s = rec.states.data() + static_cast<std::size_t>(t) * rec.d_s;
      const float* a = rec.actions.data() + static_cast<std::size_t>(t) * rec.d_a;
      bool last = t == rec.h - 1;
      const float* s2 =
          rec.states.data() +
          static_cast<std::size_t>(last ? t : t + 1) * rec.d_s;
      set.s.insert(set.s.end(), s, s + rec.d_s);
      set.s2.insert(set.s2.end(), s2, s2 + rec.d_s);
      set.a.push_back(static_cast<int>(std::max_element(a, a + rec.d_a) - a));
      set.r.push_back(rec.rewards[static_cast<std::size_t>(t)]);
      set.done.push_back(last ? 1 : 0);
    }
  if (set.size() == 0) throw ContractError("transitions_roundabout: empty dataset");
  return set;
}

CQLResult train_cql(const TransitionSet& data, const CQLConfig& cfg) {
  std::size_t n = data.size();
  if (n == 0) throw ContractError("train_cql: empty transition set");

  CQLResult out;
  out.qnet = std::make_unique<QNetwork>(data.d_s, data.k, cfg.hidden, cfg.seed);
  Mlp& net = out.qnet->net();
  // Target network: same architecture, weights tracked by soft updates.
  QNetwork target(data.d_s, data.k, cfg.hidden, cfg.seed);
  target.net().params().values = net.params().values;

  Adam opt(net.params(), cfg.lr);
  Rng rng(cfg.seed ^ 0x63716cull);

  int batch = static_cast<int>(std::min<std::size_t>(cfg.batch, n));
  std::vector<float> sb(static_cast<std::size_t>(data.d_s) * batch);
  std::vector<float> s2b(static_cast<std::size_t>(data.d_s) * batch);
  std::vector<float> dq(static_cast<std::size_t>(data.k) * batch);
  std::vector<float> yb(batch);
  std::vector<int> ab(batch);
  std::vector<std::size_t> idx(batch);

  double td = 0.0, penalty = 0.0;
  for (int step = 0; step < cfg.steps; ++step) {
    for (int b = 0; b < batch; ++b) {
      idx[b] = static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(n)));
      for (int i = 0; i < data.d_s; ++i) {
        sb[static_cast<std::size_t>(i) * batch + b] =
            data.s[idx[b] * data.d_s + i];
        s2b[static_cast<std::size_t>(i) * batch + b] =
            data.s2[idx[b] * data.d_s + i];
      }
      ab[b] = data.a[idx[b]];
    }

    // Bootstrap targets from the frozen copy.
    const float* q_next = target.net().forward(s2b.data(), batch);
    for (int b = 0; b < batch; ++b) {
      float mx = q_next[b];
      for (int i = 1; i < data.k; ++i)
        mx = std::max(mx, q_next[static_cast<std::size_t>(i) * batch + b]);
      yb[b] = data.r[idx[b]] +
              (data.done[idx[b]] ? 0.0f
                                 : static_cast<float>(cfg.gamma) * mx);
    }

    const float* q = net.forward(sb.data(), batch);
    td = 0.0;
    penalty = 0.0;
    for (int b = 0; b < batch; ++b) {
      double q_sa = q[static_cast<std::size_t>(ab[b]) * batch + b];
      double diff = q_sa - yb[b];
      td += 0.5 * diff * diff;
      double lse = logsumexp(q + b, data.k, batch);
      penalty += lse - q_sa;
      for (int i = 0; i < data.k; ++i) {
        double p = std::exp(
            static_cast<double>(q[static_cast<std::size_t>(i) * batch + b]) -
            lse);
        double g = cfg.alpha * (p - (i == ab[b] ? 1.0 : 0.0));
        if (i == ab[b]) g += diff;
        dq[static_cast<std::size_t>(i) * batch + b] =
            static_cast<float>(g / batch);
      }
    }
    td /= batch;
    penalty /= batch;

    double q_scale = 0.0;
    for (int b = 0; b < batch; ++b)
      q_scale = std::max(q_scale,
                         std::abs(static_cast<double>(
                             q[static_cast<std::size_t>(ab[b]) * batch + b])));
    if (!std::isfinite(td) || !std::isfinite(penalty) || q_scale > 1e6)
      throw StateError(
          "train_cql: diverged at step " + std::to_string(step) +
          " (td " + std::to_string(td) + ", penalty " +
          std::to_string(penalty) + ", max |Q(s,a)| " +
          std::to_string(q_scale) + ")");

    net.backward(dq.data());
    opt.step();
    net.params().zero_grads();

    // Polyak averaging toward the online weights.
    float* tw = target.net().params().values.data();
    const float* w = net.params().values.data();
    for (std::size_t i = 0; i < net.params().total(); ++i)
      tw[i] = static_cast<float>((1.0 - cfg.tau) * tw[i] + cfg.tau * w[i]);

    if (cfg.log_every > 0 && (step + 1) % cfg.log_every == 0)
      std::fprintf(stderr, "cql step %d td %.5f penalty %.5f\n", step + 1, td,
                   penalty);
  }
  out.final_td = td;
  out.final_penalty = penalty;

  // Conservatism statistics over the whole corpus.
  std::vector<double> obs(static_cast<std::size_t>(data.d_s));
  double sum_data = 0.0, sum_max = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (int i = 0; i < data.d_s; ++i) obs[i] = data.s[r * data.d_s + i];
    auto qv = out.qnet->q_values(obs);
    sum_data += qv[static_cast<std::size_t>(data.a[r])];
    sum_max += *std::max_element(qv.begin(), qv.end());
  }
  out.mean_q_data = sum_data / static_cast<double>(n);
  out.mean_q_max = sum_max / static_cast<double>(n);
  return out;
}

}  // namespace ooc::baselines
