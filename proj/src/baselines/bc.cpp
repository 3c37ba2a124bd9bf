#include "ooc/baselines/bc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ooc/env/skirmish.hpp"
#include "ooc/util/errors.hpp"

namespace ooc::baselines {

BCResult train_bc(const SupervisedSet& data, const BCConfig& cfg) {
  std::size_t n = data.size();
  if (n == 0) throw ContractError("train_bc: empty dataset");
  if (data.discrete && data.labels.size() != n)
    throw ContractError("train_bc: one label per sample required");
  if (!data.discrete &&
      data.targets.size() != n * static_cast<std::size_t>(data.d_out))
    throw ContractError("train_bc: one target row per sample required");

  BCResult out;
  out.policy = std::make_unique<PolicyMLP>(data.d_in, data.d_out,
                                           data.discrete, cfg.hidden, cfg.seed);
  out.param_count = out.policy->param_count();
  Mlp& net = out.policy->net();
  Adam opt(net.params(), cfg.lr);
  Rng rng(cfg.seed ^ 0x626355ull);

  int batch = static_cast<int>(std::min<std::size_t>(cfg.batch, n));
  std::vector<float> xb(static_cast<std::size_t>(data.d_in) * batch);
  std::vector<float> dlog(static_cast<std::size_t>(data.d_out) * batch);
  std::vector<int> yb(batch);
  std::vector<float> tb(static_cast<std::size_t>(data.d_out) * batch);

  double loss = 0.0;
  for (int step = 0; step < cfg.steps; ++step) {
    for (int b = 0; b < batch; ++b) {
      std::size_t idx = static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(n)));
      for (int i = 0; i < data.d_in; ++i)
        xb[static_cast<std::size_t>(i) * batch + b] =
            data.inputs[idx * data.d_in + i];
      if (data.discrete) {
        yb[b] = data.labels[idx];
      } else {
        for (int i = 0; i < data.d_out; ++i)
          tb[static_cast<std::size_t>(i) * batch + b] =
              data.targets[idx * data.d_out + i];
      }
    }
    const float* out_head = net.forward(xb.data(), batch);
    if (data.discrete) {
      loss = softmax_xent(out_head, yb.data(), data.d_out, batch, dlog.data());
    } else {
      loss = 0.0;
      std::size_t total = static_cast<std::size_t>(data.d_out) * batch;
      for (std::size_t i = 0; i < total; ++i) {
        double diff = out_head[i] - tb[i];
        loss += diff * diff;
        dlog[i] = static_cast<float>(2.0 * diff / total);
      }
      loss /= total;
    }
    if (!std::isfinite(loss))
      throw StateError("train_bc: loss diverged to a non-finite value");
    net.backward(dlog.data());
    opt.step();
    net.params().zero_grads();
    if (cfg.log_every > 0 && (step + 1) % cfg.log_every == 0)
      std::fprintf(stderr, "bc step %d loss %.5f\n", step + 1, loss);
  }
  out.final_loss = loss;
  return out;
}

SupervisedSet bc_set_roundabout(const data::Dataset& ds) {
  SupervisedSet set;
  set.d_in = ds.meta.d_s;
  set.d_out = ds.meta.d_a;
  set.discrete = true;
  for (const auto& rec : ds.records)
    for (int t = 0; t < rec.h; ++t) {
      const float* s = rec.states.data() + static_cast<std::size_t>(t) * rec.d_s;
      const float* a = rec.actions.data() + static_cast<std::size_t>(t) * rec.d_a;
      set.inputs.insert(set.inputs.end(), s, s + rec.d_s);
      set.labels.push_back(static_cast<int>(
          std::max_element(a, a + rec.d_a) - a));
    }
  if (set.inputs.empty()) throw ContractError("bc_set_roundabout: no samples");
  return set;
}

SupervisedSet bc_set_skirmish(const data::Dataset& ds) {
  int team = ds.meta.n_slots;
  int n_actions = team > 0 ? ds.meta.d_a / team : 0;
  if (team < 1 || n_actions < 6)
    throw ContractError("bc_set_skirmish: not a team dataset");
  SupervisedSet set;
  set.d_in = 7 + (team - 1) * 8 + team * 8;
  set.d_out = n_actions;
  set.discrete = true;
  for (const auto& rec : ds.records)
    for (int t = 0; t < rec.h; ++t) {
      const float* s = rec.states.data() + static_cast<std::size_t>(t) * rec.d_s;
      for (int u = 0; u < team; ++u) {
        const float* a = rec.actions.data() +
                         (static_cast<std::size_t>(t) * team + u) * n_actions;
        float mass = 0.0f;
        for (int k = 0; k < n_actions; ++k) mass += a[k];
        if (mass == 0.0f) continue;  // unit was dead at this step
        auto obs = env::SkirmishEnv::unit_obs_from_state(s, team, u);
        set.inputs.insert(set.inputs.end(), obs.begin(), obs.end());
        set.labels.push_back(static_cast<int>(
            std::max_element(a, a + n_actions) - a));
      }
    }
  if (set.inputs.empty()) throw ContractError("bc_set_skirmish: no samples");
  return set;
}

}  // namespace ooc::baselines
