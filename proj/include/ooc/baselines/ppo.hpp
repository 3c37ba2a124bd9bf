#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ooc/baselines/mlp.hpp"
#include "ooc/data/dataset.hpp"

namespace ooc::baselines {

struct PPOConfig {
  int iterations = 40;
  int rollout_steps = 1024;  // minimum transitions gathered per iteration
  int n_epochs = 10;
  int batch = 64;
  double lr = 5e-4;
  double gamma = 0.8;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double vf_coef = 0.5;
  double ent_coef = 0.01;
  int eval_episodes = 24;
  std::vector<int> hidden = {64, 64};
  std::uint64_t seed = 0;
  int log_every = 0;
};

struct PPOResult {
  std::unique_ptr<PolicyMLP> policy;  // best checkpoint by evaluation return
  double best_eval = 0.0;
  double random_eval = 0.0;  // same protocol under uniform random actions
  bool improved_over_random = false;
  std::vector<double> eval_history;
};

// Clipped-surrogate policy gradient with a separate value head, generalized
// advantage estimation, and per-minibatch advantage normalization. Episode
// latents come from the supplied source; evaluation replays a fixed seed set
// every iteration so checkpoints are comparable. If the budget ends without
// beating the random-action baseline a warning is printed and the best
// checkpoint is returned anyway.
PPOResult train_ppo_roundabout(const data::LatentSource& latents,
                               const PPOConfig& cfg);

// Generalized advantage estimates for one complete episode (terminal end,
// no bootstrap): delta_t = r_t + gamma * v_{t+1} - v_t, advantages formed by
// the usual exponentially weighted backward pass.
std::vector<double> gae_advantages(const std::vector<double>& rewards,
                                   const std::vector<double>& values,
                                   double gamma, double lambda);

// In-place shift/scale to zero mean, unit standard deviation. Left untouched
// when the spread is degenerate.
void normalize_advantages(std::vector<double>& adv);

// Gradient of the per-sample clipped surrogate objective with respect to the
// new log-probability: ratio * advantage while the unclipped branch is
// active, exactly zero once the ratio leaves the clip band on the favoured
// side (ratio > 1+clip with positive advantage, or < 1-clip with negative).
double ppo_logp_grad(double ratio, double advantage, double clip);

}  // namespace ooc::baselines
