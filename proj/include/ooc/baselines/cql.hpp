#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ooc/baselines/mlp.hpp"
#include "ooc/data/dataset.hpp"

namespace ooc::baselines {

// Flattened one-step transitions for offline Q-learning over a discrete
// action set. `done` marks episode-terminal rows whose next state carries no
// bootstrap value.
struct TransitionSet {
  int d_s = 0;
  int k = 0;  // number of actions
  std::vector<float> s, s2;
  std::vector<int> a;
  std::vector<float> r;
  std::vector<char> done;

  std::size_t size() const { return a.size(); }
};

// Splits every stored episode into (s_t, a_t, r_t, s_{t+1}) rows; the final
// row of an episode is terminal and repeats its own state as the successor.
TransitionSet transitions_roundabout(const data::Dataset& ds);

struct CQLConfig {
  int steps = 4000;
  int batch = 64;
  double lr = 1e-3;
  double gamma = 0.8;
  double alpha = 1.0;  // conservatism weight; 0 recovers plain fitted Q
  double tau = 0.005;  // target-network soft-update rate
  std::vector<int> hidden = {64, 64};
  std::uint64_t seed = 0;
  int log_every = 0;
};

struct CQLResult {
  std::unique_ptr<QNetwork> qnet;
  double final_td = 0.0;
  double final_penalty = 0.0;
  // Post-training statistics over the full transition set.
  double mean_q_data = 0.0;
  double mean_q_max = 0.0;
};

// Temporal-difference regression against a softly updated target network
// plus the conservative penalty alpha * (logsumexp_a Q(s,a) - Q(s,a_data)).
// Divergence (non-finite loss or runaway Q magnitudes) aborts with a
// StateError carrying Q diagnostics.
CQLResult train_cql(const TransitionSet& data, const CQLConfig& cfg);

}  // namespace ooc::baselines
