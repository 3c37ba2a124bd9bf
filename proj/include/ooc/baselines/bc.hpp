#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ooc/baselines/mlp.hpp"
#include "ooc/data/dataset.hpp"

namespace ooc::baselines {

// Flat supervised corpus: row-major inputs, integer labels for discrete
// action heads or row-major target vectors for continuous ones.
struct SupervisedSet {
  int d_in = 0;
  int d_out = 0;
  bool discrete = true;
  std::vector<float> inputs;
  std::vector<int> labels;
  std::vector<float> targets;

  std::size_t size() const {
    return d_in > 0 ? inputs.size() / static_cast<std::size_t>(d_in) : 0;
  }
};

struct BCConfig {
  int steps = 3000;
  int batch = 64;
  double lr = 1e-3;
  std::vector<int> hidden = {64, 64};
  std::uint64_t seed = 0;
  int log_every = 0;  // 0 silences progress output
};

struct BCResult {
  std::unique_ptr<PolicyMLP> policy;
  double final_loss = 0.0;
  std::size_t param_count = 0;
};

// Minimizes cross-entropy (discrete) or mean squared error (continuous)
// between the policy head and the recorded actions. Aborts with StateError
// if the loss turns non-finite.
BCResult train_bc(const SupervisedSet& data, const BCConfig& cfg);

// Each timestep of every episode becomes one (observation, action id) pair.
SupervisedSet bc_set_roundabout(const data::Dataset& ds);

// Unit-level cloning corpus: each living unit at each timestep contributes
// its egocentric observation (rebuilt from the stored global state) and its
// action id; dead units (all-zero action blocks) are skipped.
SupervisedSet bc_set_skirmish(const data::Dataset& ds);

}  // namespace ooc::baselines
