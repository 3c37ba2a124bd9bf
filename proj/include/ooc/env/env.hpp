#pragma once

#include <string>
#include <vector>

namespace ooc::env {

enum class ActionKind { discrete, continuous };

// Static description of an environment's observation/action layout. The
// coordinate descriptions exist so downstream tools (plotting, reports) can
// label axes without hard-coding per-environment knowledge.
struct ObservationSpec {
  int d_s = 0;
  int d_a = 0;
  ActionKind action_kind = ActionKind::discrete;
  int n_actions = 0;  // meaningful for discrete action spaces
  int latent_slots = 0;
  std::vector<std::string> coords;  // one label per observation coordinate
};

struct StepResult {
  std::vector<double> obs;
  double reward = 0.0;
  bool done = false;
  bool crashed = false;
  bool success = false;
};

}  // namespace ooc::env
