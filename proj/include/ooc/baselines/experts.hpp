#pragma once

#include <vector>

#include "ooc/env/roundabout.hpp"
#include "ooc/env/skirmish.hpp"
#include "ooc/util/rng.hpp"

namespace ooc::baselines {

// Longitudinal gate for the controlled car: brake while the bumper gap to
// the leader is inside the kinematic stopping envelope (closing-speed
// squared over twice the brake limit, plus a speed-proportional reaction
// buffer), accelerate when even the post-acceleration envelope leaves slack,
// hold otherwise. Deterministic given the env state.
int roundabout_expert(const env::RoundaboutEnv& env, Rng& rng);

// Per-unit heuristic: attack the weakest enemy in range (focus fire), else
// close on the nearest visible enemy along the dominant axis, else advance
// toward the enemy spawn side. Deterministic given the env state.
std::vector<int> skirmish_expert(const env::SkirmishEnv& env, Rng& rng);

}  // namespace ooc::baselines
