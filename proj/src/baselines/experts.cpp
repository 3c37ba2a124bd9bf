#include "ooc/baselines/experts.hpp"

#include <cmath>
#include <cstdlib>

namespace ooc::baselines {

namespace {

int cheb(int ax, int ay, int bx, int by) {
  return std::max(std::abs(ax - bx), std::abs(ay - by));
}

}  // namespace

int roundabout_expert(const env::RoundaboutEnv& env, Rng&) {
  using E = env::RoundaboutEnv;
  const auto& lat = env.latent();
  double v = env.speed(0);
  double half_self = env::vehicle_params(lat[0]).length / 2.0;

  int lead = -1;
  double best = E::kRing + 1.0;
  for (int j = 1; j < E::kSlots; ++j) {
    double d = env::ring_delta(env.position(0), env.position(j), E::kRing);
    double fwd = d > 0.0 ? d : d + E::kRing;
    if (fwd < best) {
      best = fwd;
      lead = j;
    }
  }
  double gap = best - half_self - env::vehicle_params(lat[lead]).length / 2.0;
  double v_lead = env.speed(lead);

  // Stopping envelope at ego speed ve: distance shed while braking the
  // closing speed away at the 6 m/s^2 command limit, plus a reaction buffer
  // proportional to ego speed (roughly two control periods of travel).
  auto envelope = [v_lead](double ve) {
    double dv = ve - v_lead;
    double need = dv > 0.0 ? dv * dv / (2.0 * 6.0) : 0.0;
    return need + 0.45 * ve + 2.0;
  };

  if (gap < envelope(v)) return E::SLOWER;
  if (gap > envelope(v + 6.0 * E::kDt) + 6.0 && v < E::kSpeedScale)
    return E::FASTER;
  return E::IDLE;
}

std::vector<int> skirmish_expert(const env::SkirmishEnv& env, Rng&) {
  using E = env::SkirmishEnv;
  int n = env.team_size();
  std::vector<int> acts(n, 0);

  auto occupied = [&env, n](int x, int y) {
    for (int t = 0; t < 2; ++t)
      for (int i = 0; i < n; ++i) {
        const auto& u = env.unit(t, i);
        if (u.alive && u.x == x && u.y == y) return true;
      }
    return false;
  };
  auto move_cell = [](int x, int y, int action) {
    return std::pair<int, int>{x + (action == 3 ? -1 : action == 4 ? 1 : 0),
                               y + (action == 1 ? -1 : action == 2 ? 1 : 0)};
  };

  for (int i = 0; i < n; ++i) {
    const auto& self = env.unit(0, i);
    if (!self.alive) continue;
    const auto& type = env::unit_type(self.type);

    // The whole team converges on one victim: the weakest visible enemy by
    // remaining points, ties to the closer one. Shortening the firing time
    // of fragile high-value units comes first, so the victim is attacked the
    // moment it is in range and approached otherwise. A unit that cannot
    // reach the victim this step still trades with whatever it can hit
    // rather than soak free damage.
    int goal = -1, goal_pts = 1 << 30, goal_d = 1 << 30;
    int target = -1, target_pts = 1 << 30;
    for (int j = 0; j < n; ++j) {
      const auto& e = env.unit(1, j);
      if (!e.alive) continue;
      int d = cheb(self.x, self.y, e.x, e.y);
      int pts = e.health + e.shield;
      if (d <= E::kSight &&
          (pts < goal_pts || (pts == goal_pts && d < goal_d))) {
        goal_pts = pts;
        goal_d = d;
        goal = j;
      }
      if (d <= type.attack_range && pts < target_pts) {
        target_pts = pts;
        target = j;
      }
    }
    if (goal >= 0 && cheb(self.x, self.y, env.unit(1, goal).x,
                          env.unit(1, goal).y) <= type.attack_range)
      target = goal;
    if (target >= 0) {
      acts[i] = 5 + target;
      continue;
    }

    int primary = 0, fallback = 0;
    if (goal >= 0) {
      // Close on the chosen victim along the dominant axis.
      const auto& e = env.unit(1, goal);
      int dx = e.x - self.x, dy = e.y - self.y;
      int mx = dx > 0 ? 4 : 3, my = dy > 0 ? 2 : 1;
      if (std::abs(dx) >= std::abs(dy)) {
        primary = dx != 0 ? mx : my;
        fallback = dy != 0 ? my : 0;
      } else {
        primary = dy != 0 ? my : mx;
        fallback = dx != 0 ? mx : 0;
      }
    } else {
      // Nothing visible: advance toward the enemy spawn side, sidestep
      // toward the grid centre when the lane is taken.
      primary = 4;
      fallback = self.y < E::kGrid / 2 ? 2 : 1;
    }
    auto [px, py] = move_cell(self.x, self.y, primary);
    if (!occupied(px, py) && px >= 0 && px < E::kGrid && py >= 0 &&
        py < E::kGrid) {
      acts[i] = primary;
    } else if (fallback != 0) {
      auto [fx, fy] = move_cell(self.x, self.y, fallback);
      if (!occupied(fx, fy) && fx >= 0 && fx < E::kGrid && fy >= 0 &&
          fy < E::kGrid)
        acts[i] = fallback;
    }
  }
  return acts;
}

}  // namespace ooc::baselines
