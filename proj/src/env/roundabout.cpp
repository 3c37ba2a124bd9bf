#include "ooc/env/roundabout.hpp"

#include <cmath>
#include <string>

#include "ooc/util/errors.hpp"
#include "ooc/util/rng.hpp"

namespace ooc::env {

namespace {

constexpr int kCar = 0;
constexpr int kBike = 1;

const VehicleParams kCarParams{5.0, 2.0, 23.0, 25.0, 6.0, 3.0};
const VehicleParams kBikeParams{2.0, 1.0, 4.0, 4.0, 2.0, 1.0};

double wrap_pos(double p, double circ) {
  double w = std::fmod(p, circ);
  if (w < 0.0) w += circ;
  return w;
}

// Forward arc distance from a to b, in (0, circ].
double forward_gap(double a, double b, double circ) {
  double d = std::fmod(b - a, circ);
  if (d <= 0.0) d += circ;
  return d;
}

}  // namespace

const VehicleParams& vehicle_params(int type) {
  switch (type) {
    case kCar: return kCarParams;
    case kBike: return kBikeParams;
    default: throw ContractError("vehicle_params: unknown type index");
  }
}

double ring_delta(double a, double b, double circ) {
  double d = std::fmod(b - a, circ);
  if (d < 0.0) d += circ;
  if (d > circ / 2.0) d -= circ;
  return d;
}

bool bodies_overlap(double pos_a, double len_a, double pos_b, double len_b,
                    double circ) {
  return std::abs(ring_delta(pos_a, pos_b, circ)) < (len_a + len_b) / 2.0;
}

RoundaboutEnv::RoundaboutEnv()
    : vocab_({"car", "bike"}),
      pos_(kSlots, 0.0),
      vel_(kSlots, 0.0),
      v0_(kSlots, 0.0) {}

ObservationSpec RoundaboutEnv::spec() const {
  ObservationSpec s;
  s.d_s = kSlots * kFeatPerSlot;
  s.d_a = 3;
  s.action_kind = ActionKind::discrete;
  s.n_actions = 3;
  s.latent_slots = kSlots;
  for (int i = 0; i < kSlots; ++i) {
    std::string tag = i == 0 ? "ego" : "veh" + std::to_string(i);
    s.coords.push_back(tag + ".presence");
    s.coords.push_back(tag + ".arc");
    s.coords.push_back(tag + ".speed");
    s.coords.push_back(tag + ".is_car");
    s.coords.push_back(tag + ".is_bike");
  }
  return s;
}

std::vector<double> RoundaboutEnv::reset(
    std::uint64_t seed, const comb::LatentVector& traffic_latent) {
  if (static_cast<int>(traffic_latent.size()) != kSlots)
    throw ContractError("roundabout reset: latent must have 5 slots");
  for (int v : traffic_latent)
    if (v != kCar && v != kBike)
      throw ContractError("roundabout reset: latent index out of vocabulary");
  if (traffic_latent[0] != kCar)
    throw ContractError("roundabout reset: slot 0 must be the car");

  latent_ = traffic_latent;
  Rng rng(seed ^ 0x726f756e64ull);

  // Controlled car 30 m before the merge point (arc 0), cruising.
  pos_[0] = 170.0;
  vel_[0] = rng.uniform(kCarParams.speed_min, kCarParams.speed_max);
  v0_[0] = kCarParams.speed_max;

  // Traffic spaced ahead of the controlled car with jittered gaps. Nominal
  // spacing 30 m with +-5 m jitter keeps initial bodies disjoint (min gap
  // 20 m > max combined half-lengths 5 m). The 50 m lead gap leaves a
  // max-braking car enough room to match a 4 m/s leader from full speed
  // (stopping-distance deficit (25-4)^2/(2*6) ~ 37 m < worst-case 41.5 m),
  // so every spawn admits a crash-free control sequence.
  for (int k = 1; k < kSlots; ++k) {
    const VehicleParams& p = vehicle_params(latent_[k]);
    double base = 170.0 + 50.0 + 30.0 * (k - 1);
    pos_[k] = wrap_pos(base + rng.uniform(-5.0, 5.0), kRing);
    vel_[k] = rng.uniform(p.speed_min, p.speed_max);
    v0_[k] = rng.uniform(p.speed_min, p.speed_max);
  }

  active_ = true;
  done_ = false;
  steps_ = 0;
  return observe();
}

double RoundaboutEnv::idm_accel(int slot) const {
  const VehicleParams& p = vehicle_params(latent_[slot]);

  // Nearest body ahead by centre-to-centre forward arc distance.
  int lead = -1;
  double best = kRing + 1.0;
  for (int j = 0; j < kSlots; ++j) {
    if (j == slot) continue;
    double d = forward_gap(pos_[slot], pos_[j], kRing);
    if (d < best) {
      best = d;
      lead = j;
    }
  }

  const VehicleParams& lp = vehicle_params(latent_[lead]);
  double gap = best - (p.length + lp.length) / 2.0;
  if (gap < 1e-2) gap = 1e-2;

  double v = vel_[slot];
  double dv = v - vel_[lead];
  double s_star = kMinGap + v * kTimeHeadway +
                  v * dv / (2.0 * std::sqrt(p.max_accel * p.comfort_accel));
  if (s_star < 0.0) s_star = 0.0;

  double a = p.max_accel *
             (1.0 - std::pow(v / v0_[slot], 4.0) - (s_star / gap) * (s_star / gap));
  if (a > p.max_accel) a = p.max_accel;
  if (a < -p.max_accel) a = -p.max_accel;
  return a;
}

StepResult RoundaboutEnv::step(int action) {
  if (!active_ || done_)
    throw StateError("roundabout step: episode is not active");
  if (action < 0 || action > 2)
    throw ContractError("roundabout step: action must be 0, 1 or 2");

  // All accelerations are computed from the pre-step state, then speeds
  // update before positions (semi-implicit Euler).
  double acc[kSlots];
  acc[0] = action == FASTER   ? kCarParams.max_accel
           : action == SLOWER ? -kCarParams.max_accel
                              : 0.0;
  for (int k = 1; k < kSlots; ++k) acc[k] = idm_accel(k);

  for (int i = 0; i < kSlots; ++i) {
    const VehicleParams& p = vehicle_params(latent_[i]);
    vel_[i] += acc[i] * kDt;
    if (vel_[i] < 0.0) vel_[i] = 0.0;
    if (vel_[i] > p.speed_max) vel_[i] = p.speed_max;
    pos_[i] = wrap_pos(pos_[i] + vel_[i] * kDt, kRing);
  }

  // Only collisions involving the controlled car end the episode and count
  // against it. Traffic vehicles may rear-end each other in mixed traffic
  // (a fast car spawned behind a slow bike cannot always stop in time); the
  // follower then brakes to a standstill until the gap reopens, which is a
  // hazard the controlled car must drive around, not a failure of the agent.
  bool crash = false;
  for (int j = 1; j < kSlots && !crash; ++j)
    crash = bodies_overlap(pos_[0], vehicle_params(latent_[0]).length,
                           pos_[j], vehicle_params(latent_[j]).length, kRing);

  ++steps_;
  done_ = crash || steps_ >= kHorizon;

  StepResult r;
  r.obs = observe();
  r.reward = vel_[0] / kSpeedScale + 1.0 - (crash ? 10.0 : 0.0);
  r.done = done_;
  r.crashed = crash;
  r.success = done_ && !crash;
  return r;
}

std::vector<double> RoundaboutEnv::observe() const {
  std::vector<double> o;
  o.reserve(kSlots * kFeatPerSlot);
  for (int i = 0; i < kSlots; ++i) {
    double rel = i == 0 ? ring_delta(0.0, pos_[0], kRing)
                        : ring_delta(pos_[0], pos_[i], kRing);
    o.push_back(1.0);
    o.push_back(rel / (kRing / 2.0));
    o.push_back(vel_[i] / kSpeedScale);
    o.push_back(latent_[i] == kCar ? 1.0 : 0.0);
    o.push_back(latent_[i] == kBike ? 1.0 : 0.0);
  }
  return o;
}

double RoundaboutEnv::position(int slot) const {
  if (slot < 0 || slot >= kSlots) throw ContractError("position: bad slot");
  return pos_[slot];
}

double RoundaboutEnv::speed(int slot) const {
  if (slot < 0 || slot >= kSlots) throw ContractError("speed: bad slot");
  return vel_[slot];
}

double RoundaboutEnv::desired_speed(int slot) const {
  if (slot < 0 || slot >= kSlots)
    throw ContractError("desired_speed: bad slot");
  return v0_[slot];
}

std::vector<double> RoundaboutEnv::observation() const {
  if (!active_) throw StateError("observation: reset() has not run");
  return observe();
}

}  // namespace ooc::env
