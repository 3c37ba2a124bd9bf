#pragma once

#include <cstdint>
#include <vector>

#include "ooc/comb/combinatorics.hpp"
#include "ooc/env/env.hpp"

namespace ooc::env {

struct VehicleParams {
  double length = 0.0;
  double width = 0.0;
  double speed_min = 0.0;
  double speed_max = 0.0;
  double max_accel = 0.0;
  double comfort_accel = 0.0;
};

// Fixed parameter table for the two vehicle kinds, keyed by vocabulary index
// (0 = car, 1 = bike).
const VehicleParams& vehicle_params(int type);

// Signed arc distance from `a` to `b` on a ring of circumference `circ`,
// wrapped into (-circ/2, circ/2].
double ring_delta(double a, double b, double circ);

// Two vehicle bodies (centre arc position +- length/2) overlap on the ring.
bool bodies_overlap(double pos_a, double len_a, double pos_b, double len_b,
                    double circ);

// Single-lane circular road shared by one controllable car (slot 0) and four
// traffic vehicles whose kinds are chosen by the latent vector. Traffic
// follows an intelligent-driver car-following rule; the controlled car takes
// one of three discrete longitudinal commands per step. All state is double
// precision and every draw comes from the seed handed to reset(), so a
// (seed, latent, action sequence) triple replays bitwise identically.
class RoundaboutEnv {
 public:
  static constexpr double kRing = 200.0;   // circumference, metres
  static constexpr double kDt = 0.25;      // seconds per step
  static constexpr int kHorizon = 12;      // steps per episode
  static constexpr int kSlots = 5;         // controlled car + 4 traffic
  static constexpr int kFeatPerSlot = 5;   // presence, arc, speed, car, bike
  static constexpr double kSpeedScale = 25.0;  // car speed_max, for obs/reward

  // Intelligent-driver constants shared by all traffic vehicles.
  static constexpr double kMinGap = 2.0;       // metres, standstill distance
  static constexpr double kTimeHeadway = 1.5;  // seconds

  enum Action { FASTER = 0, SLOWER = 1, IDLE = 2 };

  RoundaboutEnv();

  const comb::ElementVocabulary& vocabulary() const { return vocab_; }
  ObservationSpec spec() const;

  // traffic_latent: 5 vocabulary indices, slot 0 must be the car.
  std::vector<double> reset(std::uint64_t seed,
                            const comb::LatentVector& traffic_latent);
  StepResult step(int action);

  const comb::LatentVector& latent() const { return latent_; }
  bool done() const { return done_; }
  int steps() const { return steps_; }

  // State read-back for analysis and cross-checking. Slot order matches the
  // latent vector; slot 0 is the controlled car.
  double position(int slot) const;
  double speed(int slot) const;
  double desired_speed(int slot) const;

  // Current observation vector, identical to what reset()/step() returned.
  std::vector<double> observation() const;

 private:
  std::vector<double> observe() const;
  double idm_accel(int slot) const;

  comb::ElementVocabulary vocab_;
  comb::LatentVector latent_;
  std::vector<double> pos_;      // arc position of each body centre
  std::vector<double> vel_;
  std::vector<double> v0_;       // per-vehicle desired speed
  bool active_ = false;          // reset() has run
  bool done_ = true;
  int steps_ = 0;
};

}  // namespace ooc::env
