#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ooc/comb/combinatorics.hpp"
#include "ooc/env/env.hpp"

namespace ooc::env {

struct UnitType {
  std::string name;
  int attack_range = 1;  // Chebyshev cells
  int max_health = 1;
  int max_shield = 0;
  int move_speed = 1;  // cells per step
  int damage = 1;
};

// Fixed roster keyed by vocabulary index: 0 melee (range 1), 1 ranged
// (range 6), 2 heavy (range 3).
const UnitType& unit_type(int idx);
const comb::ElementVocabulary& skirmish_vocabulary();

// Grid battle between a controlled team and a heuristic-driven enemy team.
// Units move one cell per step, attacks use Chebyshev range, damage drains
// shield before health. The enemy AI attacks the nearest visible controlled
// unit and greedily closes distance otherwise; with nothing visible it holds.
//
// Step resolution, fixed order: (1) intended actions are read from the
// pre-step state (enemy intents included), (2) moves apply unit by unit,
// controlled team first, a move into an occupied or out-of-bounds cell is
// dropped, (3) attacks resolve simultaneously against post-move positions
// and pre-attack health, so mutual kills are possible, (4) terminal checks.
class SkirmishEnv {
 public:
  static constexpr int kGrid = 16;
  static constexpr int kSight = 9;      // Chebyshev visibility radius
  static constexpr int kMaxSteps = 80;
  static constexpr double kWinBonus = 20.0;

  struct Unit {
    int type = 0;
    int x = 0, y = 0;
    int health = 0, shield = 0;
    bool alive = false;
  };

  struct Result {
    std::vector<std::vector<double>> unit_obs;  // one per controlled unit
    double reward = 0.0;
    bool done = false;
    bool success = false;
    int invalid_actions = 0;  // attack orders dropped to noop this step
  };

  explicit SkirmishEnv(int team_size = 3);

  // Actions per controlled unit: 0 noop, 1 up (y-1), 2 down (y+1),
  // 3 left (x-1), 4 right (x+1), 5+j attack enemy j.
  int n_actions() const { return 5 + team_size_; }
  int team_size() const { return team_size_; }
  int obs_dim() const;    // per-unit observation length
  int state_dim() const;  // global state length
  ObservationSpec spec() const;

  std::vector<std::vector<double>> reset(std::uint64_t seed,
                                         const comb::LatentVector& team_latent,
                                         const comb::LatentVector& enemy_latent);

  // Deterministic placement override for scripted scenarios: cells are
  // (x, y) pairs, one per unit, distinct and in bounds.
  std::vector<std::vector<double>> reset_placed(
      const comb::LatentVector& team_latent,
      const comb::LatentVector& enemy_latent,
      const std::vector<std::pair<int, int>>& team_cells,
      const std::vector<std::pair<int, int>>& enemy_cells);

  Result step(const std::vector<int>& team_actions);

  const comb::LatentVector& team_latent() const { return team_latent_; }
  const comb::LatentVector& enemy_latent() const { return enemy_latent_; }
  bool done() const { return done_; }
  int steps() const { return steps_; }

  // team 0 = controlled, team 1 = enemy.
  const Unit& unit(int team, int idx) const;
  int total_points() const;  // sum of health+shield over all living units

  std::vector<double> global_state() const;
  std::vector<std::vector<double>> unit_observations() const;

  // Rebuilds controlled unit idx's egocentric observation from a stored
  // global state row. Positions are recovered exactly (grid coordinates are
  // stored as x/16, lossless in f32), so visibility gating matches the live
  // observation bit for bit; the remaining fields are copied through.
  static std::vector<double> unit_obs_from_state(const float* state,
                                                 int team_size, int idx);

 private:
  std::vector<std::vector<double>> place(const comb::LatentVector& team_latent,
                                         const comb::LatentVector& enemy_latent,
                                         const std::vector<std::pair<int, int>>& team_cells,
                                         const std::vector<std::pair<int, int>>& enemy_cells);
  void validate_latent(const comb::LatentVector& latent) const;
  std::vector<double> observe_unit(int idx) const;
  int enemy_intent(int idx) const;
  bool try_move(Unit& u, int action) const;
  bool occupied(int x, int y) const;

  int team_size_;
  comb::LatentVector team_latent_, enemy_latent_;
  std::vector<Unit> team_, enemy_;
  bool active_ = false;
  bool done_ = true;
  int steps_ = 0;
};

}  // namespace ooc::env
