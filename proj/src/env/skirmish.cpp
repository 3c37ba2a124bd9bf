#include "ooc/env/skirmish.hpp"

#include <algorithm>
#include <cmath>

#include "ooc/util/errors.hpp"
#include "ooc/util/rng.hpp"

namespace ooc::env {

namespace {

const UnitType kTypes[3] = {
    {"melee", 1, 3, 1, 1, 2},
    {"ranged", 6, 2, 1, 1, 1},
    {"heavy", 3, 4, 2, 1, 1},
};

int cheb(int ax, int ay, int bx, int by) {
  return std::max(std::abs(ax - bx), std::abs(ay - by));
}

}  // namespace

const UnitType& unit_type(int idx) {
  if (idx < 0 || idx > 2) throw ContractError("unit_type: unknown type index");
  return kTypes[idx];
}

const comb::ElementVocabulary& skirmish_vocabulary() {
  static const comb::ElementVocabulary vocab({"melee", "ranged", "heavy"});
  return vocab;
}

SkirmishEnv::SkirmishEnv(int team_size) : team_size_(team_size) {
  if (team_size != 3 && team_size != 5)
    throw ContractError("skirmish: team size must be 3 or 5");
}

int SkirmishEnv::obs_dim() const {
  // own stats (7) + teammates and enemies as (visible flag + 7) blocks
  return 7 + (team_size_ - 1) * 8 + team_size_ * 8;
}

int SkirmishEnv::state_dim() const { return 2 * team_size_ * 8; }

ObservationSpec SkirmishEnv::spec() const {
  ObservationSpec s;
  s.d_s = state_dim();
  s.d_a = team_size_ * n_actions();  // concatenated per-unit one-hot blocks
  s.action_kind = ActionKind::discrete;
  s.n_actions = n_actions();  // per controlled unit
  s.latent_slots = team_size_;
  const char* fields[8] = {"alive", "health", "shield", "x",
                           "y",     "melee",  "ranged", "heavy"};
  for (int u = 0; u < 2 * team_size_; ++u) {
    std::string tag = (u < team_size_ ? "ally" : "enemy") +
                      std::to_string(u % team_size_);
    for (const char* f : fields) s.coords.push_back(tag + "." + f);
  }
  return s;
}

void SkirmishEnv::validate_latent(const comb::LatentVector& latent) const {
  if (static_cast<int>(latent.size()) != team_size_)
    throw ContractError("skirmish: latent length must equal team size");
  for (int v : latent)
    if (v < 0 || v > 2)
      throw ContractError("skirmish: latent index out of vocabulary");
}

std::vector<std::vector<double>> SkirmishEnv::place(
    const comb::LatentVector& team_latent, const comb::LatentVector& enemy_latent,
    const std::vector<std::pair<int, int>>& team_cells,
    const std::vector<std::pair<int, int>>& enemy_cells) {
  validate_latent(team_latent);
  validate_latent(enemy_latent);
  if (static_cast<int>(team_cells.size()) != team_size_ ||
      static_cast<int>(enemy_cells.size()) != team_size_)
    throw ContractError("skirmish: need one cell per unit");

  std::vector<std::pair<int, int>> all(team_cells);
  all.insert(all.end(), enemy_cells.begin(), enemy_cells.end());
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto [x, y] = all[i];
    if (x < 0 || x >= kGrid || y < 0 || y >= kGrid)
      throw ContractError("skirmish: cell out of bounds");
    for (std::size_t j = i + 1; j < all.size(); ++j)
      if (all[j] == all[i])
        throw ContractError("skirmish: units must start on distinct cells");
  }

  team_latent_ = team_latent;
  enemy_latent_ = enemy_latent;
  team_.assign(team_size_, Unit{});
  enemy_.assign(team_size_, Unit{});
  for (int i = 0; i < team_size_; ++i) {
    const UnitType& tt = unit_type(team_latent[i]);
    team_[i] = Unit{team_latent[i], team_cells[i].first, team_cells[i].second,
                    tt.max_health,  tt.max_shield,       true};
    const UnitType& et = unit_type(enemy_latent[i]);
    enemy_[i] = Unit{enemy_latent[i], enemy_cells[i].first,
                     enemy_cells[i].second, et.max_health, et.max_shield, true};
  }
  active_ = true;
  done_ = false;
  steps_ = 0;
  return unit_observations();
}

std::vector<std::vector<double>> SkirmishEnv::reset(
    std::uint64_t seed, const comb::LatentVector& team_latent,
    const comb::LatentVector& enemy_latent) {
  validate_latent(team_latent);
  validate_latent(enemy_latent);
  Rng rng(seed ^ 0x736b69726dull);

  // Two facing vertical clusters with jittered anchor and per-team slot
  // permutation; all draws come from the reset seed.
  int ax = 2 + static_cast<int>(rng.uniform_int(3));
  int ay = 5 + static_cast<int>(rng.uniform_int(5));
  std::vector<int> pa(team_size_), pe(team_size_);
  for (int i = 0; i < team_size_; ++i) pa[i] = pe[i] = i;
  for (int i = team_size_ - 1; i > 0; --i)
    std::swap(pa[i], pa[rng.uniform_int(i + 1)]);
  int ex = 11 + static_cast<int>(rng.uniform_int(3));
  int ey = 5 + static_cast<int>(rng.uniform_int(5));
  for (int i = team_size_ - 1; i > 0; --i)
    std::swap(pe[i], pe[rng.uniform_int(i + 1)]);

  std::vector<std::pair<int, int>> tc(team_size_), ec(team_size_);
  for (int i = 0; i < team_size_; ++i) {
    tc[i] = {ax, ay + pa[i]};
    ec[i] = {ex, ey + pe[i]};
  }
  return place(team_latent, enemy_latent, tc, ec);
}

std::vector<std::vector<double>> SkirmishEnv::reset_placed(
    const comb::LatentVector& team_latent, const comb::LatentVector& enemy_latent,
    const std::vector<std::pair<int, int>>& team_cells,
    const std::vector<std::pair<int, int>>& enemy_cells) {
  return place(team_latent, enemy_latent, team_cells, enemy_cells);
}

bool SkirmishEnv::occupied(int x, int y) const {
  for (const auto& u : team_)
    if (u.alive && u.x == x && u.y == y) return true;
  for (const auto& u : enemy_)
    if (u.alive && u.x == x && u.y == y) return true;
  return false;
}

bool SkirmishEnv::try_move(Unit& u, int action) const {
  int dx = action == 3 ? -1 : action == 4 ? 1 : 0;
  int dy = action == 1 ? -1 : action == 2 ? 1 : 0;
  bool moved = false;
  for (int s = 0; s < unit_type(u.type).move_speed; ++s) {
    int nx = u.x + dx, ny = u.y + dy;
    if (nx < 0 || nx >= kGrid || ny < 0 || ny >= kGrid) break;
    if (occupied(nx, ny)) break;
    u.x = nx;
    u.y = ny;
    moved = true;
  }
  return moved;
}

int SkirmishEnv::enemy_intent(int idx) const {
  const Unit& e = enemy_[idx];
  int target = -1, best = kSight + 1;
  for (int j = 0; j < team_size_; ++j) {
    if (!team_[j].alive) continue;
    int d = cheb(e.x, e.y, team_[j].x, team_[j].y);
    if (d < best) {
      best = d;
      target = j;
    }
  }
  if (target < 0) return 0;  // nothing visible: hold position
  if (best <= unit_type(e.type).attack_range) return 5 + target;

  // Close along the dominant axis; fall back to the other axis when the
  // dominant cell is already taken and the other one still helps.
  const Unit& t = team_[target];
  int dx = t.x - e.x, dy = t.y - e.y;
  int mx = dx > 0 ? 4 : 3;
  int my = dy > 0 ? 2 : 1;
  bool x_first = std::abs(dx) >= std::abs(dy);
  int primary = x_first ? (dx != 0 ? mx : my) : (dy != 0 ? my : mx);
  int px = e.x + (primary == 3 ? -1 : primary == 4 ? 1 : 0);
  int py = e.y + (primary == 1 ? -1 : primary == 2 ? 1 : 0);
  if (occupied(px, py)) {
    int other = x_first ? (dy != 0 ? my : primary) : (dx != 0 ? mx : primary);
    if (other != primary) {
      int ox = e.x + (other == 3 ? -1 : other == 4 ? 1 : 0);
      int oy = e.y + (other == 1 ? -1 : other == 2 ? 1 : 0);
      if (!occupied(ox, oy)) return other;
    }
  }
  return primary;
}

SkirmishEnv::Result SkirmishEnv::step(const std::vector<int>& team_actions) {
  if (!active_ || done_) throw StateError("skirmish step: episode is not active");
  if (static_cast<int>(team_actions.size()) != team_size_)
    throw ContractError("skirmish step: one action per controlled unit");
  for (int a : team_actions)
    if (a < 0 || a >= n_actions())
      throw ContractError("skirmish step: action out of range");

  // Intents from the pre-step state; dead units act as noop.
  std::vector<int> ti(team_size_, 0), ei(team_size_, 0);
  for (int i = 0; i < team_size_; ++i) {
    if (team_[i].alive) ti[i] = team_actions[i];
    if (enemy_[i].alive) ei[i] = enemy_intent(i);
  }

  for (int i = 0; i < team_size_; ++i)
    if (team_[i].alive && ti[i] >= 1 && ti[i] <= 4) try_move(team_[i], ti[i]);
  for (int i = 0; i < team_size_; ++i)
    if (enemy_[i].alive && ei[i] >= 1 && ei[i] <= 4) try_move(enemy_[i], ei[i]);

  // Attacks land simultaneously: validity and damage totals are decided
  // against post-move positions and pre-damage health.
  std::vector<int> dmg_team(team_size_, 0), dmg_enemy(team_size_, 0);
  int invalid = 0;
  for (int i = 0; i < team_size_; ++i) {
    if (team_[i].alive && ti[i] >= 5) {
      int j = ti[i] - 5;
      const Unit& a = team_[i];
      if (!enemy_[j].alive ||
          cheb(a.x, a.y, enemy_[j].x, enemy_[j].y) >
              unit_type(a.type).attack_range)
        ++invalid;
      else
        dmg_enemy[j] += unit_type(a.type).damage;
    }
    if (enemy_[i].alive && ei[i] >= 5) {
      int j = ei[i] - 5;
      const Unit& a = enemy_[i];
      if (team_[j].alive && cheb(a.x, a.y, team_[j].x, team_[j].y) <=
                                unit_type(a.type).attack_range)
        dmg_team[j] += unit_type(a.type).damage;
    }
  }

  auto apply = [](Unit& u, int dmg) {
    int applied = std::min(dmg, u.health + u.shield);
    int to_shield = std::min(u.shield, applied);
    u.shield -= to_shield;
    u.health -= applied - to_shield;
    if (u.health <= 0) u.alive = false;
    return applied;
  };
  int dealt = 0, taken = 0;
  for (int i = 0; i < team_size_; ++i) {
    if (dmg_enemy[i] > 0) dealt += apply(enemy_[i], dmg_enemy[i]);
    if (dmg_team[i] > 0) taken += apply(team_[i], dmg_team[i]);
  }

  ++steps_;
  bool enemies_down = true, team_down = true;
  for (const auto& u : enemy_) enemies_down = enemies_down && !u.alive;
  for (const auto& u : team_) team_down = team_down && !u.alive;

  Result r;
  r.success = enemies_down;
  done_ = enemies_down || team_down || steps_ >= kMaxSteps;
  r.done = done_;
  r.reward = dealt - 0.5 * taken + (r.success ? kWinBonus : 0.0);
  r.invalid_actions = invalid;
  r.unit_obs = unit_observations();
  return r;
}

std::vector<double> SkirmishEnv::observe_unit(int idx) const {
  std::vector<double> o(static_cast<std::size_t>(obs_dim()), 0.0);
  const Unit& self = team_[idx];
  if (!self.alive) return o;

  auto put = [this](std::vector<double>& v, std::size_t at, const Unit& u) {
    const UnitType& t = unit_type(u.type);
    v[at + 0] = static_cast<double>(u.health) / t.max_health;
    v[at + 1] = t.max_shield > 0
                    ? static_cast<double>(u.shield) / t.max_shield
                    : 0.0;
    v[at + 2] = static_cast<double>(u.x) / kGrid;
    v[at + 3] = static_cast<double>(u.y) / kGrid;
    v[at + 4 + u.type] = 1.0;
  };

  put(o, 0, self);
  std::size_t at = 7;
  for (int j = 0; j < team_size_; ++j) {
    if (j == idx) continue;
    const Unit& u = team_[j];
    if (u.alive && cheb(self.x, self.y, u.x, u.y) <= kSight) {
      o[at] = 1.0;
      put(o, at + 1, u);
    }
    at += 8;
  }
  for (int j = 0; j < team_size_; ++j) {
    const Unit& u = enemy_[j];
    if (u.alive && cheb(self.x, self.y, u.x, u.y) <= kSight) {
      o[at] = 1.0;
      put(o, at + 1, u);
    }
    at += 8;
  }
  return o;
}

std::vector<std::vector<double>> SkirmishEnv::unit_observations() const {
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(team_size_));
  for (int i = 0; i < team_size_; ++i) out.push_back(observe_unit(i));
  return out;
}

std::vector<double> SkirmishEnv::global_state() const {
  std::vector<double> s(static_cast<std::size_t>(state_dim()), 0.0);
  auto put = [this, &s](std::size_t at, const Unit& u) {
    if (!u.alive) return;  // dead units zero out, alive flag included
    const UnitType& t = unit_type(u.type);
    s[at + 0] = 1.0;
    s[at + 1] = static_cast<double>(u.health) / t.max_health;
    s[at + 2] = t.max_shield > 0
                    ? static_cast<double>(u.shield) / t.max_shield
                    : 0.0;
    s[at + 3] = static_cast<double>(u.x) / kGrid;
    s[at + 4] = static_cast<double>(u.y) / kGrid;
    s[at + 5 + u.type] = 1.0;
  };
  for (int i = 0; i < team_size_; ++i) {
    put(static_cast<std::size_t>(i) * 8, team_[i]);
    put(static_cast<std::size_t>(team_size_ + i) * 8, enemy_[i]);
  }
  return s;
}

const SkirmishEnv::Unit& SkirmishEnv::unit(int team, int idx) const {
  if (team < 0 || team > 1 || idx < 0 || idx >= team_size_)
    throw ContractError("skirmish unit: bad index");
  return team == 0 ? team_[idx] : enemy_[idx];
}

int SkirmishEnv::total_points() const {
  int total = 0;
  for (const auto& u : team_)
    if (u.alive) total += u.health + u.shield;
  for (const auto& u : enemy_)
    if (u.alive) total += u.health + u.shield;
  return total;
}

std::vector<double> SkirmishEnv::unit_obs_from_state(const float* state,
                                                     int team_size, int idx) {
  if (team_size < 1 || idx < 0 || idx >= team_size)
    throw ContractError("unit_obs_from_state: bad unit index");
  int obs_dim = 7 + (team_size - 1) * 8 + team_size * 8;
  std::vector<double> o(static_cast<std::size_t>(obs_dim), 0.0);

  auto block = [&](int u) { return state + static_cast<std::size_t>(u) * 8; };
  auto cell_x = [&](const float* b) {
    return static_cast<int>(std::lround(b[3] * kGrid));
  };
  auto cell_y = [&](const float* b) {
    return static_cast<int>(std::lround(b[4] * kGrid));
  };

  const float* self = block(idx);
  if (self[0] < 0.5f) return o;  // dead: observation is all zeros
  int sx = cell_x(self), sy = cell_y(self);
  for (int k = 0; k < 7; ++k) o[k] = self[1 + k];

  std::size_t at = 7;
  auto put_other = [&](const float* b) {
    bool vis = b[0] > 0.5f &&
               cheb(sx, sy, cell_x(b), cell_y(b)) <= kSight;
    if (vis) {
      o[at] = 1.0;
      for (int k = 0; k < 7; ++k) o[at + 1 + k] = b[1 + k];
    }
    at += 8;
  };
  for (int j = 0; j < team_size; ++j)
    if (j != idx) put_other(block(j));
  for (int j = 0; j < team_size; ++j) put_other(block(team_size + j));
  return o;
}

}  // namespace ooc::env
