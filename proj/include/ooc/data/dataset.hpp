#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ooc/comb/combinatorics.hpp"
#include "ooc/data/normalizer.hpp"
#include "ooc/env/maze.hpp"
#include "ooc/env/roundabout.hpp"
#include "ooc/env/skirmish.hpp"
#include "ooc/util/rng.hpp"

namespace ooc::data {

// One stored demonstration. Rows are (state, action, reward) triples; the
// action row is one-hot per discrete actor and empty when the environment
// has no actions. `latent` is the conditioning payload: element indices cast
// to float for discrete environments, raw waypoint states for the maze.
struct TrajectoryRecord {
  int h = 0;
  int d_s = 0;
  int d_a = 0;
  std::vector<float> states;   // h * d_s
  std::vector<float> actions;  // h * d_a
  std::vector<float> rewards;  // h
  std::vector<float> latent;
  bool success = false;
  float ret = 0.0f;  // sum of rewards

  void validate() const;  // ContractError on inconsistent layout
};

struct DatasetMeta {
  std::string env;      // roundabout | skirmish | maze-medium | maze-large
  std::string expert;   // policy that produced the demonstrations
  std::string scenario; // split the data was collected for, if any
  std::string success_definition;
  std::string notes;    // free-form collection details (e.g. opponent team)
  int d_s = 0;
  int d_a = 0;
  int h = 0;
  std::string latent_kind;  // "discrete" | "waypoints"
  int latent_len = 0;
  std::vector<std::string> vocabulary;  // empty for waypoint latents
  int n_slots = 0;
};

// Records plus manifest-level statistics. Stats cover the d_s + d_a
// trajectory coordinates (states first), computed over all rows.
struct Dataset {
  DatasetMeta meta;
  std::vector<TrajectoryRecord> records;
  std::vector<double> mins, maxs, means, stds;
};

void compute_stats(Dataset& ds);

// Maps each trajectory coordinate onto [-1, 1] via the dataset min/max.
Normalizer dataset_normalizer(const Dataset& ds);

// On-disk form: <stem>.json manifest + <stem>.bin little-endian f32 blob,
// records concatenated as [states|actions|rewards|latent|success|return].
// The rewards block exists so value-based learners can train offline; the
// manifest's layout field declares it.
void write_dataset(const Dataset& ds, const std::string& stem);
Dataset read_dataset(const std::string& stem);

// Cuts fixed-length windows (stride apart, plus a final window flush with
// the episode end) out of variable-length episodes. Episodes shorter than
// `h` are dropped. Window return is the sum of its own rewards.
std::vector<TrajectoryRecord> window_records(
    const std::vector<TrajectoryRecord>& episodes, int h, int stride);

enum class Keep { successes_only, all };

struct CollectStats {
  int episodes = 0;
  int successes = 0;
};

// Episode e of a collection run uses environment seed base_seed*1000003+e,
// so any stored episode can be replayed independently.
std::uint64_t episode_seed(std::uint64_t base_seed, int episode);

using LatentSource = std::function<comb::LatentVector(Rng&)>;
using RoundaboutPolicy = std::function<int(const env::RoundaboutEnv&, Rng&)>;
using SkirmishPolicy =
    std::function<std::vector<int>(const env::SkirmishEnv&, Rng&)>;

// Rolls episodes and stores (observation, one-hot action, reward) rows.
// keep=successes_only drops failed episodes and throws StateError when the
// whole budget yields none.
std::vector<TrajectoryRecord> collect_roundabout(std::uint64_t base_seed,
                                                 int episodes, Keep keep,
                                                 const LatentSource& latents,
                                                 const RoundaboutPolicy& policy,
                                                 CollectStats* stats = nullptr);

// States are the global planner view; each unit's commanded action becomes
// a one-hot block, zeroed once the unit is dead. The stored latent is the
// controlled team's composition; the enemy composition is a collection
// parameter recorded in the manifest, not part of the latent. An empty
// enemy source mirrors the controlled team's draw, which keeps every
// composition winnable by symmetry.
std::vector<TrajectoryRecord> collect_skirmish(std::uint64_t base_seed,
                                               int episodes, Keep keep,
                                               const LatentSource& team_latents,
                                               const LatentSource& enemy_latents,
                                               const SkirmishPolicy& policy,
                                               CollectStats* stats = nullptr);

// Expert point-mass trajectories; the latent is the extracted waypoint
// triple (12 floats), actions are empty.
std::vector<TrajectoryRecord> collect_maze(const env::MazeGrid& grid,
                                           std::uint64_t base_seed,
                                           int trajectories, int h);

// Train/test latent supports for one evaluation scenario. For the maze the
// supports live over per-waypoint quadrant signatures and the continuous
// regions bridge raw waypoint triples to those signatures.
struct SplitSpec {
  std::string scenario;
  comb::DiscreteSupport train;
  comb::DiscreteSupport test;
  bool continuous = false;
  comb::ContinuousSupportRegion train_region;
  comb::ContinuousSupportRegion test_region;
};

// simple: train all 3^3 team combinations, test the uniform ones.
// hard: train the 3 uniform teams, test the 24 mixed ones.
// roundabout: train {all cars, car+4 bikes}, test the other mixed traffic.
// The maze scenario needs grid geometry; use make_maze_split for it.
SplitSpec make_split(const std::string& scenario,
                     const comb::ElementVocabulary& vocab);

// Quadrant id of one waypoint and the signature of a 3-waypoint latent,
// over the grid's 2x2 partition (0 top-left, 1 top-right, 2 bottom-left,
// 3 bottom-right; y grows downward).
int maze_quadrant(const env::MazeGrid& grid, double x, double y);
comb::LatentVector maze_signature(const env::MazeGrid& grid,
                                  const std::vector<float>& waypoint_latent);

// Held-out combinations: trajectories running bottom-right to top-left
// (first waypoint in quadrant 3, last in quadrant 0). Every train marginal
// still covers all four quadrants, so the support constraint holds.
SplitSpec make_maze_split(const env::MazeGrid& grid);

}  // namespace ooc::data
