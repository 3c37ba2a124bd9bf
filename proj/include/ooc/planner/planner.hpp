#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ooc/data/dataset.hpp"
#include "ooc/diffusion/checkpoint.hpp"
#include "ooc/env/maze.hpp"
#include "ooc/env/roundabout.hpp"
#include "ooc/env/skirmish.hpp"
#include "ooc/util/rng.hpp"

namespace ooc::plan {

enum class SamplerKind { ddpm, ddim };

struct PlanConfig {
    double guidance = 1.0;  // eps = (1+w)*eps_cond - w*eps_null
    SamplerKind sampler = SamplerKind::ddpm;
    int ddim_steps = 0;     // ddim only: reverse steps taken; must divide T
    double eta = 0.0;       // ddim only: 0 = deterministic, 1 = ancestral noise level
    bool clip = true;       // clamp the clean-trajectory estimate while sampling
    int replan_every = 1;   // rollouts: env steps between plans; <= 0 plans once
    std::uint64_t seed = 0; // rollouts derive per-episode noise streams from this
};

// Denoised trajectory in the model's normalized units plus the raw-unit
// action block extracted from the first column. State rows of column 0 hold
// the normalized observation bit-for-bit.
struct PlanResult {
    std::vector<float> traj;  // (d, h) row-major
    std::vector<float> action;
    int d = 0;
    int h = 0;
    int d_state = 0;
};

// Reverse-process trajectory sampler around a trained denoiser: Gaussian
// init, per-iteration observation inpainting, two-evaluation classifier-free
// guidance, and the configured step rule. Owns the loaded model; plan() is
// deterministic given the Rng state.
class Planner {
public:
    Planner(diff::LoadedModel model, const PlanConfig& cfg);

    // obs: raw observation, d_state coords. Conditioning comes from exactly
    // one of idx (vocabulary models: one index per token) / tokens
    // (continuous models: per-record token-major layout, n*cond_dim floats).
    // Unconditioned models take neither.
    PlanResult plan(const std::vector<double>& obs, const std::vector<int>& idx,
                    const std::vector<float>& tokens, Rng& rng);

    // The planned trajectory mapped back to raw units, same (d, h) layout.
    std::vector<double> denormalize_traj(const PlanResult& p) const;

    const diff::LoadedModel& model() const { return m_; }
    const PlanConfig& config() const { return cfg_; }

private:
    void eval_eps(const std::vector<float>& x, int t, const std::vector<int>& idx,
                  const std::vector<float>& tokens, std::vector<float>& eps);

    diff::LoadedModel m_;
    PlanConfig cfg_;
    std::vector<int> step_ts_;  // reverse-order timesteps the sampler visits
    std::vector<float> eps_c_, eps_n_, noise_;
};

// Clamp bounds for the clean-trajectory estimate: wider than the data range
// [-1, 1] so out-of-support extrapolation is not squashed onto the box.
constexpr double kClipLo = -1.5;
constexpr double kClipHi = 1.5;

// Receding-horizon episode record shared by the driving and skirmish lanes.
struct RolloutResult {
    data::TrajectoryRecord record;
    int plan_calls = 0;
    bool crashed = false;  // roundabout only
};

// Drives one episode, replanning every cfg.replan_every steps and executing
// stored actions in between. Discrete actions are argmax over their one-hot
// rows. The episode seed fixes both the env and the planner noise.
RolloutResult rollout_roundabout(env::RoundaboutEnv& env, Planner& planner,
                                 const comb::LatentVector& latent, std::uint64_t seed);
RolloutResult rollout_skirmish(env::SkirmishEnv& env, Planner& planner,
                               const comb::LatentVector& team,
                               const comb::LatentVector& enemy, std::uint64_t seed);

// One-shot maze generation: no environment stepping, the plan itself is the
// trajectory. Returns the raw-unit (d, h) image.
std::vector<double> generate_maze_path(Planner& planner, const std::vector<float>& waypoints,
                                       const std::vector<double>& start, std::uint64_t seed);

// Policy adapters so a planner can stand wherever scripted or learned
// policies do. Stateful: they hold the plan between replans.
data::RoundaboutPolicy diffusion_roundabout_policy(Planner& planner);
data::SkirmishPolicy diffusion_skirmish_policy(Planner& planner);

}  // namespace ooc::plan
