#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ooc/diffusion/denoiser.hpp"
#include "ooc/diffusion/schedule.hpp"

namespace ooc::diff {

struct TrainConfig {
    int steps = 1000;
    int batch_size = 32;
    double lr = 2e-4;
    int grad_accum = 2;
    double ema_decay = 0.995;
    double action_weight = 1.0;
    double cond_drop = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    uint64_t seed = 0;
    int log_every = 200;
};

// Normalized training set. Each record is one (d, horizon) trajectory image
// stored row-major; exactly one of latent_idx / latent_tok is populated for
// conditioned models (token indices vs raw token vectors per record).
struct TrainSet {
    int d = 0;
    int d_state = 0;
    int horizon = 0;
    int n = 0;
    std::vector<float> images;
    std::vector<int> latent_idx;
    std::vector<float> latent_tok;
};

// Noise-prediction training loop: uniformly sampled timesteps, weighted
// elementwise squared error (action rows upweighted), gradient accumulation,
// Adam, and an EMA copy of the weights that sampling later uses.
class Trainer {
public:
    Trainer(Denoiser<float>& model, const NoiseSchedule& sched, const TrainSet& data,
            const TrainConfig& cfg);

    // One optimizer step = grad_accum micro-batches. Returns the mean loss.
    double step();
    // Runs cfg.steps optimizer steps; on_log(step, loss) fires every log_every.
    void run(const std::function<void(int, double)>& on_log = nullptr);

    const std::vector<float>& ema() const { return ema_; }
    int steps_done() const { return steps_done_; }
    double last_loss() const { return last_loss_; }

private:
    Denoiser<float>& model_;
    const NoiseSchedule& sched_;
    const TrainSet& data_;
    TrainConfig cfg_;
    Rng rng_;
    std::vector<float> ema_, adam_m_, adam_v_;
    std::vector<float> xt_, eps_, x0_, deps_;
    std::vector<int> tbuf_, idxbuf_;
    std::vector<float> tokbuf_;
    int steps_done_ = 0;
    double last_loss_ = 0.0;
};

}  // namespace ooc::diff
