#include "ooc/diffusion/trainer.hpp"

#include <cmath>
#include <string>

#include "ooc/kernels/kernels.hpp"
#include "ooc/util/errors.hpp"

namespace ooc::diff {

Trainer::Trainer(Denoiser<float>& model, const NoiseSchedule& sched, const TrainSet& data,
                 const TrainConfig& cfg)
    : model_(model), sched_(sched), data_(data), cfg_(cfg), rng_(cfg.seed ^ 0x7261696e65725ull) {
    const auto& mc = model.config();
    if (data.d != mc.d || data.horizon != mc.horizon)
        throw ContractError("trainer: data shape does not match the model");
    if (data.n <= 0) throw ContractError("trainer: empty training set");
    bool cond = mc.mode != CondMode::none;
    if (cond && mc.vocab > 0 && data.latent_idx.empty())
        throw ContractError("trainer: model expects latent indices");
    if (cond && mc.vocab == 0 && data.latent_tok.empty())
        throw ContractError("trainer: model expects latent token vectors");
    size_t np = model.params().total();
    ema_.assign(model.params().values.begin(), model.params().values.end());
    adam_m_.assign(np, 0.0f);
    adam_v_.assign(np, 0.0f);
}

double Trainer::step() {
    const auto& mc = model_.config();
    int B = cfg_.batch_size, d = data_.d, h = data_.horizon;
    int n_tok = mc.cond_tokens;
    size_t img = static_cast<size_t>(d) * h;
    bool cond = mc.mode != CondMode::none;

    x0_.resize(img * B);
    xt_.resize(img * B);
    eps_.resize(img * B);
    deps_.resize(img * B);
    tbuf_.resize(B);
    if (cond && mc.vocab > 0) idxbuf_.resize(static_cast<size_t>(B) * n_tok);
    if (cond && mc.vocab == 0) tokbuf_.resize(static_cast<size_t>(mc.cond_dim) * B * n_tok);

    model_.params().zero_grads();
    double loss_sum = 0.0;
    for (int micro = 0; micro < cfg_.grad_accum; ++micro) {
        std::vector<uint8_t> drop(B, 0);
        for (int b = 0; b < B; ++b) {
            int r = static_cast<int>(rng_.uniform_int(data_.n));
            // gather record r as columns [b*h, (b+1)*h)
            const float* src = data_.images.data() + static_cast<size_t>(r) * img;
            for (int row = 0; row < d; ++row)
                std::copy(src + static_cast<size_t>(row) * h, src + static_cast<size_t>(row + 1) * h,
                          x0_.data() + static_cast<size_t>(row) * B * h + static_cast<size_t>(b) * h);
            tbuf_[b] = 1 + static_cast<int>(rng_.uniform_int(sched_.T));
            if (cond) {
                drop[b] = rng_.uniform() < cfg_.cond_drop ? 1 : 0;
                if (mc.vocab > 0)
                    for (int j = 0; j < n_tok; ++j)
                        idxbuf_[static_cast<size_t>(b) * n_tok + j] =
                            data_.latent_idx[static_cast<size_t>(r) * n_tok + j];
                else
                    for (int e = 0; e < mc.cond_dim; ++e)
                        for (int j = 0; j < n_tok; ++j)
                            tokbuf_[static_cast<size_t>(e) * B * n_tok + b * n_tok + j] =
                                data_.latent_tok[(static_cast<size_t>(r) * n_tok + j) * mc.cond_dim + e];
            }
        }
        rng_.fill_normal(eps_.data(), eps_.size());
        for (int b = 0; b < B; ++b) {
            double sa = sched_.sqrt_ab(tbuf_[b]), sb = sched_.sqrt_one_minus_ab(tbuf_[b]);
            for (int row = 0; row < d; ++row) {
                size_t off = static_cast<size_t>(row) * B * h + static_cast<size_t>(b) * h;
                for (int j = 0; j < h; ++j)
                    xt_[off + j] = static_cast<float>(sa) * x0_[off + j] +
                                   static_cast<float>(sb) * eps_[off + j];
            }
        }

        const float* pred = model_.forward(xt_.data(), B, tbuf_.data(),
                                           idxbuf_.empty() ? nullptr : idxbuf_.data(),
                                           tokbuf_.empty() ? nullptr : tokbuf_.data(), drop);
        // weighted mean squared error over all elements
        double denom = static_cast<double>(img) * B;
        double loss = 0.0;
        float gscale = static_cast<float>(2.0 / (denom * cfg_.grad_accum));
        for (int row = 0; row < d; ++row) {
            float w = row < data_.d_state ? 1.0f : static_cast<float>(cfg_.action_weight);
            size_t off = static_cast<size_t>(row) * B * h;
            for (size_t j = 0; j < static_cast<size_t>(B) * h; ++j) {
                float e = pred[off + j] - eps_[off + j];
                loss += static_cast<double>(w) * e * e;
                deps_[off + j] = w * gscale * e;
            }
        }
        loss /= denom;
        if (!std::isfinite(loss))
            throw StateError("trainer: non-finite loss at optimizer step " +
                             std::to_string(steps_done_) + " (t range [" +
                             std::to_string(sched_.T) + "], records " + std::to_string(data_.n) + ")");
        loss_sum += loss;
        model_.backward(deps_.data());
    }

    auto& ps = model_.params();
    ++steps_done_;
    float bc1 = 1.0f - static_cast<float>(std::pow(cfg_.beta1, steps_done_));
    float bc2 = 1.0f - static_cast<float>(std::pow(cfg_.beta2, steps_done_));
    kern::adam_step(ps.values.data(), adam_m_.data(), adam_v_.data(), ps.grads.data(), ps.total(),
                    static_cast<float>(cfg_.lr), static_cast<float>(cfg_.beta1),
                    static_cast<float>(cfg_.beta2), static_cast<float>(cfg_.adam_eps), bc1, bc2);
    kern::ema_update(ema_.data(), ps.values.data(), ps.total(), static_cast<float>(cfg_.ema_decay));
    last_loss_ = loss_sum / cfg_.grad_accum;
    return last_loss_;
}

void Trainer::run(const std::function<void(int, double)>& on_log) {
    for (int i = 0; i < cfg_.steps; ++i) {
        double loss = step();
        if (on_log && (steps_done_ % cfg_.log_every == 0 || i + 1 == cfg_.steps))
            on_log(steps_done_, loss);
    }
}

}  // namespace ooc::diff
