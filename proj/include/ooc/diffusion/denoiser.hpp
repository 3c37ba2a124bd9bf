#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ooc/nn/attention.hpp"
#include "ooc/nn/layers.hpp"
#include "ooc/nn/param_store.hpp"
#include "ooc/util/errors.hpp"

namespace ooc::diff {

enum class CondMode { none, concat, attention };

const char* cond_mode_name(CondMode m);
CondMode cond_mode_from_name(const std::string& s);

// Architecture of the trajectory denoiser. d counts rows of the (d, horizon)
// trajectory image; cond_tokens/cond_dim describe the conditioning tokens;
// vocab > 0 means tokens are rows of a learned embedding table addressed by
// integer indices, vocab == 0 means the caller supplies token vectors.
struct DenoiserConfig {
    int d = 0;
    int horizon = 0;
    int base = 32;
    std::vector<int> mults = {1, 4, 8};
    CondMode mode = CondMode::none;
    int cond_tokens = 0;
    int cond_dim = 0;
    int vocab = 0;

    void validate() const {
        if (d <= 0 || horizon <= 0 || base <= 0) throw ContractError("denoiser: bad dims");
        if (horizon % 4 != 0) throw ContractError("denoiser: horizon must be divisible by 4");
        if (mults.size() != 3) throw ContractError("denoiser: expected 3 width multipliers");
        if (mode != CondMode::none && (cond_tokens <= 0 || cond_dim <= 0))
            throw ContractError("denoiser: conditioning enabled but token shape unset");
    }
};

namespace detail {

inline int norm_groups(int channels) {
    int g = std::min(8, channels);
    while (channels % g != 0) g /= 2;
    return g;
}

// Conv -> GroupNorm -> SiLU, twice, with a per-channel time-embedding bias
// injected between the halves and a (possibly projected) residual around the
// whole block.
template <class T>
struct ResBlock {
    nn::Conv1d<T> conv1;
    nn::GroupNorm<T> gn1;
    nn::SiLU<T> act1;
    nn::SiLU<T> tact;
    nn::Linear<T> tproj;
    nn::Conv1d<T> conv2;
    nn::GroupNorm<T> gn2;
    nn::SiLU<T> act2;
    std::unique_ptr<nn::Conv1d<T>> skip;
    int cout;
    int batch = 0, len = 0, tdim;
    std::vector<T> sum1, y, dx, dtb;

    ResBlock(nn::ParamStore<T>& ps, const std::string& name, int cin, int co, int time_dim)
        : conv1(ps, name + ".conv1", cin, co, 5, 1),
          gn1(ps, name + ".gn1", co, norm_groups(co)),
          tproj(ps, name + ".tproj", time_dim, co),
          conv2(ps, name + ".conv2", co, co, 5, 1),
          gn2(ps, name + ".gn2", co, norm_groups(co)),
          cout(co),
          tdim(time_dim) {
        if (cin != co) skip = std::make_unique<nn::Conv1d<T>>(ps, name + ".skip", cin, co, 1, 1);
    }

    void init(Rng& rng) {
        conv1.init(rng);
        gn1.init(rng);
        tproj.init(rng);
        conv2.init(rng);
        gn2.init(rng);
        if (skip) skip->init(rng);
    }

    const T* forward(const T* x, const T* temb, int B, int L) {
        batch_set(B, L);
        const T* h = conv1.forward(x, B, L);
        h = gn1.forward(h, B, L);
        h = act1.forward(h, static_cast<size_t>(cout) * B * L);
        const T* ta = tact.forward(temb, static_cast<size_t>(tdim) * B);
        const T* tb = tproj.forward(ta, B);
        sum1.assign(h, h + static_cast<size_t>(cout) * B * L);
        for (int c = 0; c < cout; ++c)
            for (int b = 0; b < B; ++b) {
                T add = tb[static_cast<size_t>(c) * B + b];
                T* row = sum1.data() + static_cast<size_t>(c) * B * L + static_cast<size_t>(b) * L;
                for (int j = 0; j < L; ++j) row[j] += add;
            }
        h = conv2.forward(sum1.data(), B, L);
        h = gn2.forward(h, B, L);
        h = act2.forward(h, static_cast<size_t>(cout) * B * L);
        const T* res = skip ? skip->forward(x, B, L) : x;
        y.resize(static_cast<size_t>(cout) * B * L);
        kern::vadd(h, res, y.data(), y.size());
        return y.data();
    }

    // dtemb accumulates (tdim, B).
    const T* backward(const T* dy, T* dtemb) {
        int B = batch, L = len;
        const T* d = act2.backward(dy);
        d = gn2.backward(d);
        d = conv2.backward(d);
        dtb.assign(static_cast<size_t>(cout) * B, T(0));
        for (int c = 0; c < cout; ++c)
            for (int b = 0; b < B; ++b) {
                const T* row = d + static_cast<size_t>(c) * B * L + static_cast<size_t>(b) * L;
                T acc = T(0);
                for (int j = 0; j < L; ++j) acc += row[j];
                dtb[static_cast<size_t>(c) * B + b] = acc;
            }
        const T* dta = tproj.backward(dtb.data());
        const T* dtemb_part = tact.backward(dta);
        kern::vaxpy(T(1), dtemb_part, dtemb, static_cast<size_t>(tdim) * B);
        d = act1.backward(d);
        d = gn1.backward(d);
        d = conv1.backward(d);
        dx.assign(d, d + conv1_in_size());
        if (skip) {
            const T* ds = skip->backward(dy);
            kern::vaxpy(T(1), ds, dx.data(), dx.size());
        } else {
            kern::vaxpy(T(1), dy, dx.data(), dx.size());
        }
        return dx.data();
    }

private:
    void batch_set(int B, int L) {
        batch = B;
        len = L;
    }
    size_t conv1_in_size() const { return static_cast<size_t>(conv1.cin()) * batch * len; }
};

}  // namespace detail

// Temporal UNet predicting the noise component of a (d, horizon) trajectory
// image. Three resolution levels with width multipliers, two mid blocks, skip
// concatenation on the way up, and a zero-initialized output head so the
// initial prediction is exactly zero.
template <class T>
class Denoiser {
public:
    explicit Denoiser(const DenoiserConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        int b0 = cfg_.base * cfg_.mults[0];
        int b1 = cfg_.base * cfg_.mults[1];
        int b2 = cfg_.base * cfg_.mults[2];
        chans_ = {b0, b1, b2};
        tin_ = cfg_.base + (cfg_.mode == CondMode::concat ? cfg_.cond_tokens * cfg_.cond_dim : 0);

        if (cfg_.mode != CondMode::none) {
            if (cfg_.vocab > 0)
                embed_ = std::make_unique<nn::Embedding<T>>(ps_, "cond.embed", cfg_.vocab, cfg_.cond_dim);
            null_off_ = ps_.add("cond.null", cfg_.cond_dim);
        }
        tl1_ = std::make_unique<nn::Linear<T>>(ps_, "time.l1", tin_, 4 * cfg_.base);
        tl2_ = std::make_unique<nn::Linear<T>>(ps_, "time.l2", 4 * cfg_.base, cfg_.base);

        int cin = cfg_.d;
        for (int i = 0; i < 3; ++i) {
            down_rb_.push_back(std::make_unique<detail::ResBlock<T>>(
                ps_, "down" + std::to_string(i), cin, chans_[i], cfg_.base));
            if (use_attn())
                down_attn_.push_back(std::make_unique<nn::CrossAttention<T>>(
                    ps_, "down" + std::to_string(i) + ".attn", chans_[i], cfg_.cond_dim));
            if (i < 2)
                down_conv_.push_back(
                    std::make_unique<nn::Conv1d<T>>(ps_, "down" + std::to_string(i) + ".ds", chans_[i], chans_[i], 3, 2));
            cin = chans_[i];
        }
        mid1_ = std::make_unique<detail::ResBlock<T>>(ps_, "mid1", chans_[2], chans_[2], cfg_.base);
        mid2_ = std::make_unique<detail::ResBlock<T>>(ps_, "mid2", chans_[2], chans_[2], cfg_.base);
        // up pairs: (b1 <- 2*b2), then (b0 <- 2*b1)
        up_rb_.push_back(std::make_unique<detail::ResBlock<T>>(ps_, "up0", 2 * chans_[2], chans_[1], cfg_.base));
        up_rb_.push_back(std::make_unique<detail::ResBlock<T>>(ps_, "up1", 2 * chans_[1], chans_[0], cfg_.base));
        if (use_attn()) {
            up_attn_.push_back(std::make_unique<nn::CrossAttention<T>>(ps_, "up0.attn", chans_[1], cfg_.cond_dim));
            up_attn_.push_back(std::make_unique<nn::CrossAttention<T>>(ps_, "up1.attn", chans_[0], cfg_.cond_dim));
        }
        up_conv_.push_back(std::make_unique<nn::ConvTranspose1d<T>>(ps_, "up0.us", chans_[1], chans_[1]));
        up_conv_.push_back(std::make_unique<nn::ConvTranspose1d<T>>(ps_, "up1.us", chans_[0], chans_[0]));
        final_conv_ = std::make_unique<nn::Conv1d<T>>(ps_, "final.conv", chans_[0], chans_[0], 5, 1);
        final_gn_ = std::make_unique<nn::GroupNorm<T>>(ps_, "final.gn", chans_[0], detail::norm_groups(chans_[0]));
        final_out_ = std::make_unique<nn::Conv1d<T>>(ps_, "final.out", chans_[0], cfg_.d, 1, 1, /*zero_init=*/true);

        ps_.allocate();
    }

    void init(uint64_t seed) {
        Rng rng(seed);
        if (embed_) embed_->init(rng);
        if (cfg_.mode != CondMode::none)
            rng.fill_normal(ps_.val(null_off_), cfg_.cond_dim, 1.0 / std::sqrt(static_cast<double>(cfg_.cond_dim)));
        tl1_->init(rng);
        tl2_->init(rng);
        for (auto& rb : down_rb_) rb->init(rng);
        for (auto& a : down_attn_) a->init(rng);
        for (auto& c : down_conv_) c->init(rng);
        mid1_->init(rng);
        mid2_->init(rng);
        for (auto& rb : up_rb_) rb->init(rng);
        for (auto& a : up_attn_) a->init(rng);
        for (auto& c : up_conv_) c->init(rng);
        final_conv_->init(rng);
        final_gn_->init(rng);
        final_out_->init(rng);
    }

    // x: (d, B*h). t: B timestep indices. For discrete conditioning pass idx
    // (B*n indices); for continuous pass tokens (cond_dim, B*n). drop marks
    // samples whose condition is replaced by the learned null token; empty
    // means no drops.
    const T* forward(const T* x, int batch, const int* t, const int* idx, const T* tokens,
                     const std::vector<uint8_t>& drop) {
        int B = batch, L = cfg_.horizon, n = cfg_.cond_tokens;
        batch_ = B;
        drop_ = drop;
        if (drop_.empty()) drop_.assign(B, 0);

        if (cfg_.mode != CondMode::none) {
            if (cfg_.vocab > 0) {
                if (idx == nullptr) throw ContractError("denoiser: vocab set but no indices given");
                const T* emb = embed_->forward(idx, B * n);
                tok_.assign(emb, emb + static_cast<size_t>(cfg_.cond_dim) * B * n);
            } else {
                if (tokens == nullptr) throw ContractError("denoiser: expected token vectors");
                tok_.assign(tokens, tokens + static_cast<size_t>(cfg_.cond_dim) * B * n);
            }
            const T* null_tok = ps_.val(null_off_);
            for (int b = 0; b < B; ++b) {
                if (!drop_[b]) continue;
                for (int e = 0; e < cfg_.cond_dim; ++e)
                    for (int j = 0; j < n; ++j)
                        tok_[static_cast<size_t>(e) * B * n + b * n + j] = null_tok[e];
            }
        }

        // time features (+ flattened tokens in concat mode)
        tsin_.resize(static_cast<size_t>(tin_) * B);
        nn::sinusoidal_embedding(t, B, cfg_.base, tsin_.data());
        if (cfg_.mode == CondMode::concat) {
            for (int b = 0; b < B; ++b)
                for (int j = 0; j < n; ++j)
                    for (int e = 0; e < cfg_.cond_dim; ++e)
                        tsin_[static_cast<size_t>(cfg_.base + j * cfg_.cond_dim + e) * B + b] =
                            tok_[static_cast<size_t>(e) * B * n + b * n + j];
        }
        const T* th = tl1_->forward(tsin_.data(), B);
        th = tact_.forward(th, static_cast<size_t>(4 * cfg_.base) * B);
        const T* temb = tl2_->forward(th, B);

        const T* h = x;
        int len = L;
        skip_ptr_.clear();
        skip_len_.clear();
        for (int i = 0; i < 3; ++i) {
            h = down_rb_[i]->forward(h, temb, B, len);
            if (use_attn()) h = down_attn_[i]->forward(h, tok_.data(), B, len, n);
            skip_ptr_.push_back(h);
            skip_len_.push_back(len);
            if (i < 2) {
                h = down_conv_[i]->forward(h, B, len);
                len /= 2;
            }
        }
        h = mid1_->forward(h, temb, B, len);
        h = mid2_->forward(h, temb, B, len);
        for (int j = 0; j < 2; ++j) {
            int lvl = 2 - j;  // skip popped: 2 then 1
            int hc = (j == 0) ? chans_[2] : chans_[1];
            cat_[j].resize(static_cast<size_t>(2 * hc) * B * len);
            std::copy(h, h + static_cast<size_t>(hc) * B * len, cat_[j].begin());
            std::copy(skip_ptr_[lvl], skip_ptr_[lvl] + static_cast<size_t>(hc) * B * len,
                      cat_[j].begin() + static_cast<size_t>(hc) * B * len);
            h = up_rb_[j]->forward(cat_[j].data(), temb, B, len);
            if (use_attn()) h = up_attn_[j]->forward(h, tok_.data(), B, len, n);
            h = up_conv_[j]->forward(h, B, len);
            len *= 2;
        }
        h = final_conv_->forward(h, B, len);
        h = final_gn_->forward(h, B, len);
        h = final_act_.forward(h, static_cast<size_t>(chans_[0]) * B * len);
        return final_out_->forward(h, B, len);
    }

    // deps: (d, B*h) gradient of the loss w.r.t. the prediction.
    void backward(const T* deps) {
        int B = batch_, n = cfg_.cond_tokens;
        dtemb_.assign(static_cast<size_t>(cfg_.base) * B, T(0));
        if (cfg_.mode != CondMode::none)
            dtok_.assign(static_cast<size_t>(cfg_.cond_dim) * B * n, T(0));

        int len = cfg_.horizon;
        const T* d = final_out_->backward(deps);
        d = final_act_.backward(d);
        d = final_gn_->backward(d);
        d = final_conv_->backward(d);

        // up path in reverse
        std::vector<T> dskip1, dskip2;
        for (int j = 1; j >= 0; --j) {
            len /= 2;  // length at which up block j ran
            d = up_conv_[j]->backward(d);
            if (use_attn()) {
                d = up_attn_[j]->backward(d);
                kern::vaxpy(T(1), up_attn_[j]->d_tokens(), dtok_.data(), dtok_.size());
            }
            d = up_rb_[j]->backward(d, dtemb_.data());
            int hc = (j == 0) ? chans_[2] : chans_[1];
            size_t half = static_cast<size_t>(hc) * B * len;
            auto& dsk = (j == 0) ? dskip2 : dskip1;
            dsk.assign(d + half, d + 2 * half);
            dcur_.assign(d, d + half);
            d = dcur_.data();
        }
        // len is now horizon/4, d targets mid2 output
        d = mid2_->backward(d, dtemb_.data());
        d = mid1_->backward(d, dtemb_.data());

        for (int i = 2; i >= 0; --i) {
            std::vector<T>* extra = (i == 2) ? &dskip2 : (i == 1) ? &dskip1 : nullptr;
            if (i < 2) {
                d = down_conv_[i]->backward(d);
            }
            // at level i, d matches the post-attention output of the level
            if (extra) {
                dlvl_[i].assign(d, d + extra->size());
                kern::vaxpy(T(1), extra->data(), dlvl_[i].data(), extra->size());
                d = dlvl_[i].data();
            }
            if (use_attn()) {
                d = down_attn_[i]->backward(d);
                kern::vaxpy(T(1), down_attn_[i]->d_tokens(), dtok_.data(), dtok_.size());
            }
            d = down_rb_[i]->backward(d, dtemb_.data());
            if (i < 2) len *= 2;
        }
        dx_.assign(d, d + static_cast<size_t>(cfg_.d) * B * cfg_.horizon);

        // time path
        const T* dth = tl2_->backward(dtemb_.data());
        dth = tact_.backward(dth);
        const T* dtsin = tl1_->backward(dth);
        if (cfg_.mode == CondMode::concat) {
            // route the concatenated token rows back into dtok
            for (int b = 0; b < B; ++b)
                for (int j = 0; j < n; ++j)
                    for (int e = 0; e < cfg_.cond_dim; ++e)
                        dtok_[static_cast<size_t>(e) * B * n + b * n + j] +=
                            dtsin[static_cast<size_t>(cfg_.base + j * cfg_.cond_dim + e) * B + b];
        }

        if (cfg_.mode != CondMode::none) {
            // dropped samples feed the null token; the rest feed the table
            T* dnull = ps_.grad(null_off_);
            for (int b = 0; b < B; ++b) {
                if (!drop_[b]) continue;
                for (int e = 0; e < cfg_.cond_dim; ++e)
                    for (int j = 0; j < n; ++j) {
                        dnull[e] += dtok_[static_cast<size_t>(e) * B * n + b * n + j];
                        dtok_[static_cast<size_t>(e) * B * n + b * n + j] = T(0);
                    }
            }
            if (embed_) embed_->backward(dtok_.data());
        }
    }

    const T* dx() const { return dx_.data(); }
    nn::ParamStore<T>& params() { return ps_; }
    const nn::ParamStore<T>& params() const { return ps_; }
    const DenoiserConfig& config() const { return cfg_; }

private:
    bool use_attn() const { return cfg_.mode == CondMode::attention; }

    DenoiserConfig cfg_;
    nn::ParamStore<T> ps_;
    std::vector<int> chans_;
    int tin_ = 0;
    int batch_ = 0;
    size_t null_off_ = 0;

    std::unique_ptr<nn::Embedding<T>> embed_;
    std::unique_ptr<nn::Linear<T>> tl1_, tl2_;
    nn::SiLU<T> tact_;
    std::vector<std::unique_ptr<detail::ResBlock<T>>> down_rb_, up_rb_;
    std::vector<std::unique_ptr<nn::CrossAttention<T>>> down_attn_, up_attn_;
    std::vector<std::unique_ptr<nn::Conv1d<T>>> down_conv_;
    std::unique_ptr<detail::ResBlock<T>> mid1_, mid2_;
    std::vector<std::unique_ptr<nn::ConvTranspose1d<T>>> up_conv_;
    std::unique_ptr<nn::Conv1d<T>> final_conv_;
    std::unique_ptr<nn::GroupNorm<T>> final_gn_;
    nn::SiLU<T> final_act_;
    std::unique_ptr<nn::Conv1d<T>> final_out_;

    std::vector<T> tok_, dtok_, tsin_, dtemb_, dx_, dcur_;
    std::vector<T> cat_[2], dlvl_[3];
    std::vector<const T*> skip_ptr_;
    std::vector<int> skip_len_;
    std::vector<uint8_t> drop_;
};

}  // namespace ooc::diff
