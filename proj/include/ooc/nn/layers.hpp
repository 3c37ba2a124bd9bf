#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ooc/kernels/kernels.hpp"
#include "ooc/nn/param_store.hpp"
#include "ooc/util/errors.hpp"
#include "ooc/util/rng.hpp"

// Layer zoo with explicit forward/backward passes.
//
// Layout convention: feature maps are channel-major matrices with C rows and
// B*L columns; sample b occupies the column range [b*L, (b+1)*L). Per-sample
// vectors (embeddings) are stored as (D rows, B columns). Layers own their
// output and cache buffers; pointers returned by forward() stay valid until
// the next forward() on the same layer.
namespace ooc::nn {

namespace detail {

template <class T>
void transpose(const T* src, int rows, int cols, int ld, T* dst) {
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) dst[static_cast<size_t>(j) * rows + i] = src[static_cast<size_t>(i) * ld + j];
}

template <class T>
T uniform_bound(Rng& rng, T bound) {
    return static_cast<T>(rng.uniform(-static_cast<double>(bound), static_cast<double>(bound)));
}

}  // namespace detail

// y = W x + b applied column-wise: x is (in, B), y is (out, B).
template <class T>
class Linear {
public:
    Linear(ParamStore<T>& ps, const std::string& name, int in, int out, bool zero_init = false)
        : ps_(&ps), in_(in), out_(out), zero_init_(zero_init) {
        w_ = ps.add(name + ".w", static_cast<size_t>(out) * in);
        b_ = ps.add(name + ".b", out);
    }

    void init(Rng& rng) {
        T* w = ps_->val(w_);
        T* b = ps_->val(b_);
        if (zero_init_) {
            std::fill(w, w + static_cast<size_t>(out_) * in_, T(0));
            std::fill(b, b + out_, T(0));
            return;
        }
        T bound = static_cast<T>(1.0 / std::sqrt(static_cast<double>(in_)));
        for (size_t i = 0; i < static_cast<size_t>(out_) * in_; ++i) w[i] = detail::uniform_bound(rng, bound);
        for (int i = 0; i < out_; ++i) b[i] = detail::uniform_bound(rng, bound);
    }

    const T* forward(const T* x, int batch) {
        batch_ = batch;
        xcache_.assign(x, x + static_cast<size_t>(in_) * batch);
        y_.resize(static_cast<size_t>(out_) * batch);
        kern::gemm<T>(out_, batch, in_, ps_->val(w_), in_, x, batch, y_.data(), batch, false);
        const T* b = ps_->val(b_);
        for (int i = 0; i < out_; ++i)
            for (int j = 0; j < batch; ++j) y_[static_cast<size_t>(i) * batch + j] += b[i];
        return y_.data();
    }

    const T* backward(const T* dy) {
        int batch = batch_;
        T* dw = ps_->grad(w_);
        T* db = ps_->grad(b_);
        scratch_.resize(std::max(static_cast<size_t>(batch) * in_, static_cast<size_t>(in_) * out_));
        // dW += dY X^T
        detail::transpose(xcache_.data(), in_, batch, batch, scratch_.data());
        kern::gemm<T>(out_, in_, batch, dy, batch, scratch_.data(), in_, dw, in_, true);
        for (int i = 0; i < out_; ++i) {
            T acc = T(0);
            for (int j = 0; j < batch; ++j) acc += dy[static_cast<size_t>(i) * batch + j];
            db[i] += acc;
        }
        // dX = W^T dY
        detail::transpose(ps_->val(w_), out_, in_, in_, scratch_.data());
        dx_.resize(static_cast<size_t>(in_) * batch);
        kern::gemm<T>(in_, batch, out_, scratch_.data(), out_, dy, batch, dx_.data(), batch, false);
        return dx_.data();
    }

    int in() const { return in_; }
    int out() const { return out_; }
    const T* last_out() const { return y_.data(); }

private:
    ParamStore<T>* ps_;
    int in_, out_, batch_ = 0;
    bool zero_init_;
    size_t w_, b_;
    std::vector<T> y_, dx_, xcache_, scratch_;
};

// Elementwise x*sigmoid(x).
template <class T>
class SiLU {
public:
    const T* forward(const T* x, size_t n) {
        xcache_.assign(x, x + n);
        y_.resize(n);
        kern::vsilu(x, y_.data(), n);
        return y_.data();
    }

    const T* backward(const T* dy) {
        dx_.resize(xcache_.size());
        kern::vsilu_grad(xcache_.data(), dy, dx_.data(), xcache_.size());
        return dx_.data();
    }

private:
    std::vector<T> y_, dx_, xcache_;
};

// 1-D convolution over (C, B*L) maps via im2col + GEMM. stride 1 keeps the
// length (odd kernel, symmetric zero padding); stride 2 halves it (kernel 3,
// pad 1, even L required).
template <class T>
class Conv1d {
public:
    Conv1d(ParamStore<T>& ps, const std::string& name, int cin, int cout, int ksize, int stride,
           bool zero_init = false)
        : ps_(&ps), cin_(cin), cout_(cout), k_(ksize), stride_(stride), zero_init_(zero_init) {
        if (stride == 1 && ksize % 2 == 0) throw ContractError("stride-1 conv needs odd kernel");
        if (stride != 1 && stride != 2) throw ContractError("conv stride must be 1 or 2");
        pad_ = (ksize - 1) / 2;
        w_ = ps.add(name + ".w", static_cast<size_t>(cout) * cin * ksize);
        b_ = ps.add(name + ".b", cout);
    }

    void init(Rng& rng) {
        T* w = ps_->val(w_);
        T* b = ps_->val(b_);
        size_t wn = static_cast<size_t>(cout_) * cin_ * k_;
        if (zero_init_) {
            std::fill(w, w + wn, T(0));
            std::fill(b, b + cout_, T(0));
            return;
        }
        T bound = static_cast<T>(1.0 / std::sqrt(static_cast<double>(cin_) * k_));
        for (size_t i = 0; i < wn; ++i) w[i] = detail::uniform_bound(rng, bound);
        for (int i = 0; i < cout_; ++i) b[i] = detail::uniform_bound(rng, bound);
    }

    int out_len(int l) const { return stride_ == 1 ? l : l / 2; }

    const T* forward(const T* x, int batch, int l) {
        if (stride_ == 2 && l % 2 != 0) throw ContractError("stride-2 conv needs even length");
        batch_ = batch;
        l_ = l;
        lo_ = out_len(l);
        int n = batch * lo_;
        int rows = cin_ * k_;
        xcache_.assign(x, x + static_cast<size_t>(cin_) * batch * l);
        col_.resize(static_cast<size_t>(rows) * n);
        im2col(x, col_.data());
        y_.resize(static_cast<size_t>(cout_) * n);
        kern::gemm<T>(cout_, n, rows, ps_->val(w_), rows, col_.data(), n, y_.data(), n, false);
        const T* b = ps_->val(b_);
        for (int c = 0; c < cout_; ++c)
            for (int j = 0; j < n; ++j) y_[static_cast<size_t>(c) * n + j] += b[c];
        return y_.data();
    }

    const T* backward(const T* dy) {
        int n = batch_ * lo_;
        int rows = cin_ * k_;
        T* dw = ps_->grad(w_);
        T* db = ps_->grad(b_);
        for (int c = 0; c < cout_; ++c) {
            T acc = T(0);
            for (int j = 0; j < n; ++j) acc += dy[static_cast<size_t>(c) * n + j];
            db[c] += acc;
        }
        // dW += dY col^T
        scratch_.resize(static_cast<size_t>(n) * rows);
        detail::transpose(col_.data(), rows, n, n, scratch_.data());
        kern::gemm<T>(cout_, rows, n, dy, n, scratch_.data(), rows, dw, rows, true);
        // dcol = W^T dY, then scatter back
        scratch2_.resize(static_cast<size_t>(rows) * std::max(n, cout_));
        detail::transpose(ps_->val(w_), cout_, rows, rows, scratch2_.data());
        dcol_.resize(static_cast<size_t>(rows) * n);
        kern::gemm<T>(rows, n, cout_, scratch2_.data(), cout_, dy, n, dcol_.data(), n, false);
        dx_.assign(static_cast<size_t>(cin_) * batch_ * l_, T(0));
        col2im_add(dcol_.data(), dx_.data());
        return dx_.data();
    }

    int cin() const { return cin_; }
    int cout() const { return cout_; }

private:
    void im2col(const T* x, T* col) const {
        int n = batch_ * lo_;
        for (int c = 0; c < cin_; ++c) {
            const T* xrow = x + static_cast<size_t>(c) * batch_ * l_;
            for (int kk = 0; kk < k_; ++kk) {
                T* crow = col + (static_cast<size_t>(c) * k_ + kk) * n;
                for (int b = 0; b < batch_; ++b) {
                    for (int j = 0; j < lo_; ++j) {
                        int src = j * stride_ - pad_ + kk;
                        crow[static_cast<size_t>(b) * lo_ + j] =
                            (src >= 0 && src < l_) ? xrow[static_cast<size_t>(b) * l_ + src] : T(0);
                    }
                }
            }
        }
    }

    void col2im_add(const T* dcol, T* dx) const {
        int n = batch_ * lo_;
        for (int c = 0; c < cin_; ++c) {
            T* xrow = dx + static_cast<size_t>(c) * batch_ * l_;
            for (int kk = 0; kk < k_; ++kk) {
                const T* crow = dcol + (static_cast<size_t>(c) * k_ + kk) * n;
                for (int b = 0; b < batch_; ++b) {
                    for (int j = 0; j < lo_; ++j) {
                        int src = j * stride_ - pad_ + kk;
                        if (src >= 0 && src < l_)
                            xrow[static_cast<size_t>(b) * l_ + src] += crow[static_cast<size_t>(b) * lo_ + j];
                    }
                }
            }
        }
    }

    ParamStore<T>* ps_;
    int cin_, cout_, k_, stride_, pad_;
    bool zero_init_;
    int batch_ = 0, l_ = 0, lo_ = 0;
    size_t w_, b_;
    std::vector<T> y_, dx_, col_, dcol_, xcache_, scratch_, scratch2_;
};

// Length-doubling transposed convolution (kernel 4, stride 2, pad 1), the
// upsampling mirror of the stride-2 Conv1d. Weight is (cin, cout*K).
template <class T>
class ConvTranspose1d {
public:
    ConvTranspose1d(ParamStore<T>& ps, const std::string& name, int cin, int cout)
        : ps_(&ps), cin_(cin), cout_(cout) {
        w_ = ps.add(name + ".w", static_cast<size_t>(cin) * cout * kK);
        b_ = ps.add(name + ".b", cout);
    }

    void init(Rng& rng) {
        T* w = ps_->val(w_);
        T* b = ps_->val(b_);
        T bound = static_cast<T>(1.0 / std::sqrt(static_cast<double>(cin_) * kK));
        for (size_t i = 0; i < static_cast<size_t>(cin_) * cout_ * kK; ++i)
            w[i] = detail::uniform_bound(rng, bound);
        for (int i = 0; i < cout_; ++i) b[i] = detail::uniform_bound(rng, bound);
    }

    const T* forward(const T* x, int batch, int l) {
        batch_ = batch;
        l_ = l;
        lo_ = 2 * l;
        int n = batch * l;
        int rows = cout_ * kK;
        xcache_.assign(x, x + static_cast<size_t>(cin_) * n);
        // tmp = W^T x, with W viewed as (cin, cout*K)
        scratch_.resize(static_cast<size_t>(rows) * std::max(n, cin_));
        detail::transpose(ps_->val(w_), cin_, rows, rows, scratch_.data());
        tmp_.resize(static_cast<size_t>(rows) * n);
        kern::gemm<T>(rows, n, cin_, scratch_.data(), cin_, x, n, tmp_.data(), n, false);
        y_.assign(static_cast<size_t>(cout_) * batch * lo_, T(0));
        const T* b = ps_->val(b_);
        for (int co = 0; co < cout_; ++co) {
            T* yrow = y_.data() + static_cast<size_t>(co) * batch * lo_;
            for (int kk = 0; kk < kK; ++kk) {
                const T* trow = tmp_.data() + (static_cast<size_t>(co) * kK + kk) * n;
                for (int bi = 0; bi < batch; ++bi)
                    for (int j = 0; j < l; ++j) {
                        int dst = 2 * j - 1 + kk;
                        if (dst >= 0 && dst < lo_)
                            yrow[static_cast<size_t>(bi) * lo_ + dst] += trow[static_cast<size_t>(bi) * l + j];
                    }
            }
            for (int j = 0; j < batch * lo_; ++j) yrow[j] += b[co];
        }
        return y_.data();
    }

    const T* backward(const T* dy) {
        int n = batch_ * l_;
        int rows = cout_ * kK;
        T* dw = ps_->grad(w_);
        T* db = ps_->grad(b_);
        for (int co = 0; co < cout_; ++co) {
            const T* dyrow = dy + static_cast<size_t>(co) * batch_ * lo_;
            T acc = T(0);
            for (int j = 0; j < batch_ * lo_; ++j) acc += dyrow[j];
            db[co] += acc;
        }
        // dtmp = gather of dy at the scatter positions
        dtmp_.resize(static_cast<size_t>(rows) * n);
        for (int co = 0; co < cout_; ++co) {
            const T* dyrow = dy + static_cast<size_t>(co) * batch_ * lo_;
            for (int kk = 0; kk < kK; ++kk) {
                T* trow = dtmp_.data() + (static_cast<size_t>(co) * kK + kk) * n;
                for (int bi = 0; bi < batch_; ++bi)
                    for (int j = 0; j < l_; ++j) {
                        int dst = 2 * j - 1 + kk;
                        trow[static_cast<size_t>(bi) * l_ + j] =
                            (dst >= 0 && dst < lo_) ? dyrow[static_cast<size_t>(bi) * lo_ + dst] : T(0);
                    }
            }
        }
        // dW += X dtmp^T
        scratch_.resize(static_cast<size_t>(n) * rows);
        detail::transpose(dtmp_.data(), rows, n, n, scratch_.data());
        kern::gemm<T>(cin_, rows, n, xcache_.data(), n, scratch_.data(), rows, dw, rows, true);
        // dX = W dtmp
        dx_.resize(static_cast<size_t>(cin_) * n);
        kern::gemm<T>(cin_, n, rows, ps_->val(w_), rows, dtmp_.data(), n, dx_.data(), n, false);
        return dx_.data();
    }

private:
    static constexpr int kK = 4;
    ParamStore<T>* ps_;
    int cin_, cout_;
    int batch_ = 0, l_ = 0, lo_ = 0;
    size_t w_, b_;
    std::vector<T> y_, dx_, tmp_, dtmp_, xcache_, scratch_;
};

// Group normalization over (channels-in-group x L) per sample, with per-channel
// affine parameters.
template <class T>
class GroupNorm {
public:
    GroupNorm(ParamStore<T>& ps, const std::string& name, int channels, int groups)
        : ps_(&ps), c_(channels), g_(groups) {
        if (channels % groups != 0) throw ContractError("channels not divisible by groups");
        gamma_ = ps.add(name + ".gamma", channels);
        beta_ = ps.add(name + ".beta", channels);
    }

    void init(Rng&) {
        std::fill(ps_->val(gamma_), ps_->val(gamma_) + c_, T(1));
        std::fill(ps_->val(beta_), ps_->val(beta_) + c_, T(0));
    }

    const T* forward(const T* x, int batch, int l) {
        batch_ = batch;
        l_ = l;
        int n = batch * l;
        int cg = c_ / g_;
        xhat_.resize(static_cast<size_t>(c_) * n);
        inv_std_.resize(static_cast<size_t>(batch) * g_);
        y_.resize(static_cast<size_t>(c_) * n);
        const T* gamma = ps_->val(gamma_);
        const T* beta = ps_->val(beta_);
        for (int b = 0; b < batch; ++b) {
            for (int gi = 0; gi < g_; ++gi) {
                T sum = T(0), sumsq = T(0);
                for (int c = gi * cg; c < (gi + 1) * cg; ++c) {
                    const T* row = x + static_cast<size_t>(c) * n + static_cast<size_t>(b) * l;
                    for (int j = 0; j < l; ++j) {
                        sum += row[j];
                        sumsq += row[j] * row[j];
                    }
                }
                T cnt = static_cast<T>(cg * l);
                T mean = sum / cnt;
                T var = sumsq / cnt - mean * mean;
                if (var < T(0)) var = T(0);
                T istd = T(1) / std::sqrt(var + static_cast<T>(1e-5));
                inv_std_[static_cast<size_t>(b) * g_ + gi] = istd;
                for (int c = gi * cg; c < (gi + 1) * cg; ++c) {
                    const T* row = x + static_cast<size_t>(c) * n + static_cast<size_t>(b) * l;
                    T* hrow = xhat_.data() + static_cast<size_t>(c) * n + static_cast<size_t>(b) * l;
                    T* yrow = y_.data() + static_cast<size_t>(c) * n + static_cast<size_t>(b) * l;
                    for (int j = 0; j < l; ++j) {
                        hrow[j] = (row[j] - mean) * istd;
                        yrow[j] = gamma[c] * hrow[j] + beta[c];
                    }
                }
            }
        }
        return y_.data();
    }

    const T* backward(const T* dy) {
        int n = batch_ * l_;
        int cg = c_ / g_;
        const T* gamma = ps_->val(gamma_);
        T* dgamma = ps_->grad(gamma_);
        T* dbeta = ps_->grad(beta_);
        dx_.resize(static_cast<size_t>(c_) * n);
        for (int c = 0; c < c_; ++c) {
            const T* dyrow = dy + static_cast<size_t>(c) * n;
            const T* hrow = xhat_.data() + static_cast<size_t>(c) * n;
            T dg = T(0), db = T(0);
            for (int j = 0; j < n; ++j) {
                dg += dyrow[j] * hrow[j];
                db += dyrow[j];
            }
            dgamma[c] += dg;
            dbeta[c] += db;
        }
        for (int b = 0; b < batch_; ++b) {
            for (int gi = 0; gi < g_; ++gi) {
                T m1 = T(0), m2 = T(0);
                for (int c = gi * cg; c < (gi + 1) * cg; ++c) {
                    const T* dyrow = dy + static_cast<size_t>(c) * n + static_cast<size_t>(b) * l_;
                    const T* hrow = xhat_.data() + static_cast<size_t>(c) * n + static_cast<size_t>(b) * l_;
                    for (int j = 0; j < l_; ++j) {
                        T t = dyrow[j] * gamma[c];
                        m1 += t;
                        m2 += t * hrow[j];
                    }
                }
                T cnt = static_cast<T>(cg * l_);
                m1 /= cnt;
                m2 /= cnt;
                T istd = inv_std_[static_cast<size_t>(b) * g_ + gi];
                for (int c = gi * cg; c < (gi + 1) * cg; ++c) {
                    const T* dyrow = dy + static_cast<size_t>(c) * n + static_cast<size_t>(b) * l_;
                    const T* hrow = xhat_.data() + static_cast<size_t>(c) * n + static_cast<size_t>(b) * l_;
                    T* dxrow = dx_.data() + static_cast<size_t>(c) * n + static_cast<size_t>(b) * l_;
                    for (int j = 0; j < l_; ++j)
                        dxrow[j] = istd * (dyrow[j] * gamma[c] - m1 - hrow[j] * m2);
                }
            }
        }
        return dx_.data();
    }

private:
    ParamStore<T>* ps_;
    int c_, g_;
    int batch_ = 0, l_ = 0;
    size_t gamma_, beta_;
    std::vector<T> y_, dx_, xhat_, inv_std_;
};

// Classic transformer-style timestep features: first half sines, second half
// cosines over geometrically spaced frequencies. out is (dim, batch).
template <class T>
void sinusoidal_embedding(const int* t, int batch, int dim, T* out) {
    int half = dim / 2;
    if (half < 1) throw ContractError("embedding dim must be >= 2");
    for (int i = 0; i < half; ++i) {
        double f = (half > 1) ? std::exp(-std::log(10000.0) * i / (half - 1)) : 1.0;
        for (int b = 0; b < batch; ++b) {
            double arg = static_cast<double>(t[b]) * f;
            out[static_cast<size_t>(i) * batch + b] = static_cast<T>(std::sin(arg));
            out[static_cast<size_t>(half + i) * batch + b] = static_cast<T>(std::cos(arg));
        }
    }
    if (dim % 2 == 1)
        for (int b = 0; b < batch; ++b) out[static_cast<size_t>(dim - 1) * batch + b] = T(0);
}

}  // namespace ooc::nn
