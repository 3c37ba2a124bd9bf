#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ooc/nn/layers.hpp"

namespace ooc::nn {

// Token embedding table. forward gathers rows into an (E, batch*slots) matrix;
// backward scatters gradients back onto the gathered rows.
template <class T>
class Embedding {
public:
    Embedding(ParamStore<T>& ps, const std::string& name, int vocab, int dim)
        : ps_(&ps), vocab_(vocab), dim_(dim) {
        table_ = ps.add(name + ".table", static_cast<size_t>(vocab) * dim);
    }

    void init(Rng& rng) {
        rng.fill_normal(ps_->val(table_), static_cast<size_t>(vocab_) * dim_,
                        1.0 / std::sqrt(static_cast<double>(dim_)));
    }

    const T* forward(const int* idx, int count) {
        idx_.assign(idx, idx + count);
        y_.resize(static_cast<size_t>(dim_) * count);
        const T* tab = ps_->val(table_);
        for (int j = 0; j < count; ++j) {
            if (idx[j] < 0 || idx[j] >= vocab_) throw ContractError("embedding index out of range");
            for (int i = 0; i < dim_; ++i)
                y_[static_cast<size_t>(i) * count + j] = tab[static_cast<size_t>(idx[j]) * dim_ + i];
        }
        return y_.data();
    }

    void backward(const T* dy) {
        T* dtab = ps_->grad(table_);
        int count = static_cast<int>(idx_.size());
        for (int j = 0; j < count; ++j)
            for (int i = 0; i < dim_; ++i)
                dtab[static_cast<size_t>(idx_[j]) * dim_ + i] += dy[static_cast<size_t>(i) * count + j];
    }

    int dim() const { return dim_; }
    int vocab() const { return vocab_; }

private:
    ParamStore<T>* ps_;
    int vocab_, dim_;
    size_t table_;
    std::vector<int> idx_;
    std::vector<T> y_;
};

// Single-head cross-attention from feature positions (queries) to a small set
// of condition tokens (keys/values), with a residual connection and zero-
// initialized output projection so an untrained block is the identity.
template <class T>
class CrossAttention {
public:
    CrossAttention(ParamStore<T>& ps, const std::string& name, int channels, int token_dim)
        : c_(channels),
          q_proj_(ps, name + ".q", channels, channels),
          k_proj_(ps, name + ".k", token_dim, channels),
          v_proj_(ps, name + ".v", token_dim, channels),
          out_proj_(ps, name + ".out", channels, channels, /*zero_init=*/true) {}

    void init(Rng& rng) {
        q_proj_.init(rng);
        k_proj_.init(rng);
        v_proj_.init(rng);
        out_proj_.init(rng);
    }

    // x: (C, B*L); tokens: (E, B*n). Returns (C, B*L).
    const T* forward(const T* x, const T* tokens, int batch, int l, int ntok) {
        batch_ = batch;
        l_ = l;
        n_ = ntok;
        const T* q = q_proj_.forward(x, batch * l);
        const T* k = k_proj_.forward(tokens, batch * ntok);
        const T* v = v_proj_.forward(tokens, batch * ntok);
        T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(c_)));

        p_.resize(static_cast<size_t>(batch) * l * ntok);
        o_.resize(static_cast<size_t>(c_) * batch * l);
        std::vector<T> qt(static_cast<size_t>(l) * c_), s(static_cast<size_t>(l) * ntok),
            pt(static_cast<size_t>(ntok) * l);
        for (int b = 0; b < batch; ++b) {
            // Q^T slice for this sample: (L, C)
            for (int ci = 0; ci < c_; ++ci)
                for (int j = 0; j < l; ++j)
                    qt[static_cast<size_t>(j) * c_ + ci] = q[static_cast<size_t>(ci) * batch * l + b * l + j];
            // K slice: columns [b*n, (b+1)*n) of (C, B*n); gather to (C, n)
            std::vector<T> kb(static_cast<size_t>(c_) * ntok), vb(static_cast<size_t>(c_) * ntok);
            for (int ci = 0; ci < c_; ++ci)
                for (int j = 0; j < ntok; ++j) {
                    kb[static_cast<size_t>(ci) * ntok + j] = k[static_cast<size_t>(ci) * batch * ntok + b * ntok + j];
                    vb[static_cast<size_t>(ci) * ntok + j] = v[static_cast<size_t>(ci) * batch * ntok + b * ntok + j];
                }
            kern::gemm<T>(l, ntok, c_, qt.data(), c_, kb.data(), ntok, s.data(), ntok, false);
            T* pb = p_.data() + static_cast<size_t>(b) * l * ntok;
            for (int j = 0; j < l; ++j) {
                T* row = s.data() + static_cast<size_t>(j) * ntok;
                T mx = row[0] * scale;
                for (int q2 = 1; q2 < ntok; ++q2) mx = std::max(mx, row[q2] * scale);
                T sum = T(0);
                for (int q2 = 0; q2 < ntok; ++q2) {
                    T e = std::exp(row[q2] * scale - mx);
                    pb[static_cast<size_t>(j) * ntok + q2] = e;
                    sum += e;
                }
                for (int q2 = 0; q2 < ntok; ++q2) pb[static_cast<size_t>(j) * ntok + q2] /= sum;
            }
            // O_b = V_b P_b^T : (C, n) x (n, L)
            detail::transpose(pb, l, ntok, ntok, pt.data());
            std::vector<T> ob(static_cast<size_t>(c_) * l);
            kern::gemm<T>(c_, l, ntok, vb.data(), ntok, pt.data(), l, ob.data(), l, false);
            for (int ci = 0; ci < c_; ++ci)
                for (int j = 0; j < l; ++j)
                    o_[static_cast<size_t>(ci) * batch * l + b * l + j] = ob[static_cast<size_t>(ci) * l + j];
        }
        const T* proj = out_proj_.forward(o_.data(), batch * l);
        y_.resize(static_cast<size_t>(c_) * batch * l);
        kern::vadd(proj, x, y_.data(), y_.size());
        return y_.data();
    }

    // Returns dx; gradients w.r.t. the condition tokens accumulate in
    // d_tokens() (E, B*n), valid until the next forward.
    const T* backward(const T* dy) {
        int bl = batch_ * l_;
        const T* do_ = out_proj_.backward(dy);
        T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(c_)));

        std::vector<T> dq(static_cast<size_t>(c_) * bl);
        std::vector<T> dk(static_cast<size_t>(c_) * batch_ * n_), dv(static_cast<size_t>(c_) * batch_ * n_);
        std::vector<T> dob(static_cast<size_t>(c_) * l_), dot(static_cast<size_t>(l_) * c_),
            dp(static_cast<size_t>(l_) * n_), ds(static_cast<size_t>(l_) * n_),
            dst(static_cast<size_t>(n_) * l_);
        const T* q = q_proj_.last_out();
        const T* k = k_proj_.last_out();
        const T* v = v_proj_.last_out();
        for (int b = 0; b < batch_; ++b) {
            const T* pb = p_.data() + static_cast<size_t>(b) * l_ * n_;
            std::vector<T> kb(static_cast<size_t>(c_) * n_), vb(static_cast<size_t>(c_) * n_);
            for (int ci = 0; ci < c_; ++ci)
                for (int j = 0; j < n_; ++j) {
                    kb[static_cast<size_t>(ci) * n_ + j] = k[static_cast<size_t>(ci) * batch_ * n_ + b * n_ + j];
                    vb[static_cast<size_t>(ci) * n_ + j] = v[static_cast<size_t>(ci) * batch_ * n_ + b * n_ + j];
                }
            for (int ci = 0; ci < c_; ++ci)
                for (int j = 0; j < l_; ++j)
                    dob[static_cast<size_t>(ci) * l_ + j] = do_[static_cast<size_t>(ci) * bl + b * l_ + j];
            // dV_b = dO_b P_b : (C,L)(L,n)
            std::vector<T> dvb(static_cast<size_t>(c_) * n_);
            kern::gemm<T>(c_, n_, l_, dob.data(), l_, pb, n_, dvb.data(), n_, false);
            // dP_b = dO_b^T V_b : (L,C)(C,n)
            detail::transpose(dob.data(), c_, l_, l_, dot.data());
            kern::gemm<T>(l_, n_, c_, dot.data(), c_, vb.data(), n_, dp.data(), n_, false);
            // softmax backward rows, then undo the 1/sqrt(C) scale
            for (int j = 0; j < l_; ++j) {
                T dot_pp = T(0);
                for (int q2 = 0; q2 < n_; ++q2)
                    dot_pp += dp[static_cast<size_t>(j) * n_ + q2] * pb[static_cast<size_t>(j) * n_ + q2];
                for (int q2 = 0; q2 < n_; ++q2)
                    ds[static_cast<size_t>(j) * n_ + q2] =
                        pb[static_cast<size_t>(j) * n_ + q2] *
                        (dp[static_cast<size_t>(j) * n_ + q2] - dot_pp) * scale;
            }
            // dQ_b = K_b dS^T : (C,n)(n,L)
            detail::transpose(ds.data(), l_, n_, n_, dst.data());
            std::vector<T> dqb(static_cast<size_t>(c_) * l_);
            kern::gemm<T>(c_, l_, n_, kb.data(), n_, dst.data(), l_, dqb.data(), l_, false);
            for (int ci = 0; ci < c_; ++ci)
                for (int j = 0; j < l_; ++j)
                    dq[static_cast<size_t>(ci) * bl + b * l_ + j] = dqb[static_cast<size_t>(ci) * l_ + j];
            // dK_b = Q_b dS : (C,L)(L,n)
            std::vector<T> qb(static_cast<size_t>(c_) * l_);
            for (int ci = 0; ci < c_; ++ci)
                for (int j = 0; j < l_; ++j)
                    qb[static_cast<size_t>(ci) * l_ + j] = q[static_cast<size_t>(ci) * bl + b * l_ + j];
            std::vector<T> dkb(static_cast<size_t>(c_) * n_);
            kern::gemm<T>(c_, n_, l_, qb.data(), l_, ds.data(), n_, dkb.data(), n_, false);
            for (int ci = 0; ci < c_; ++ci)
                for (int j = 0; j < n_; ++j) {
                    dk[static_cast<size_t>(ci) * batch_ * n_ + b * n_ + j] = dkb[static_cast<size_t>(ci) * n_ + j];
                    dv[static_cast<size_t>(ci) * batch_ * n_ + b * n_ + j] = dvb[static_cast<size_t>(ci) * n_ + j];
                }
        }
        const T* dxq = q_proj_.backward(dq.data());
        const T* dtk = k_proj_.backward(dk.data());
        const T* dtv = v_proj_.backward(dv.data());
        dtok_.resize(static_cast<size_t>(k_proj_.in()) * batch_ * n_);
        kern::vadd(dtk, dtv, dtok_.data(), dtok_.size());
        dx_.resize(static_cast<size_t>(c_) * bl);
        kern::vadd(dxq, dy, dx_.data(), dx_.size());
        return dx_.data();
    }

    const T* d_tokens() const { return dtok_.data(); }

private:
    int c_;
    int batch_ = 0, l_ = 0, n_ = 0;
    Linear<T> q_proj_, k_proj_, v_proj_;
    Linear<T> out_proj_;
    std::vector<T> y_, dx_, o_, p_, dtok_;
};

}  // namespace ooc::nn
