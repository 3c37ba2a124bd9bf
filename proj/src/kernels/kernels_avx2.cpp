#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "kernel_table.hpp"

// AVX2+FMA kernels. This is the only translation unit built with -mavx2 -mfma;
// nothing here runs unless the dispatcher selected the avx2 table at startup.
namespace ooc::kern {
namespace {

constexpr int MR = 6;   // rows per A micro-panel
constexpr int NR = 16;  // columns per B micro-panel (two 8-lane vectors)

// Panels are stored k-major and zero-padded to full MR/NR so the microkernel
// never branches on edges; edge tiles are fixed up when writing back to C.
void pack_a(int m, int k, const float* a, int lda, float* dst) {
    int panels = (m + MR - 1) / MR;
    for (int p = 0; p < panels; ++p) {
        int i0 = p * MR;
        int mr = std::min(MR, m - i0);
        float* d = dst + static_cast<size_t>(p) * k * MR;
        for (int kk = 0; kk < k; ++kk) {
            for (int r = 0; r < mr; ++r) d[kk * MR + r] = a[static_cast<size_t>(i0 + r) * lda + kk];
            for (int r = mr; r < MR; ++r) d[kk * MR + r] = 0.0f;
        }
    }
}

void pack_b(int k, int n, const float* b, int ldb, float* dst) {
    int panels = (n + NR - 1) / NR;
    for (int p = 0; p < panels; ++p) {
        int j0 = p * NR;
        int nr = std::min(NR, n - j0);
        float* d = dst + static_cast<size_t>(p) * k * NR;
        for (int kk = 0; kk < k; ++kk) {
            const float* src = b + static_cast<size_t>(kk) * ldb + j0;
            float* row = d + static_cast<size_t>(kk) * NR;
            for (int c = 0; c < nr; ++c) row[c] = src[c];
            for (int c = nr; c < NR; ++c) row[c] = 0.0f;
        }
    }
}

// 6x16 register-blocked microkernel: 12 accumulators + 2 B vectors + 1
// broadcast stay within the 16 ymm registers.
void kernel_6x16(int k, const float* ap, const float* bp, float* buf) {
    __m256 c00 = _mm256_setzero_ps(), c01 = _mm256_setzero_ps();
    __m256 c10 = _mm256_setzero_ps(), c11 = _mm256_setzero_ps();
    __m256 c20 = _mm256_setzero_ps(), c21 = _mm256_setzero_ps();
    __m256 c30 = _mm256_setzero_ps(), c31 = _mm256_setzero_ps();
    __m256 c40 = _mm256_setzero_ps(), c41 = _mm256_setzero_ps();
    __m256 c50 = _mm256_setzero_ps(), c51 = _mm256_setzero_ps();
    for (int p = 0; p < k; ++p) {
        __m256 b0 = _mm256_loadu_ps(bp + p * NR);
        __m256 b1 = _mm256_loadu_ps(bp + p * NR + 8);
        __m256 a;
        a = _mm256_broadcast_ss(ap + p * MR + 0);
        c00 = _mm256_fmadd_ps(a, b0, c00);
        c01 = _mm256_fmadd_ps(a, b1, c01);
        a = _mm256_broadcast_ss(ap + p * MR + 1);
        c10 = _mm256_fmadd_ps(a, b0, c10);
        c11 = _mm256_fmadd_ps(a, b1, c11);
        a = _mm256_broadcast_ss(ap + p * MR + 2);
        c20 = _mm256_fmadd_ps(a, b0, c20);
        c21 = _mm256_fmadd_ps(a, b1, c21);
        a = _mm256_broadcast_ss(ap + p * MR + 3);
        c30 = _mm256_fmadd_ps(a, b0, c30);
        c31 = _mm256_fmadd_ps(a, b1, c31);
        a = _mm256_broadcast_ss(ap + p * MR + 4);
        c40 = _mm256_fmadd_ps(a, b0, c40);
        c41 = _mm256_fmadd_ps(a, b1, c41);
        a = _mm256_broadcast_ss(ap + p * MR + 5);
        c50 = _mm256_fmadd_ps(a, b0, c50);
        c51 = _mm256_fmadd_ps(a, b1, c51);
    }
    _mm256_storeu_ps(buf + 0 * NR, c00);
    _mm256_storeu_ps(buf + 0 * NR + 8, c01);
    _mm256_storeu_ps(buf + 1 * NR, c10);
    _mm256_storeu_ps(buf + 1 * NR + 8, c11);
    _mm256_storeu_ps(buf + 2 * NR, c20);
    _mm256_storeu_ps(buf + 2 * NR + 8, c21);
    _mm256_storeu_ps(buf + 3 * NR, c30);
    _mm256_storeu_ps(buf + 3 * NR + 8, c31);
    _mm256_storeu_ps(buf + 4 * NR, c40);
    _mm256_storeu_ps(buf + 4 * NR + 8, c41);
    _mm256_storeu_ps(buf + 5 * NR, c50);
    _mm256_storeu_ps(buf + 5 * NR + 8, c51);
}

void sgemm_avx2(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
                int ldc, bool accumulate) {
    if (m <= 0 || n <= 0) return;
    if (k <= 0) {
        if (!accumulate)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) c[static_cast<size_t>(i) * ldc + j] = 0.0f;
        return;
    }
    thread_local std::vector<float> apack, bpack;
    int mp = (m + MR - 1) / MR;
    int np = (n + NR - 1) / NR;
    apack.resize(static_cast<size_t>(mp) * k * MR);
    bpack.resize(static_cast<size_t>(np) * k * NR);
    pack_a(m, k, a, lda, apack.data());
    pack_b(k, n, b, ldb, bpack.data());

    alignas(32) float buf[MR * NR];
    for (int pi = 0; pi < mp; ++pi) {
        int i0 = pi * MR;
        int mr = std::min(MR, m - i0);
        const float* ap = apack.data() + static_cast<size_t>(pi) * k * MR;
        for (int pj = 0; pj < np; ++pj) {
            int j0 = pj * NR;
            int nr = std::min(NR, n - j0);
            kernel_6x16(k, ap, bpack.data() + static_cast<size_t>(pj) * k * NR, buf);
            for (int r = 0; r < mr; ++r) {
                float* crow = c + static_cast<size_t>(i0 + r) * ldc + j0;
                const float* brow = buf + r * NR;
                if (accumulate)
                    for (int q = 0; q < nr; ++q) crow[q] += brow[q];
                else
                    for (int q = 0; q < nr; ++q) crow[q] = brow[q];
            }
        }
    }
}

// Polynomial exp on 8 lanes (Cephes-style range reduction). Max relative
// error ~2e-7 over the clamped range, which the equivalence tests cover.
inline __m256 exp256(__m256 x) {
    const __m256 hi = _mm256_set1_ps(88.3762626647949f);
    const __m256 lo = _mm256_set1_ps(-88.3762626647949f);
    const __m256 log2e = _mm256_set1_ps(1.44269504088896341f);
    const __m256 c1 = _mm256_set1_ps(0.693359375f);
    const __m256 c2 = _mm256_set1_ps(-2.12194440e-4f);
    const __m256 one = _mm256_set1_ps(1.0f);
    x = _mm256_min_ps(_mm256_max_ps(x, lo), hi);
    __m256 fx = _mm256_fmadd_ps(x, log2e, _mm256_set1_ps(0.5f));
    fx = _mm256_floor_ps(fx);
    x = _mm256_fnmadd_ps(fx, c1, x);
    x = _mm256_fnmadd_ps(fx, c2, x);
    __m256 z = _mm256_mul_ps(x, x);
    __m256 y = _mm256_set1_ps(1.9875691500e-4f);
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.3981999507e-3f));
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(8.3334519073e-3f));
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(4.1665795894e-2f));
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.6666665459e-1f));
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(5.0000001201e-1f));
    y = _mm256_fmadd_ps(y, z, x);
    y = _mm256_add_ps(y, one);
    __m256i k = _mm256_cvtps_epi32(fx);
    k = _mm256_add_epi32(k, _mm256_set1_epi32(127));
    k = _mm256_slli_epi32(k, 23);
    return _mm256_mul_ps(y, _mm256_castsi256_ps(k));
}

inline __m256 sigmoid256(__m256 x) {
    __m256 e = exp256(_mm256_sub_ps(_mm256_setzero_ps(), x));
    return _mm256_div_ps(_mm256_set1_ps(1.0f), _mm256_add_ps(_mm256_set1_ps(1.0f), e));
}

float hsum(__m256 v) {
    __m128 s = _mm_add_ps(_mm256_castps256_ps128(v), _mm256_extractf128_ps(v, 1));
    s = _mm_add_ps(s, _mm_movehl_ps(s, s));
    s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 1));
    return _mm_cvtss_f32(s);
}

void vadd_avx2(const float* a, const float* b, float* out, size_t n) {
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void vmul_avx2(const float* a, const float* b, float* out, size_t n) {
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void vaxpy_avx2(float alpha, const float* x, float* y, size_t n) {
    __m256 va = _mm256_set1_ps(alpha);
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void vscale_avx2(float alpha, float* x, size_t n) {
    __m256 va = _mm256_set1_ps(alpha);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

void vsilu_avx2(const float* x, float* out, size_t n) {
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_loadu_ps(x + i);
        _mm256_storeu_ps(out + i, _mm256_mul_ps(v, sigmoid256(v)));
    }
    for (; i < n; ++i) {
        float s = 1.0f / (1.0f + std::exp(-x[i]));
        out[i] = x[i] * s;
    }
}

void vsilu_grad_avx2(const float* x, const float* dy, float* dx, size_t n) {
    const __m256 one = _mm256_set1_ps(1.0f);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_loadu_ps(x + i);
        __m256 s = sigmoid256(v);
        // silu'(x) = s*(1 + x*(1-s))
        __m256 g = _mm256_mul_ps(s, _mm256_fmadd_ps(v, _mm256_sub_ps(one, s), one));
        _mm256_storeu_ps(dx + i, _mm256_mul_ps(_mm256_loadu_ps(dy + i), g));
    }
    for (; i < n; ++i) {
        float s = 1.0f / (1.0f + std::exp(-x[i]));
        dx[i] = dy[i] * (s * (1.0f + x[i] * (1.0f - s)));
    }
}

float vdot_avx2(const float* a, const float* b, size_t n) {
    __m256 acc = _mm256_setzero_ps();
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
    float r = hsum(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

float vsum_avx2(const float* a, size_t n) {
    __m256 acc = _mm256_setzero_ps();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(a + i));
    float r = hsum(acc);
    for (; i < n; ++i) r += a[i];
    return r;
}

float vsumsq_avx2(const float* a, size_t n) {
    __m256 acc = _mm256_setzero_ps();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_loadu_ps(a + i);
        acc = _mm256_fmadd_ps(v, v, acc);
    }
    float r = hsum(acc);
    for (; i < n; ++i) r += a[i] * a[i];
    return r;
}

void adam_step_avx2(float* p, float* m, float* v, const float* g, size_t n,
                    float lr, float beta1, float beta2, float eps, float bc1, float bc2) {
    const __m256 vb1 = _mm256_set1_ps(beta1), vib1 = _mm256_set1_ps(1.0f - beta1);
    const __m256 vb2 = _mm256_set1_ps(beta2), vib2 = _mm256_set1_ps(1.0f - beta2);
    const __m256 vlr = _mm256_set1_ps(lr), veps = _mm256_set1_ps(eps);
    const __m256 ibc1 = _mm256_set1_ps(1.0f / bc1), ibc2 = _mm256_set1_ps(1.0f / bc2);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 gi = _mm256_loadu_ps(g + i);
        __m256 mi = _mm256_add_ps(_mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)), _mm256_mul_ps(vib1, gi));
        __m256 vi = _mm256_add_ps(_mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)),
                                  _mm256_mul_ps(vib2, _mm256_mul_ps(gi, gi)));
        _mm256_storeu_ps(m + i, mi);
        _mm256_storeu_ps(v + i, vi);
        __m256 mhat = _mm256_mul_ps(mi, ibc1);
        __m256 vhat = _mm256_mul_ps(vi, ibc2);
        __m256 den = _mm256_add_ps(_mm256_sqrt_ps(vhat), veps);
        __m256 upd = _mm256_div_ps(_mm256_mul_ps(vlr, mhat), den);
        _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), upd));
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

void ema_update_avx2(float* ema, const float* p, size_t n, float decay) {
    const __m256 vd = _mm256_set1_ps(decay), vid = _mm256_set1_ps(1.0f - decay);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 e = _mm256_mul_ps(vd, _mm256_loadu_ps(ema + i));
        _mm256_storeu_ps(ema + i, _mm256_fmadd_ps(vid, _mm256_loadu_ps(p + i), e));
    }
    for (; i < n; ++i) ema[i] = decay * ema[i] + (1.0f - decay) * p[i];
}

}  // namespace

namespace detail {
const KernelTable avx2_table = {
    sgemm_avx2, vadd_avx2, vmul_avx2, vaxpy_avx2, vscale_avx2,
    vsilu_avx2, vsilu_grad_avx2, vdot_avx2, vsum_avx2, vsumsq_avx2,
    adam_step_avx2, ema_update_avx2,
};
}  // namespace detail

}  // namespace ooc::kern
