#include <cmath>
#include <cstring>

#include "ooc/kernels/kernels.hpp"
#include "kernel_table.hpp"

// Scalar reference kernels. These define the semantics the AVX2 variants are
// tested against, so they stay as plain as possible: no blocking, no unsafe
// reassociation beyond a simple accumulator.
namespace ooc::kern {
namespace {

template <class T>
void gemm_ref(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc,
              bool accumulate) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            T acc = accumulate ? c[i * ldc + j] : T(0);
            for (int p = 0; p < k; ++p) acc += a[i * lda + p] * b[p * ldb + j];
            c[i * ldc + j] = acc;
        }
    }
}

template <class T>
T silu_scalar(T x) {
    T s = T(1) / (T(1) + std::exp(-x));
    return x * s;
}

template <class T>
T silu_grad_scalar(T x) {
    T s = T(1) / (T(1) + std::exp(-x));
    return s * (T(1) + x * (T(1) - s));
}

void sgemm_scalar(int m, int n, int k, const float* a, int lda, const float* b, int ldb,
                  float* c, int ldc, bool accumulate) {
    gemm_ref(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void vadd_scalar(const float* a, const float* b, float* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}
void vmul_scalar(const float* a, const float* b, float* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}
void vaxpy_scalar(float alpha, const float* x, float* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}
void vscale_scalar(float alpha, float* x, size_t n) {
    for (size_t i = 0; i < n; ++i) x[i] *= alpha;
}
void vsilu_scalar(const float* x, float* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = silu_scalar(x[i]);
}
void vsilu_grad_scalar(const float* x, const float* dy, float* dx, size_t n) {
    for (size_t i = 0; i < n; ++i) dx[i] = dy[i] * silu_grad_scalar(x[i]);
}
float vdot_scalar(const float* a, const float* b, size_t n) {
    float acc = 0.0f;
    for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}
float vsum_scalar(const float* a, size_t n) {
    float acc = 0.0f;
    for (size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}
float vsumsq_scalar(const float* a, size_t n) {
    float acc = 0.0f;
    for (size_t i = 0; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

void adam_step_scalar(float* p, float* m, float* v, const float* g, size_t n,
                      float lr, float beta1, float beta2, float eps, float bc1, float bc2) {
    for (size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
        float mhat = m[i] / bc1;
        float vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

void ema_update_scalar(float* ema, const float* p, size_t n, float decay) {
    for (size_t i = 0; i < n; ++i) ema[i] = decay * ema[i] + (1.0f - decay) * p[i];
}

}  // namespace

namespace detail {
const KernelTable scalar_table = {
    sgemm_scalar, vadd_scalar,  vmul_scalar,   vaxpy_scalar,     vscale_scalar,
    vsilu_scalar, vsilu_grad_scalar, vdot_scalar, vsum_scalar,   vsumsq_scalar,
    adam_step_scalar, ema_update_scalar,
};
}  // namespace detail

void dgemm(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
           int ldc, bool accumulate) {
    gemm_ref(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void vadd(const double* a, const double* b, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}
void vmul(const double* a, const double* b, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}
void vaxpy(double alpha, const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}
void vscale(double alpha, double* x, size_t n) {
    for (size_t i = 0; i < n; ++i) x[i] *= alpha;
}
void vsilu(const double* x, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = silu_scalar(x[i]);
}
void vsilu_grad(const double* x, const double* dy, double* dx, size_t n) {
    for (size_t i = 0; i < n; ++i) dx[i] = dy[i] * silu_grad_scalar(x[i]);
}
double vdot(const double* a, const double* b, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}
double vsum(const double* a, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}
double vsumsq(const double* a, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

}  // namespace ooc::kern
