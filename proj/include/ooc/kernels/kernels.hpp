#pragma once

#include <cstddef>

// Numeric primitives behind every model in this project. Each operation has a
// scalar reference implementation and (for float) an AVX2+FMA variant; the
// active variant is chosen once at startup from CPUID and can be overridden
// with OOC_KERNELS=scalar|avx2 or set_isa(). Double-precision entry points
// always run the scalar reference; they exist for finite-difference checks.
namespace ooc::kern {

enum class Isa { scalar, avx2 };

bool cpu_has_avx2();
Isa active_isa();
// Throws ContractError when forcing avx2 on a CPU without it.
void set_isa(Isa isa);
const char* isa_name(Isa isa);

// Row-major GEMM with leading dimensions: C = A*B (accumulate=false) or
// C += A*B (accumulate=true). A is m x k, B is k x n, C is m x n.
void sgemm(int m, int n, int k, const float* a, int lda, const float* b, int ldb,
           float* c, int ldc, bool accumulate);
void dgemm(int m, int n, int k, const double* a, int lda, const double* b, int ldb,
           double* c, int ldc, bool accumulate);

// Elementwise ops; out may alias inputs elementwise (same offset only).
void vadd(const float* a, const float* b, float* out, size_t n);
void vmul(const float* a, const float* b, float* out, size_t n);
void vaxpy(float alpha, const float* x, float* y, size_t n);  // y += alpha*x
void vscale(float alpha, float* x, size_t n);                 // x *= alpha
void vsilu(const float* x, float* out, size_t n);             // out = x*sigmoid(x)
void vsilu_grad(const float* x, const float* dy, float* dx, size_t n);  // dx = dy*silu'(x)

float vdot(const float* a, const float* b, size_t n);
float vsum(const float* a, size_t n);
float vsumsq(const float* a, size_t n);

// Fused Adam update over flat arrays. bc1/bc2 are the bias corrections
// (1 - beta^step) for the first and second moment.
void adam_step(float* p, float* m, float* v, const float* g, size_t n,
               float lr, float beta1, float beta2, float eps, float bc1, float bc2);
// ema = decay*ema + (1-decay)*p
void ema_update(float* ema, const float* p, size_t n, float decay);

// Double-precision mirrors of the ops the gradient-check path needs.
void vadd(const double* a, const double* b, double* out, size_t n);
void vmul(const double* a, const double* b, double* out, size_t n);
void vaxpy(double alpha, const double* x, double* y, size_t n);
void vscale(double alpha, double* x, size_t n);
void vsilu(const double* x, double* out, size_t n);
void vsilu_grad(const double* x, const double* dy, double* dx, size_t n);
double vdot(const double* a, const double* b, size_t n);
double vsum(const double* a, size_t n);
double vsumsq(const double* a, size_t n);

// Type-dispatched wrappers so layer code can be written once and instantiated
// at float (production) and double (finite-difference verification).
template <class T>
void gemm(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc,
          bool accumulate) {
    if constexpr (sizeof(T) == sizeof(float))
        sgemm(m, n, k, reinterpret_cast<const float*>(a), lda, reinterpret_cast<const float*>(b),
              ldb, reinterpret_cast<float*>(c), ldc, accumulate);
    else
        dgemm(m, n, k, reinterpret_cast<const double*>(a), lda, reinterpret_cast<const double*>(b),
              ldb, reinterpret_cast<double*>(c), ldc, accumulate);
}

}  // namespace ooc::kern
