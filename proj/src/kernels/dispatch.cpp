#include <cstdlib>
#include <cstring>
#include <string>

#include "ooc/kernels/kernels.hpp"
#include "ooc/util/errors.hpp"
#include "kernel_table.hpp"

namespace ooc::kern {
namespace {

Isa g_isa = Isa::scalar;
bool g_initialized = false;

Isa detect() {
    bool avx2 = cpu_has_avx2();
    const char* env = std::getenv("OOC_KERNELS");
    if (env != nullptr) {
        if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
        if (std::strcmp(env, "avx2") == 0) {
            if (!avx2) throw ContractError("OOC_KERNELS=avx2 but CPU lacks AVX2/FMA");
            return Isa::avx2;
        }
        throw ContractError(std::string("unknown OOC_KERNELS value: ") + env);
    }
    return avx2 ? Isa::avx2 : Isa::scalar;
}

void ensure_init() {
    if (!g_initialized) {
        g_isa = detect();
        g_initialized = true;
    }
}

}  // namespace

bool cpu_has_avx2() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

Isa active_isa() {
    ensure_init();
    return g_isa;
}

void set_isa(Isa isa) {
    if (isa == Isa::avx2 && !cpu_has_avx2())
        throw ContractError("cannot select avx2 kernels: CPU lacks AVX2/FMA");
    g_isa = isa;
    g_initialized = true;
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

namespace detail {
const KernelTable& active_table() {
    return active_isa() == Isa::avx2 ? avx2_table : scalar_table;
}
}  // namespace detail

void sgemm(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
           int ldc, bool accumulate) {
    detail::active_table().sgemm(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}
void vadd(const float* a, const float* b, float* out, size_t n) {
    detail::active_table().vadd(a, b, out, n);
}
void vmul(const float* a, const float* b, float* out, size_t n) {
    detail::active_table().vmul(a, b, out, n);
}
void vaxpy(float alpha, const float* x, float* y, size_t n) {
    detail::active_table().vaxpy(alpha, x, y, n);
}
void vscale(float alpha, float* x, size_t n) { detail::active_table().vscale(alpha, x, n); }
void vsilu(const float* x, float* out, size_t n) { detail::active_table().vsilu(x, out, n); }
void vsilu_grad(const float* x, const float* dy, float* dx, size_t n) {
    detail::active_table().vsilu_grad(x, dy, dx, n);
}
float vdot(const float* a, const float* b, size_t n) { return detail::active_table().vdot(a, b, n); }
float vsum(const float* a, size_t n) { return detail::active_table().vsum(a, n); }
float vsumsq(const float* a, size_t n) { return detail::active_table().vsumsq(a, n); }
void adam_step(float* p, float* m, float* v, const float* g, size_t n, float lr, float beta1,
               float beta2, float eps, float bc1, float bc2) {
    detail::active_table().adam_step(p, m, v, g, n, lr, beta1, beta2, eps, bc1, bc2);
}
void ema_update(float* ema, const float* p, size_t n, float decay) {
    detail::active_table().ema_update(ema, p, n, decay);
}

}  // namespace ooc::kern
