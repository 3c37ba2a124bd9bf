#pragma once

#include <cstddef>

// Internal dispatch table. One instance per ISA; dispatch.cpp owns selection.
namespace ooc::kern::detail {

struct KernelTable {
    void (*sgemm)(int, int, int, const float*, int, const float*, int, float*, int, bool);
    void (*vadd)(const float*, const float*, float*, size_t);
    void (*vmul)(const float*, const float*, float*, size_t);
    void (*vaxpy)(float, const float*, float*, size_t);
    void (*vscale)(float, float*, size_t);
    void (*vsilu)(const float*, float*, size_t);
    void (*vsilu_grad)(const float*, const float*, float*, size_t);
    float (*vdot)(const float*, const float*, size_t);
    float (*vsum)(const float*, size_t);
    float (*vsumsq)(const float*, size_t);
    void (*adam_step)(float*, float*, float*, const float*, size_t,
                      float, float, float, float, float, float);
    void (*ema_update)(float*, const float*, size_t, float);
};

extern const KernelTable scalar_table;
extern const KernelTable avx2_table;

const KernelTable& active_table();

}  // namespace ooc::kern::detail
