#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ooc/util/errors.hpp"

namespace ooc::diff {

// Variance schedule for the noising process. Arrays are indexed by timestep
// t in [1, T]; index 0 is the data distribution itself (alpha_bar[0] = 1).
// sigma[t] is the posterior standard deviation sqrt(beta_tilde_t); sigma[1]
// is exactly 0, so the last denoising step adds no noise.
struct NoiseSchedule {
    int T = 0;
    double beta_min = 0.0, beta_max = 0.0;
    std::vector<double> beta, alpha, alpha_bar, sigma;

    double sqrt_ab(int t) const { return std::sqrt(alpha_bar[t]); }
    double sqrt_one_minus_ab(int t) const { return std::sqrt(1.0 - alpha_bar[t]); }
};

inline NoiseSchedule build_schedule(int T, double beta_min = 1e-4, double beta_max = 0.02) {
    if (T < 1) throw ContractError("schedule: T must be >= 1");
    if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0))
        throw ContractError("schedule: need 0 < beta_min <= beta_max < 1");
    NoiseSchedule s;
    s.T = T;
    s.beta_min = beta_min;
    s.beta_max = beta_max;
    s.beta.assign(T + 1, 0.0);
    s.alpha.assign(T + 1, 1.0);
    s.alpha_bar.assign(T + 1, 1.0);
    s.sigma.assign(T + 1, 0.0);
    for (int t = 1; t <= T; ++t) {
        s.beta[t] = (T == 1) ? beta_min : beta_min + (beta_max - beta_min) * (t - 1) / (T - 1);
        s.alpha[t] = 1.0 - s.beta[t];
        s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
        double beta_tilde = (1.0 - s.alpha_bar[t - 1]) / (1.0 - s.alpha_bar[t]) * s.beta[t];
        s.sigma[t] = std::sqrt(beta_tilde);
    }
    return s;
}

// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps, elementwise over a
// whole (d x h) trajectory image (or any flat buffer).
template <class T>
void forward_diffuse(const T* x0, const T* eps, size_t n, int t, const NoiseSchedule& s, T* xt) {
    if (t < 1 || t > s.T) throw ContractError("forward_diffuse: t out of range");
    T a = static_cast<T>(s.sqrt_ab(t));
    T b = static_cast<T>(s.sqrt_one_minus_ab(t));
    for (size_t i = 0; i < n; ++i) xt[i] = a * x0[i] + b * eps[i];
}

// Classifier-free guidance: (1 + w) * eps_cond - w * eps_uncond. w = 0 returns
// the conditional prediction unchanged.
template <class T>
void cfg_combine(const T* eps_cond, const T* eps_uncond, size_t n, double w, T* out) {
    T a = static_cast<T>(1.0 + w);
    T b = static_cast<T>(w);
    for (size_t i = 0; i < n; ++i) out[i] = a * eps_cond[i] - b * eps_uncond[i];
}

}  // namespace ooc::diff
