#pragma once

#include <cmath>
#include <cstddef>

#include "ooc/diffusion/schedule.hpp"
#include "ooc/util/errors.hpp"

namespace ooc::plan {

// One reverse-process step and its generalized-subsequence cousin. Both are
// pure: the caller supplies the noise draw, so the same inputs always produce
// the same outputs. clip bounds apply to the implied clean-trajectory estimate
// before the update is formed; pass clip=false for the textbook update.

// x_{t-1} = (x_t - (1-alpha_t)/sqrt(1-alpha_bar_t) * eps_hat)/sqrt(alpha_t)
//           + sigma_t * noise
template <class T>
void ddpm_step(const T* xt, const T* eps_hat, size_t n, int t, const diff::NoiseSchedule& s,
               const T* noise, bool clip, double clip_lo, double clip_hi, T* out) {
    if (t < 1 || t > s.T) throw ContractError("ddpm_step: t out of range");
    double ab_t = s.alpha_bar[t];
    double ab_prev = s.alpha_bar[t - 1];
    double a_t = s.alpha[t];
    double sigma = s.sigma[t];
    if (t > 1 && noise == nullptr) throw ContractError("ddpm_step: noise required for t > 1");
    if (!clip) {
        double c_eps = (1.0 - a_t) / std::sqrt(1.0 - ab_t);
        double inv_sqrt_a = 1.0 / std::sqrt(a_t);
        for (size_t i = 0; i < n; ++i) {
            double mu = (xt[i] - c_eps * eps_hat[i]) * inv_sqrt_a;
            out[i] = static_cast<T>(mu + (t > 1 ? sigma * noise[i] : 0.0));
        }
        return;
    }
    // posterior mean written in terms of the clipped x0 estimate
    double inv_sqrt_ab = 1.0 / std::sqrt(ab_t);
    double som = std::sqrt(1.0 - ab_t);
    double c0 = std::sqrt(ab_prev) * s.beta[t] / (1.0 - ab_t);
    double c1 = std::sqrt(a_t) * (1.0 - ab_prev) / (1.0 - ab_t);
    for (size_t i = 0; i < n; ++i) {
        double x0 = (xt[i] - som * eps_hat[i]) * inv_sqrt_ab;
        x0 = std::min(std::max(x0, clip_lo), clip_hi);
        double mu = c0 * x0 + c1 * xt[i];
        out[i] = static_cast<T>(mu + (t > 1 ? sigma * noise[i] : 0.0));
    }
}

// x_{t_prev} = sqrt(ab_prev) x0_hat + sqrt(1 - ab_prev - sigma^2) eps_hat
//              + sigma * noise,   x0_hat = (x_t - sqrt(1-ab_t) eps_hat)/sqrt(ab_t)
// sigma = 0 gives the deterministic variant; sigma = posterior sigma with
// t_prev = t-1 reproduces the stochastic step above exactly.
template <class T>
void ddim_step(const T* xt, const T* eps_hat, size_t n, int t, int t_prev,
               const diff::NoiseSchedule& s, double sigma, const T* noise, bool clip,
               double clip_lo, double clip_hi, T* out) {
    if (t < 1 || t > s.T) throw ContractError("ddim_step: t out of range");
    if (t_prev < 0 || t_prev >= t) throw ContractError("ddim_step: need 0 <= t_prev < t");
    if (sigma > 0.0 && noise == nullptr) throw ContractError("ddim_step: noise required");
    double ab_t = s.alpha_bar[t];
    double ab_prev = s.alpha_bar[t_prev];
    double dir_sq = 1.0 - ab_prev - sigma * sigma;
    if (dir_sq < -1e-12) throw ContractError("ddim_step: sigma too large for target step");
    if (dir_sq < 0.0) dir_sq = 0.0;
    double c_dir = std::sqrt(dir_sq);
    double inv_sqrt_ab = 1.0 / std::sqrt(ab_t);
    double som = std::sqrt(1.0 - ab_t);
    double sq_prev = std::sqrt(ab_prev);
    double sq_ab = std::sqrt(ab_t);
    for (size_t i = 0; i < n; ++i) {
        double x0 = (xt[i] - som * eps_hat[i]) * inv_sqrt_ab;
        double eps = eps_hat[i];
        if (clip) {
            double x0c = std::min(std::max(x0, clip_lo), clip_hi);
            // keep the update self-consistent: the direction term must use the
            // noise implied by the clipped estimate, or the posterior-sigma
            // special case above stops matching the ancestral step
            if (x0c != x0) eps = (xt[i] - sq_ab * x0c) / som;
            x0 = x0c;
        }
        double v = sq_prev * x0 + c_dir * eps;
        out[i] = static_cast<T>(v + (sigma > 0.0 ? sigma * noise[i] : 0.0));
    }
}

// Guided noise estimate from a conditional and a null-token evaluation:
// eps = (1 + w) * eps_cond - w * eps_null. w = 0 collapses to the
// conditional estimate alone.
template <class T>
void cfg_combine(const T* eps_cond, const T* eps_null, size_t n, double w, T* out) {
    for (size_t i = 0; i < n; ++i)
        out[i] = static_cast<T>((1.0 + w) * eps_cond[i] - w * eps_null[i]);
}

// Overwrite one column segment of a (d, h) trajectory image with fixed values.
template <class T>
void inpaint_column(T* x, int d, int h, int col, const T* values, int row_begin, int row_count) {
    if (col < 0 || col >= h) throw ContractError("inpaint: column out of range");
    if (row_begin < 0 || row_begin + row_count > d) throw ContractError("inpaint: rows out of range");
    for (int r = 0; r < row_count; ++r)
        x[static_cast<size_t>(row_begin + r) * h + col] = values[r];
}

// The planning constraint: the current observation occupies the state rows of
// the first column; action rows and all later columns stay untouched.
template <class T>
void inpaint_observation(T* x, int d, int h, const T* obs, int d_state) {
    if (d_state > d) throw ContractError("inpaint: d_state exceeds d");
    inpaint_column(x, d, h, 0, obs, 0, d_state);
}

}  // namespace ooc::plan
