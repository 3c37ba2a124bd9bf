#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "ooc/theory/manifold.hpp"

namespace ooc::theory {

// Per-timestep block-wise bi-Lipschitz constants, indexed 1..T ([0] unused).
// The off-manifold upper constants may touch 1 exactly (identity chains are
// a legitimate boundary case); beyond that is rejected.
struct BlockLipschitzConstants {
    int T = 0;
    std::vector<double> a_m, b_m, a_p, b_p;

    static BlockLipschitzConstants zeros(int T);
    void validate() const;
};

// Reverse chain whose mean map at step t is the block-diagonal linear map
//   g_t(x) = c_m[t] W_M x + c_p[t] W_perp x + bias[t],  bias[t] in M.
// Linear and block-preserving, so the model density is an exact Gaussian and
// the bi-Lipschitz constants are exactly |c| per block.
struct SyntheticDenoiser {
    int T = 0;
    std::vector<double> c_m, c_p;            // 1..T
    std::vector<std::vector<double>> bias;   // 1..T, each a d-vector in M

    void apply(const LinearManifold& man, int t, const double* x, double* y) const;
    BlockLipschitzConstants exact_constants() const;
    static SyntheticDenoiser random(int T, const LinearManifold& man, uint64_t seed);
};

// Recursive center and per-block widths accumulated from the base state
// (mu = 0, sigma = 1 at t = T) down to t = 0, using the lower constants.
struct RecursiveStats {
    int T = 0;
    std::vector<std::vector<double>> mu;  // 0..T, d-vectors, all in M
    std::vector<double> sigma_m, sigma_p;  // 0..T
};

// sigmas indexed 1..T: the reverse-process noise level added at step t.
RecursiveStats recursive_stats(const SyntheticDenoiser& den, const LinearManifold& man,
                               const BlockLipschitzConstants& k,
                               const std::vector<double>& sigmas);

// Min/max projected-distance ratios over random pairs, per block. For any
// linear block-preserving map these bracket collapse onto the true factors.
struct LipschitzEstimate {
    double a_m, b_m, a_p, b_p;
};
LipschitzEstimate estimate_block_lipschitz(
    const std::function<void(const double*, double*)>& mean_map, const LinearManifold& man,
    int num_pairs, uint64_t seed);

// log of the multiplicative constant in front of the density bound.
double bound_log_constant(const BlockLipschitzConstants& k, const RecursiveStats& stats, int d,
                          int m);

// log of the pointwise bound at s. mu0 must lie in M (1e-8 tolerance).
double density_log_lower_bound(const double* s, const std::vector<double>& mu0, double sigma0_m,
                               double sigma0_p, const LinearManifold& man, double log_c);

// Closed-form model density of the synthetic chain at t = 0.
struct ExactGaussian {
    std::vector<double> mu;
    double var_m = 1.0, var_p = 1.0;
};
ExactGaussian exact_chain_density(const SyntheticDenoiser& den, const LinearManifold& man,
                                  const std::vector<double>& sigmas);
double exact_log_density(const ExactGaussian& g, const LinearManifold& man, const double* s);

// One certified block-Gaussian bound in the inductive form:
//   p(x) >= exp(log_c) (2pi)^{-d/2} sigma_m^{-m} sigma_p^{m-d}
//           exp(-|W_M(x-mu)|^2/(2 sigma_m^2) - |W_perp(x-mu)|^2/(2 sigma_p^2))
struct BoundCert {
    std::vector<double> mu;
    double sigma_m = 1.0, sigma_p = 1.0;
    double log_c = 0.0;
};
BoundCert base_cert(int d);
// Mean map with declared constants: shifts mu, scales sigma by the lower
// constants, pays the B/A ratio penalty into log_c.
BoundCert push_mean(const BoundCert& in, const LinearManifold& man,
                    const std::function<void(const double*, double*)>& mean_map, double decl_a_m,
                    double decl_b_m, double decl_a_p, double decl_b_p);
// Additive Gaussian noise: inflates both widths, constant unchanged.
BoundCert push_noise(const BoundCert& in, double sigma);
double cert_log_density(const BoundCert& c, const LinearManifold& man, const double* s);

struct TheoremReport {
    int d = 0, m = 0, T = 0;
    BlockLipschitzConstants constants;
    double sigma0_m = 0, sigma0_p = 0, log_c = 0;
    std::vector<double> log_exact, log_bound;  // per test point
    double min_margin = 0, max_margin = 0;
    int points = 0, certified = 0;
    bool pass = false;

    nlohmann::json to_json() const;
};

// Estimates constants from sampled pairs, runs the recursion, and compares
// the pointwise bound against the closed-form density at sampled test points.
// Pass verdict: every margin >= -1e-6.
TheoremReport verify_theorem(const SyntheticDenoiser& den, const LinearManifold& man,
                             const std::vector<double>& sigmas, int test_points, int num_pairs,
                             uint64_t seed);

}  // namespace ooc::theory
