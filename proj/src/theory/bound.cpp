#include "ooc/theory/bound.hpp"

#include <algorithm>
#include <cmath>

#include "ooc/util/errors.hpp"
#include "ooc/util/rng.hpp"

namespace ooc::theory {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
constexpr double kPerpSlack = 1e-12;               // b_p may touch 1 exactly
}  // namespace

BlockLipschitzConstants BlockLipschitzConstants::zeros(int T) {
    BlockLipschitzConstants k;
    k.T = T;
    k.a_m.assign(T + 1, 0.0);
    k.b_m.assign(T + 1, 0.0);
    k.a_p.assign(T + 1, 0.0);
    k.b_p.assign(T + 1, 0.0);
    return k;
}

void BlockLipschitzConstants::validate() const {
    if (T < 0 || a_m.size() != static_cast<size_t>(T) + 1 || b_m.size() != a_m.size() ||
        a_p.size() != a_m.size() || b_p.size() != a_m.size())
        throw ContractError("lipschitz constants: bad array sizes");
    for (int t = 1; t <= T; ++t) {
        if (!(a_m[t] > 0.0) || !(a_m[t] <= b_m[t]) || !std::isfinite(b_m[t]))
            throw ContractError("lipschitz constants: need 0 < A_M <= B_M < inf at t=" +
                                std::to_string(t));
        if (!(a_p[t] > 0.0) || !(a_p[t] <= b_p[t]) || !(b_p[t] <= 1.0 + kPerpSlack))
            throw ContractError("lipschitz constants: need 0 < A_perp <= B_perp <= 1 at t=" +
                                std::to_string(t));
    }
}

void SyntheticDenoiser::apply(const LinearManifold& man, int t, const double* x,
                              double* y) const {
    if (t < 1 || t > T) throw ContractError("synthetic denoiser: step out of range");
    int d = man.d();
    std::vector<double> on(d), off(d);
    man.decompose(x, on.data(), off.data());
    for (int i = 0; i < d; ++i) y[i] = c_m[t] * on[i] + c_p[t] * off[i] + bias[t][i];
}

BlockLipschitzConstants SyntheticDenoiser::exact_constants() const {
    auto k = BlockLipschitzConstants::zeros(T);
    for (int t = 1; t <= T; ++t) {
        k.a_m[t] = k.b_m[t] = std::abs(c_m[t]);
        k.a_p[t] = k.b_p[t] = std::abs(c_p[t]);
    }
    return k;
}

SyntheticDenoiser SyntheticDenoiser::random(int T, const LinearManifold& man, uint64_t seed) {
    Rng rng(seed);
    SyntheticDenoiser den;
    den.T = T;
    den.c_m.assign(T + 1, 0.0);
    den.c_p.assign(T + 1, 0.0);
    den.bias.assign(T + 1, std::vector<double>(man.d(), 0.0));
    for (int t = 1; t <= T; ++t) {
        den.c_m[t] = rng.uniform(0.7, 1.2);
        den.c_p[t] = rng.uniform(0.2, 0.9);
        std::vector<double> raw(man.d());
        for (auto& v : raw) v = rng.normal() * 0.3;
        man.project_m(raw.data(), den.bias[t].data());
    }
    return den;
}

RecursiveStats recursive_stats(const SyntheticDenoiser& den, const LinearManifold& man,
                               const BlockLipschitzConstants& k,
                               const std::vector<double>& sigmas) {
    k.validate();
    if (den.T != k.T) throw ContractError("recursive stats: constants/denoiser length mismatch");
    if (sigmas.size() != static_cast<size_t>(k.T) + 1)
        throw ContractError("recursive stats: sigma array must cover 1..T");
    for (int t = 1; t <= k.T; ++t)
        if (sigmas[t] < 0.0) throw ContractError("recursive stats: negative noise level");

    int d = man.d(), T = k.T;
    RecursiveStats st;
    st.T = T;
    st.mu.assign(T + 1, std::vector<double>(d, 0.0));
    st.sigma_m.assign(T + 1, 0.0);
    st.sigma_p.assign(T + 1, 0.0);
    st.sigma_m[T] = st.sigma_p[T] = 1.0;
    for (int t = T; t >= 1; --t) {
        den.apply(man, t, st.mu[t].data(), st.mu[t - 1].data());
        st.sigma_m[t - 1] = std::sqrt(sigmas[t] * sigmas[t] + k.a_m[t] * k.a_m[t] * st.sigma_m[t] * st.sigma_m[t]);
        st.sigma_p[t - 1] = std::sqrt(sigmas[t] * sigmas[t] + k.a_p[t] * k.a_p[t] * st.sigma_p[t] * st.sigma_p[t]);
        if (!(st.sigma_m[t - 1] > 0.0) || !(st.sigma_p[t - 1] > 0.0))
            throw StateError("recursive stats: collapsed width at t=" + std::to_string(t - 1));
    }
    return st;
}

LipschitzEstimate estimate_block_lipschitz(
    const std::function<void(const double*, double*)>& mean_map, const LinearManifold& man,
    int num_pairs, uint64_t seed) {
    if (num_pairs < 100) throw ContractError("lipschitz estimate: need at least 100 pairs");
    int d = man.d();
    Rng rng(seed);
    std::vector<double> x(d), y(d), gx(d), gy(d), diff(d), gdiff(d);
    LipschitzEstimate est{HUGE_VAL, 0.0, HUGE_VAL, 0.0};
    int used_m = 0, used_p = 0;
    for (int p = 0; p < num_pairs; ++p) {
        rng.fill_normal(x.data(), x.size());
        rng.fill_normal(y.data(), y.size());
        mean_map(x.data(), gx.data());
        mean_map(y.data(), gy.data());
        for (int i = 0; i < d; ++i) {
            diff[i] = x[i] - y[i];
            gdiff[i] = gx[i] - gy[i];
        }
        double dm = man.norm_m(diff.data()), dp = man.norm_perp(diff.data());
        if (dm > 1e-12) {
            double r = man.norm_m(gdiff.data()) / dm;
            est.a_m = std::min(est.a_m, r);
            est.b_m = std::max(est.b_m, r);
            ++used_m;
        }
        if (dp > 1e-12) {
            double r = man.norm_perp(gdiff.data()) / dp;
            est.a_p = std::min(est.a_p, r);
            est.b_p = std::max(est.b_p, r);
            ++used_p;
        }
    }
    if (used_m == 0 || (used_p == 0 && man.m() < man.d()))
        throw StateError("lipschitz estimate: all sampled pairs degenerate");
    if (man.m() == man.d()) {
        // no orthogonal complement; report a neutral contraction-free block
        est.a_p = est.b_p = 1.0;
    }
    return est;
}

double bound_log_constant(const BlockLipschitzConstants& k, const RecursiveStats& stats, int d,
                          int m) {
    k.validate();
    if (stats.T != k.T) throw ContractError("bound constant: stats/constants length mismatch");
    double log_c = -0.5 * d * kLog2Pi;
    for (int t = 1; t <= k.T; ++t) {
        log_c -= m * std::log(k.b_m[t] / k.a_m[t]);
        log_c -= (d - m) * std::log(k.b_p[t] / k.a_p[t]);
    }
    log_c -= m * std::log(stats.sigma_m[0]);
    log_c -= (d - m) * std::log(stats.sigma_p[0]);
    return log_c;
}

double density_log_lower_bound(const double* s, const std::vector<double>& mu0, double sigma0_m,
                               double sigma0_p, const LinearManifold& man, double log_c) {
    int d = man.d();
    if (static_cast<int>(mu0.size()) != d) throw ContractError("density bound: mu0 size mismatch");
    if (man.norm_perp(mu0.data()) > 1e-8)
        throw ContractError("density bound: mu0 has an off-manifold component");
    std::vector<double> diff(d);
    for (int i = 0; i < d; ++i) diff[i] = s[i] - mu0[i];
    double qm = man.norm_m(diff.data());
    double qp = man.norm_perp(s);
    return log_c - qm * qm / (2.0 * sigma0_m * sigma0_m) - qp * qp / (2.0 * sigma0_p * sigma0_p);
}

ExactGaussian exact_chain_density(const SyntheticDenoiser& den, const LinearManifold& man,
                                  const std::vector<double>& sigmas) {
    if (sigmas.size() != static_cast<size_t>(den.T) + 1)
        throw ContractError("exact density: sigma array must cover 1..T");
    int d = man.d();
    ExactGaussian g;
    g.mu.assign(d, 0.0);
    g.var_m = g.var_p = 1.0;
    std::vector<double> next(d);
    for (int t = den.T; t >= 1; --t) {
        den.apply(man, t, g.mu.data(), next.data());
        g.mu = next;
        g.var_m = den.c_m[t] * den.c_m[t] * g.var_m + sigmas[t] * sigmas[t];
        g.var_p = den.c_p[t] * den.c_p[t] * g.var_p + sigmas[t] * sigmas[t];
    }
    if (g.var_m < 1e-300 || g.var_p < 1e-300)
        throw StateError("exact density: degenerate covariance");
    return g;
}

double exact_log_density(const ExactGaussian& g, const LinearManifold& man, const double* s) {
    int d = man.d(), m = man.m();
    std::vector<double> diff(d);
    for (int i = 0; i < d; ++i) diff[i] = s[i] - g.mu[i];
    double qm = man.norm_m(diff.data());
    double qp = man.norm_perp(diff.data());
    return -0.5 * d * kLog2Pi - 0.5 * m * std::log(g.var_m) - 0.5 * (d - m) * std::log(g.var_p) -
           qm * qm / (2.0 * g.var_m) - qp * qp / (2.0 * g.var_p);
}

BoundCert base_cert(int d) {
    BoundCert c;
    c.mu.assign(d, 0.0);
    return c;
}

BoundCert push_mean(const BoundCert& in, const LinearManifold& man,
                    const std::function<void(const double*, double*)>& mean_map, double decl_a_m,
                    double decl_b_m, double decl_a_p, double decl_b_p) {
    if (!(decl_a_m > 0) || decl_a_m > decl_b_m || !(decl_a_p > 0) || decl_a_p > decl_b_p)
        throw ContractError("push_mean: invalid declared constants");
    int d = man.d(), m = man.m();
    BoundCert out;
    out.mu.assign(d, 0.0);
    mean_map(in.mu.data(), out.mu.data());
    out.sigma_m = in.sigma_m * decl_a_m;
    out.sigma_p = in.sigma_p * decl_a_p;
    out.log_c = in.log_c - m * std::log(decl_b_m / decl_a_m) -
                (d - m) * std::log(decl_b_p / decl_a_p);
    return out;
}

BoundCert push_noise(const BoundCert& in, double sigma) {
    if (sigma < 0) throw ContractError("push_noise: negative noise level");
    BoundCert out = in;
    out.sigma_m = std::sqrt(in.sigma_m * in.sigma_m + sigma * sigma);
    out.sigma_p = std::sqrt(in.sigma_p * in.sigma_p + sigma * sigma);
    return out;
}

double cert_log_density(const BoundCert& c, const LinearManifold& man, const double* s) {
    int d = man.d(), m = man.m();
    std::vector<double> diff(d);
    for (int i = 0; i < d; ++i) diff[i] = s[i] - c.mu[i];
    double qm = man.norm_m(diff.data());
    double qp = man.norm_perp(diff.data());
    return c.log_c - 0.5 * d * kLog2Pi - m * std::log(c.sigma_m) -
           (d - m) * std::log(c.sigma_p) - qm * qm / (2.0 * c.sigma_m * c.sigma_m) -
           qp * qp / (2.0 * c.sigma_p * c.sigma_p);
}

nlohmann::json TheoremReport::to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (size_t i = 0; i < log_exact.size(); ++i)
        pts.push_back({{"log_exact", log_exact[i]},
                       {"log_bound", log_bound[i]},
                       {"margin", log_exact[i] - log_bound[i]}});
    nlohmann::json consts = nlohmann::json::array();
    for (int t = 1; t <= T; ++t)
        consts.push_back({{"t", t},
                          {"a_m", constants.a_m[t]},
                          {"b_m", constants.b_m[t]},
                          {"a_p", constants.a_p[t]},
                          {"b_p", constants.b_p[t]}});
    return {{"d", d},
            {"m", m},
            {"T", T},
            {"constants", consts},
            {"sigma0_m", sigma0_m},
            {"sigma0_p", sigma0_p},
            {"log_constant", log_c},
            {"points", points},
            {"certified", certified},
            {"min_margin", min_margin},
            {"max_margin", max_margin},
            {"pass", pass},
            {"test_points", pts}};
}

TheoremReport verify_theorem(const SyntheticDenoiser& den, const LinearManifold& man,
                             const std::vector<double>& sigmas, int test_points, int num_pairs,
                             uint64_t seed) {
    int d = man.d(), m = man.m(), T = den.T;
    TheoremReport rep;
    rep.d = d;
    rep.m = m;
    rep.T = T;

    rep.constants = BlockLipschitzConstants::zeros(T);
    for (int t = 1; t <= T; ++t) {
        auto est = estimate_block_lipschitz(
            [&](const double* x, double* y) { den.apply(man, t, x, y); }, man, num_pairs,
            seed ^ (0x9e3779b97f4a7c15ull * static_cast<uint64_t>(t)));
        rep.constants.a_m[t] = est.a_m;
        rep.constants.b_m[t] = est.b_m;
        rep.constants.a_p[t] = est.a_p;
        rep.constants.b_p[t] = est.b_p;
    }

    auto stats = recursive_stats(den, man, rep.constants, sigmas);
    rep.sigma0_m = stats.sigma_m[0];
    rep.sigma0_p = stats.sigma_p[0];
    rep.log_c = bound_log_constant(rep.constants, stats, d, m);
    auto exact = exact_chain_density(den, man, sigmas);

    Rng rng(seed ^ 0x517cc1b727220a95ull);
    std::vector<double> u(d), s(d), on(d), off(d);
    rep.points = test_points;
    rep.min_margin = HUGE_VAL;
    rep.max_margin = -HUGE_VAL;
    for (int p = 0; p < test_points; ++p) {
        // draw around the exact law, inflated so tails get exercised
        rng.fill_normal(u.data(), u.size());
        man.decompose(u.data(), on.data(), off.data());
        for (int i = 0; i < d; ++i)
            s[i] = exact.mu[i] + 1.5 * (std::sqrt(exact.var_m) * on[i] +
                                        std::sqrt(exact.var_p) * off[i]);
        double le = exact_log_density(exact, man, s.data());
        double lb = density_log_lower_bound(s.data(), stats.mu[0], stats.sigma_m[0],
                                            stats.sigma_p[0], man, rep.log_c);
        rep.log_exact.push_back(le);
        rep.log_bound.push_back(lb);
        double margin = le - lb;
        rep.min_margin = std::min(rep.min_margin, margin);
        rep.max_margin = std::max(rep.max_margin, margin);
        if (margin >= -1e-6) ++rep.certified;
    }
    rep.pass = rep.certified == rep.points;
    return rep;
}

}  // namespace ooc::theory
