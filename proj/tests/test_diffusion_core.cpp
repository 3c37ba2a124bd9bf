#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "ooc/diffusion/schedule.hpp"
#include "ooc/planner/sampler.hpp"
#include "ooc/util/errors.hpp"
#include "ooc/util/rng.hpp"

using namespace ooc;

TEST_CASE("schedule invariants") {
    auto s = diff::build_schedule(80, 1e-4, 0.02);
    REQUIRE(s.T == 80);
    CHECK(s.alpha_bar[0] == 1.0);
    CHECK(s.sigma[1] == 0.0);
    double prod = 1.0;
    for (int t = 1; t <= s.T; ++t) {
        CHECK(s.alpha[t] == doctest::Approx(1.0 - s.beta[t]));
        prod *= s.alpha[t];
        CHECK(s.alpha_bar[t] == doctest::Approx(prod).epsilon(1e-12));
        CHECK(s.alpha_bar[t] < s.alpha_bar[t - 1]);
        CHECK(s.alpha_bar[t] > 0.0);
        CHECK(s.beta[t] >= s.beta[t - 1]);
    }
    CHECK(s.beta[1] == doctest::Approx(1e-4));
    CHECK(s.beta[s.T] == doctest::Approx(0.02));

    CHECK_THROWS_AS(diff::build_schedule(0), ContractError);
    CHECK_THROWS_AS(diff::build_schedule(10, 0.0, 0.02), ContractError);
    CHECK_THROWS_AS(diff::build_schedule(10, 0.03, 0.02), ContractError);
}

TEST_CASE("vanishing-noise limit keeps the data untouched") {
    auto s = diff::build_schedule(1, 1e-12, 1e-12);
    CHECK(s.alpha_bar[1] == doctest::Approx(1.0).epsilon(1e-11));
    float x0[4] = {0.3f, -1.2f, 0.7f, 2.0f}, eps[4] = {1, -1, 2, 0.5f}, xt[4];
    diff::forward_diffuse(x0, eps, 4, 1, s, xt);
    for (int i = 0; i < 4; ++i) CHECK(xt[i] == doctest::Approx(x0[i]).epsilon(1e-5));
}

TEST_CASE("forward diffusion matches its closed form and moments") {
    auto s = diff::build_schedule(40);
    Rng rng(7);
    int t = 25;
    double x0 = 0.8;
    double sa = s.sqrt_ab(t), sb = s.sqrt_one_minus_ab(t);
    // single-coordinate Monte Carlo moments
    int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        float e = static_cast<float>(rng.normal());
        float xt;
        float x0f = static_cast<float>(x0);
        diff::forward_diffuse(&x0f, &e, 1, t, s, &xt);
        sum += xt;
        sumsq += static_cast<double>(xt) * xt;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    double se_mean = sb / std::sqrt(static_cast<double>(n));
    CHECK(std::fabs(mean - sa * x0) < 4.0 * se_mean);
    CHECK(std::fabs(var - sb * sb) < 4.0 * sb * sb * std::sqrt(2.0 / n));
}

TEST_CASE("noising then exact denoising recovers the input") {
    auto s = diff::build_schedule(80);
    Rng rng(11);
    std::vector<float> x0(64), eps(64), xt(64);
    rng.fill_uniform(x0.data(), 64, -1.0, 1.0);
    rng.fill_normal(eps.data(), 64);
    for (int t : {1, 17, 80}) {
        diff::forward_diffuse(x0.data(), eps.data(), 64, t, s, xt.data());
        double sa = s.sqrt_ab(t), sb = s.sqrt_one_minus_ab(t);
        for (int i = 0; i < 64; ++i) {
            double rec = (xt[i] - sb * eps[i]) / sa;
            CHECK(rec == doctest::Approx(x0[i]).epsilon(1e-5));
        }
    }
}

TEST_CASE("subsequence step with posterior sigma equals the ancestral step") {
    auto s = diff::build_schedule(80);
    Rng rng(13);
    size_t n = 128;
    std::vector<float> xt(n), eps_hat(n), noise(n), a(n), b(n);
    rng.fill_uniform(xt.data(), n, -2.0, 2.0);
    rng.fill_uniform(eps_hat.data(), n, -1.5, 1.5);
    rng.fill_normal(noise.data(), n);
    for (int t : {2, 3, 41, 80}) {
        plan::ddpm_step(xt.data(), eps_hat.data(), n, t, s, noise.data(), false, 0, 0, a.data());
        plan::ddim_step(xt.data(), eps_hat.data(), n, t, t - 1, s, s.sigma[t], noise.data(), false,
                        0, 0, b.data());
        for (size_t i = 0; i < n; ++i) CHECK(std::fabs(a[i] - b[i]) < 1e-5);
    }
    // t = 1: no noise argument needed, sigma[1] = 0
    plan::ddpm_step<float>(xt.data(), eps_hat.data(), n, 1, s, nullptr, false, 0, 0, a.data());
    plan::ddim_step<float>(xt.data(), eps_hat.data(), n, 1, 0, s, 0.0, nullptr, false, 0, 0, b.data());
    for (size_t i = 0; i < n; ++i) CHECK(std::fabs(a[i] - b[i]) < 1e-5);
}

TEST_CASE("deterministic subsequence step is bitwise reproducible") {
    auto s = diff::build_schedule(64);
    Rng rng(17);
    size_t n = 96;
    std::vector<float> xt(n), eps_hat(n), a(n), b(n);
    rng.fill_uniform(xt.data(), n, -2.0, 2.0);
    rng.fill_uniform(eps_hat.data(), n, -1.0, 1.0);
    plan::ddim_step<float>(xt.data(), eps_hat.data(), n, 48, 32, s, 0.0, nullptr, true, -1.5, 1.5, a.data());
    plan::ddim_step<float>(xt.data(), eps_hat.data(), n, 48, 32, s, 0.0, nullptr, true, -1.5, 1.5, b.data());
    CHECK(std::memcmp(a.data(), b.data(), n * sizeof(float)) == 0);
}

TEST_CASE("guidance combination algebra") {
    Rng rng(19);
    size_t n = 50;
    std::vector<float> ec(n), eu(n), out(n);
    rng.fill_uniform(ec.data(), n, -1.0, 1.0);
    rng.fill_uniform(eu.data(), n, -1.0, 1.0);
    diff::cfg_combine(ec.data(), eu.data(), n, 0.0, out.data());
    for (size_t i = 0; i < n; ++i) CHECK(out[i] == ec[i]);
    diff::cfg_combine(ec.data(), eu.data(), n, 1.3, out.data());
    for (size_t i = 0; i < n; ++i)
        CHECK(out[i] == doctest::Approx(2.3f * ec[i] - 1.3f * eu[i]).epsilon(1e-6));
}

TEST_CASE("observation inpainting touches exactly the state rows of column 0") {
    int d = 7, h = 4, d_s = 5;
    std::vector<float> x(d * h, 9.0f), obs = {1, 2, 3, 4, 5};
    auto orig = x;
    plan::inpaint_observation(x.data(), d, h, obs.data(), d_s);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < h; ++c) {
            float v = x[r * h + c];
            if (c == 0 && r < d_s)
                CHECK(v == obs[r]);
            else
                CHECK(v == orig[r * h + c]);
        }
    CHECK_THROWS_AS(plan::inpaint_observation(x.data(), d, h, obs.data(), d + 1), ContractError);
}
