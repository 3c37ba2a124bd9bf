#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "ooc/diffusion/denoiser.hpp"
#include "ooc/nn/attention.hpp"
#include "ooc/nn/layers.hpp"
#include "ooc/util/rng.hpp"

// Analytic backward passes vs central finite differences, all in double so
// the comparison is limited by truncation error rather than float rounding.
namespace {

using namespace ooc;

double fd_grad(double* slot, const std::function<double()>& loss, double eps) {
    double orig = *slot;
    *slot = orig + eps;
    double lp = loss();
    *slot = orig - eps;
    double lm = loss();
    *slot = orig;
    return (lp - lm) / (2.0 * eps);
}

double rel_err(double a, double b) {
    double den = std::max({std::fabs(a), std::fabs(b), 1e-8});
    return std::fabs(a - b) / den;
}

// Weighted-sum loss: linear in the output so dL/dy is a constant matrix.
struct LinearLoss {
    std::vector<double> w;
    explicit LinearLoss(size_t n, Rng& rng) : w(n) { rng.fill_uniform(w.data(), n, -1.0, 1.0); }
    double operator()(const double* y) const {
        double acc = 0.0;
        for (size_t i = 0; i < w.size(); ++i) acc += w[i] * y[i];
        return acc;
    }
};

}  // namespace

TEST_CASE("linear layer gradients") {
    Rng rng(42);
    nn::ParamStore<double> ps;
    nn::Linear<double> lin(ps, "l", 7, 5);
    ps.allocate();
    lin.init(rng);
    int B = 4;
    std::vector<double> x(7 * B);
    rng.fill_uniform(x.data(), x.size(), -1.0, 1.0);
    LinearLoss loss(5 * B, rng);
    auto run = [&] { return loss(lin.forward(x.data(), B)); };
    run();
    ps.zero_grads();
    const double* dx = lin.backward(loss.w.data());

    for (size_t i = 0; i < ps.total(); i += 7) {
        double fd = fd_grad(&ps.values[i], run, 1e-6);
        CHECK(rel_err(ps.grads[i], fd) < 1e-7);
    }
    for (size_t i = 0; i < x.size(); i += 5) {
        double fd = fd_grad(&x[i], run, 1e-6);
        CHECK(rel_err(dx[i], fd) < 1e-7);
    }
}

TEST_CASE("conv1d gradients (stride 1 and 2)") {
    for (int stride : {1, 2}) {
        Rng rng(43 + stride);
        nn::ParamStore<double> ps;
        int k = stride == 1 ? 5 : 3;
        nn::Conv1d<double> conv(ps, "c", 3, 4, k, stride);
        ps.allocate();
        conv.init(rng);
        int B = 2, L = 8;
        std::vector<double> x(3 * B * L);
        rng.fill_uniform(x.data(), x.size(), -1.0, 1.0);
        LinearLoss loss(static_cast<size_t>(4) * B * conv.out_len(L), rng);
        auto run = [&] { return loss(conv.forward(x.data(), B, L)); };
        run();
        ps.zero_grads();
        const double* dx = conv.backward(loss.w.data());
        for (size_t i = 0; i < ps.total(); i += 3) {
            double fd = fd_grad(&ps.values[i], run, 1e-6);
            CHECK(rel_err(ps.grads[i], fd) < 1e-7);
        }
        for (size_t i = 0; i < x.size(); i += 7) {
            double fd = fd_grad(&x[i], run, 1e-6);
            CHECK(rel_err(dx[i], fd) < 1e-7);
        }
    }
}

TEST_CASE("transposed conv gradients") {
    Rng rng(44);
    nn::ParamStore<double> ps;
    nn::ConvTranspose1d<double> conv(ps, "ct", 4, 3);
    ps.allocate();
    conv.init(rng);
    int B = 2, L = 6;
    std::vector<double> x(4 * B * L);
    rng.fill_uniform(x.data(), x.size(), -1.0, 1.0);
    LinearLoss loss(static_cast<size_t>(3) * B * 2 * L, rng);
    auto run = [&] { return loss(conv.forward(x.data(), B, L)); };
    run();
    ps.zero_grads();
    const double* dx = conv.backward(loss.w.data());
    for (size_t i = 0; i < ps.total(); i += 5) {
        double fd = fd_grad(&ps.values[i], run, 1e-6);
        CHECK(rel_err(ps.grads[i], fd) < 1e-7);
    }
    for (size_t i = 0; i < x.size(); i += 7) {
        double fd = fd_grad(&x[i], run, 1e-6);
        CHECK(rel_err(dx[i], fd) < 1e-7);
    }
}

TEST_CASE("group norm gradients") {
    Rng rng(45);
    nn::ParamStore<double> ps;
    nn::GroupNorm<double> gn(ps, "g", 8, 4);
    ps.allocate();
    gn.init(rng);
    int B = 2, L = 5;
    std::vector<double> x(8 * B * L);
    rng.fill_uniform(x.data(), x.size(), -2.0, 2.0);
    LinearLoss loss(x.size(), rng);
    auto run = [&] { return loss(gn.forward(x.data(), B, L)); };
    run();
    ps.zero_grads();
    const double* dx = gn.backward(loss.w.data());
    for (size_t i = 0; i < ps.total(); ++i) {
        double fd = fd_grad(&ps.values[i], run, 1e-6);
        CHECK(rel_err(ps.grads[i], fd) < 1e-6);
    }
    for (size_t i = 0; i < x.size(); i += 3) {
        double fd = fd_grad(&x[i], run, 1e-6);
        CHECK(rel_err(dx[i], fd) < 1e-6);
    }
}

TEST_CASE("cross attention gradients") {
    Rng rng(46);
    nn::ParamStore<double> ps;
    int C = 6, E = 4, B = 2, L = 5, n = 3;
    nn::CrossAttention<double> attn(ps, "a", C, E);
    ps.allocate();
    attn.init(rng);
    // zero-init output projection hides gradients; randomize it
    Rng r2(99);
    for (auto& v : ps.values) if (v == 0.0) v = r2.uniform(-0.3, 0.3);
    std::vector<double> x(static_cast<size_t>(C) * B * L), tok(static_cast<size_t>(E) * B * n);
    rng.fill_uniform(x.data(), x.size(), -1.0, 1.0);
    rng.fill_uniform(tok.data(), tok.size(), -1.0, 1.0);
    LinearLoss loss(x.size(), rng);
    auto run = [&] { return loss(attn.forward(x.data(), tok.data(), B, L, n)); };
    run();
    ps.zero_grads();
    const double* dx = attn.backward(loss.w.data());
    const double* dtok = attn.d_tokens();
    for (size_t i = 0; i < ps.total(); i += 4) {
        double fd = fd_grad(&ps.values[i], run, 1e-6);
        CHECK(rel_err(ps.grads[i], fd) < 1e-6);
    }
    for (size_t i = 0; i < x.size(); i += 3) {
        double fd = fd_grad(&x[i], run, 1e-6);
        CHECK(rel_err(dx[i], fd) < 1e-6);
    }
    for (size_t i = 0; i < tok.size(); ++i) {
        double fd = fd_grad(&tok[i], run, 1e-5);
        CHECK(rel_err(dtok[i], fd) < 1e-5);
    }
}

TEST_CASE("full denoiser gradients, all conditioning modes") {
    for (auto mode : {diff::CondMode::none, diff::CondMode::concat, diff::CondMode::attention}) {
        diff::DenoiserConfig cfg;
        cfg.d = 5;
        cfg.horizon = 8;
        cfg.base = 4;
        cfg.mults = {1, 2, 4};
        cfg.mode = mode;
        if (mode != diff::CondMode::none) {
            cfg.cond_tokens = 2;
            cfg.cond_dim = 3;
            cfg.vocab = 4;
        }
        diff::Denoiser<double> model(cfg);
        model.init(7);
        auto& ps = model.params();
        // zero-initialized heads (output conv, attention out-proj) block all
        // upstream gradients at init; randomize them so every layer is probed
        Rng rz(321);
        for (auto& v : ps.values)
            if (v == 0.0) v = rz.uniform(-0.2, 0.2);
        Rng rng(48);
        int B = 2;
        std::vector<double> x(static_cast<size_t>(cfg.d) * B * cfg.horizon);
        rng.fill_uniform(x.data(), x.size(), -1.0, 1.0);
        std::vector<int> t = {3, 11};
        std::vector<int> idx = {0, 2, 1, 3};
        std::vector<uint8_t> drop = {0, 1};  // exercise the null-token path
        LinearLoss loss(x.size(), rng);
        auto run = [&] {
            return loss(model.forward(x.data(), B, t.data(), idx.data(), nullptr, drop));
        };
        run();
        ps.zero_grads();
        model.backward(loss.w.data());

        // ~12 parameters spread over all layers
        size_t total = ps.total();
        int checked = 0;
        Rng pick(1000 + static_cast<int>(mode));
        for (int j = 0; j < 12; ++j) {
            size_t i = static_cast<size_t>(pick.uniform_int(static_cast<int64_t>(total)));
            double fd = fd_grad(&ps.values[i], run, 1e-5);
            if (std::fabs(fd) < 1e-10 && std::fabs(ps.grads[i]) < 1e-10) continue;
            CAPTURE(static_cast<int>(mode));
            CAPTURE(i);
            // the loss is O(10) while single-weight grads can be O(1e-4), so
            // central differences carry visible cancellation noise
            CHECK(rel_err(ps.grads[i], fd) < 1e-4);
            ++checked;
        }
        CHECK(checked >= 6);
        // input gradient too
        for (size_t i = 0; i < x.size(); i += 17) {
            double fd = fd_grad(&x[i], run, 1e-5);
            CHECK(rel_err(model.dx()[i], fd) < 1e-5);
        }
    }
}
