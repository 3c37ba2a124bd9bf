#include "ooc/planner/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ooc/diffusion/conditioning.hpp"
#include "ooc/planner/sampler.hpp"

namespace ooc::plan {

namespace {

int argmax(const float* v, int n) {
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

void check_finite(const std::vector<float>& x, int t) {
    for (float v : x)
        if (!std::isfinite(v)) throw PlanningError("plan: non-finite trajectory value", t);
}

// Raw-unit action rows of one trajectory column.
std::vector<float> action_at(const PlanResult& p, const data::Normalizer& norm, int col) {
    std::vector<float> a;
    a.reserve(static_cast<std::size_t>(p.d - p.d_state));
    for (int r = p.d_state; r < p.d; ++r)
        a.push_back(static_cast<float>(
            norm.denormalize(r, p.traj[static_cast<std::size_t>(r) * p.h + col])));
    return a;
}

}  // namespace

Planner::Planner(diff::LoadedModel model, const PlanConfig& cfg)
    : m_(std::move(model)), cfg_(cfg) {
    if (!m_.model) throw ContractError("planner: no model loaded");
    if (cfg_.guidance < 0.0) throw ContractError("planner: guidance weight must be >= 0");
    int T = m_.sched.T;
    if (cfg_.sampler == SamplerKind::ddpm) {
        for (int t = T; t >= 1; --t) step_ts_.push_back(t);
    } else {
        int k = cfg_.ddim_steps > 0 ? cfg_.ddim_steps : T;
        if (k < 1 || k > T || T % k != 0)
            throw ContractError("planner: ddim step count must divide the schedule length");
        int stride = T / k;
        for (int t = T; t >= stride; t -= stride) step_ts_.push_back(t);
        if (cfg_.eta < 0.0 || cfg_.eta > 1.0)
            throw ContractError("planner: eta must lie in [0, 1]");
    }
}

void Planner::eval_eps(const std::vector<float>& x, int t, const std::vector<int>& idx,
                       const std::vector<float>& tokens, std::vector<float>& eps) {
    const auto& mc = m_.model->config();
    const int* ip = idx.empty() ? nullptr : idx.data();
    const float* tp = tokens.empty() ? nullptr : tokens.data();
    bool cond = mc.mode != diff::CondMode::none;

    const float* e = m_.model->forward(x.data(), 1, &t, ip, tp, {0});
    eps.assign(e, e + x.size());
    if (!cond || cfg_.guidance == 0.0) return;

    // Second evaluation with the learned null token; the forward call reuses
    // its internal buffers, hence the copy above.
    eps_n_.assign(x.size(), 0.0f);
    const float* en = m_.model->forward(x.data(), 1, &t, ip, tp, {1});
    std::memcpy(eps_n_.data(), en, sizeof(float) * x.size());
    cfg_combine(eps.data(), eps_n_.data(), x.size(), cfg_.guidance, eps.data());
}

PlanResult Planner::plan(const std::vector<double>& obs, const std::vector<int>& idx,
                         const std::vector<float>& tokens, Rng& rng) {
    const auto& mc = m_.model->config();
    PlanResult out;
    out.d = mc.d;
    out.h = mc.horizon;
    out.d_state = m_.d_state;
    if (static_cast<int>(obs.size()) != m_.d_state)
        throw ContractError("plan: observation length does not match the model");
    if (mc.mode == diff::CondMode::none) {
        if (!idx.empty() || !tokens.empty())
            throw ContractError("plan: model is unconditioned but conditioning was given");
    } else if (mc.vocab > 0) {
        if (static_cast<int>(idx.size()) != mc.cond_tokens)
            throw ContractError("plan: expected one vocabulary index per token");
        if (!tokens.empty()) throw ContractError("plan: vocabulary model takes indices, not tokens");
    } else {
        if (static_cast<int>(tokens.size()) != mc.cond_tokens * mc.cond_dim)
            throw ContractError("plan: token payload does not match the model shape");
        if (!idx.empty()) throw ContractError("plan: token model takes tokens, not indices");
    }

    std::vector<float> mtok;
    if (!tokens.empty()) mtok = diff::tokens_to_model_layout(tokens, mc.cond_tokens, mc.cond_dim);

    std::vector<float> nobs(static_cast<std::size_t>(m_.d_state));
    for (int r = 0; r < m_.d_state; ++r)
        nobs[r] = static_cast<float>(m_.norm.normalize(r, obs[r]));

    std::size_t n = static_cast<std::size_t>(mc.d) * mc.horizon;
    std::vector<float> x(n), next(n);
    rng.fill_normal(x.data(), n);

    int T = m_.sched.T;
    for (std::size_t si = 0; si < step_ts_.size(); ++si) {
        int t = step_ts_[si];
        int t_prev = si + 1 < step_ts_.size() ? step_ts_[si + 1] : 0;
        inpaint_observation(x.data(), mc.d, mc.horizon, nobs.data(), m_.d_state);
        eval_eps(x, t, idx, mtok, eps_c_);

        if (cfg_.sampler == SamplerKind::ddpm) {
            const float* noise = nullptr;
            if (t > 1) {
                noise_.resize(n);
                rng.fill_normal(noise_.data(), n);
                noise = noise_.data();
            }
            ddpm_step(x.data(), eps_c_.data(), n, t, m_.sched, noise, cfg_.clip, kClipLo,
                      kClipHi, next.data());
        } else {
            double ab_t = m_.sched.alpha_bar[t];
            double ab_prev = m_.sched.alpha_bar[t_prev];
            double sigma = cfg_.eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab_t)) *
                           std::sqrt(1.0 - ab_t / ab_prev);
            const float* noise = nullptr;
            if (sigma > 0.0) {
                noise_.resize(n);
                rng.fill_normal(noise_.data(), n);
                noise = noise_.data();
            }
            ddim_step(x.data(), eps_c_.data(), n, t, t_prev, m_.sched, sigma, noise, cfg_.clip,
                      kClipLo, kClipHi, next.data());
        }
        x.swap(next);
        check_finite(x, t);
    }
    (void)T;

    inpaint_observation(x.data(), mc.d, mc.horizon, nobs.data(), m_.d_state);
    out.traj = std::move(x);
    out.action = action_at(out, m_.norm, 0);
    return out;
}

std::vector<double> Planner::denormalize_traj(const PlanResult& p) const {
    std::vector<double> out(p.traj.size());
    for (int r = 0; r < p.d; ++r)
        for (int c = 0; c < p.h; ++c)
            out[static_cast<std::size_t>(r) * p.h + c] =
                m_.norm.denormalize(r, p.traj[static_cast<std::size_t>(r) * p.h + c]);
    return out;
}

RolloutResult rollout_roundabout(env::RoundaboutEnv& env, Planner& planner,
                                 const comb::LatentVector& latent, std::uint64_t seed) {
    const auto& mc = planner.model().model->config();
    std::vector<int> idx;
    if (mc.mode != diff::CondMode::none) idx.assign(latent.begin(), latent.end());

    RolloutResult out;
    out.record.d_s = planner.model().d_state;
    out.record.d_a = 3;
    for (int v : latent) out.record.latent.push_back(static_cast<float>(v));

    std::vector<double> obs = env.reset(seed, latent);
    Rng prng(seed ^ 0x706c616eull);
    int every = planner.config().replan_every;
    PlanResult current;
    int cursor = 0;
    bool crashed = false;
    while (!env.done()) {
        bool need = out.plan_calls == 0 || cursor >= current.h ||
                    (every > 0 && cursor >= every);
        if (need) {
            current = planner.plan(obs, idx, {}, prng);
            ++out.plan_calls;
            cursor = 0;
        }
        float a0 = 0.0f, a1 = 0.0f, a2 = 0.0f;
        {
            const auto& norm = planner.model().norm;
            int ds = current.d_state;
            a0 = static_cast<float>(norm.denormalize(
                ds + 0, current.traj[static_cast<std::size_t>(ds + 0) * current.h + cursor]));
            a1 = static_cast<float>(norm.denormalize(
                ds + 1, current.traj[static_cast<std::size_t>(ds + 1) * current.h + cursor]));
            a2 = static_cast<float>(norm.denormalize(
                ds + 2, current.traj[static_cast<std::size_t>(ds + 2) * current.h + cursor]));
        }
        float block[3] = {a0, a1, a2};
        int a = argmax(block, 3);
        ++cursor;

        auto r = env.step(a);
        for (double v : obs) out.record.states.push_back(static_cast<float>(v));
        for (int k = 0; k < 3; ++k) out.record.actions.push_back(k == a ? 1.0f : 0.0f);
        out.record.rewards.push_back(static_cast<float>(r.reward));
        out.record.ret += static_cast<float>(r.reward);
        ++out.record.h;
        obs = r.obs;
        if (r.done) {
            out.record.success = r.success;
            crashed = r.crashed;
        }
    }
    out.crashed = crashed;
    return out;
}

RolloutResult rollout_skirmish(env::SkirmishEnv& env, Planner& planner,
                               const comb::LatentVector& team,
                               const comb::LatentVector& enemy, std::uint64_t seed) {
    const auto& mc = planner.model().model->config();
    std::vector<int> idx;
    if (mc.mode != diff::CondMode::none) idx.assign(team.begin(), team.end());

    int units = env.team_size();
    int per = env.n_actions();
    RolloutResult out;
    out.record.d_s = planner.model().d_state;
    out.record.d_a = units * per;
    for (int v : team) out.record.latent.push_back(static_cast<float>(v));

    env.reset(seed, team, enemy);
    Rng prng(seed ^ 0x706c616eull);
    int every = planner.config().replan_every;
    PlanResult current;
    int cursor = 0;
    while (!env.done()) {
        std::vector<double> state = env.global_state();
        bool need = out.plan_calls == 0 || cursor >= current.h ||
                    (every > 0 && cursor >= every);
        if (need) {
            current = planner.plan(state, idx, {}, prng);
            ++out.plan_calls;
            cursor = 0;
        }
        const auto& norm = planner.model().norm;
        std::vector<int> acts(units, 0);
        std::vector<float> block(static_cast<std::size_t>(per));
        for (int u = 0; u < units; ++u) {
            for (int k = 0; k < per; ++k) {
                int row = current.d_state + u * per + k;
                block[k] = static_cast<float>(norm.denormalize(
                    row, current.traj[static_cast<std::size_t>(row) * current.h + cursor]));
            }
            acts[u] = argmax(block.data(), per);
        }
        ++cursor;

        std::vector<bool> alive(static_cast<std::size_t>(units));
        for (int u = 0; u < units; ++u) alive[u] = env.unit(0, u).alive;
        auto r = env.step(acts);
        for (double v : state) out.record.states.push_back(static_cast<float>(v));
        for (int u = 0; u < units; ++u)
            for (int k = 0; k < per; ++k)
                out.record.actions.push_back(alive[u] && acts[u] == k ? 1.0f : 0.0f);
        out.record.rewards.push_back(static_cast<float>(r.reward));
        out.record.ret += static_cast<float>(r.reward);
        ++out.record.h;
        if (r.done) out.record.success = r.success;
    }
    return out;
}

std::vector<double> generate_maze_path(Planner& planner, const std::vector<float>& waypoints,
                                       const std::vector<double>& start, std::uint64_t seed) {
    const auto& mc = planner.model().model->config();
    std::vector<float> tokens;
    if (mc.mode != diff::CondMode::none) {
        if (static_cast<int>(waypoints.size()) != mc.cond_tokens * diff::kWaypointCoords)
            throw ContractError("generate_maze_path: waypoint count does not match the model");
        tokens = diff::waypoint_tokens(waypoints.data(), mc.cond_tokens);
    }
    Rng prng(seed ^ 0x6d617a65ull);
    PlanResult p = planner.plan(start, {}, tokens, prng);
    return planner.denormalize_traj(p);
}

data::RoundaboutPolicy diffusion_roundabout_policy(Planner& planner) {
    struct State {
        PlanResult plan;
        int cursor = 0;
        int calls = 0;
        int last_step = -1;
    };
    auto st = std::make_shared<State>();
    return [&planner, st](const env::RoundaboutEnv& env, Rng& rng) {
        const auto& mc = planner.model().model->config();
        std::vector<int> idx;
        if (mc.mode != diff::CondMode::none)
            idx.assign(env.latent().begin(), env.latent().end());
        // a fresh episode resets the cursor
        if (env.steps() <= st->last_step) st->calls = 0;
        st->last_step = env.steps();
        int every = planner.config().replan_every;
        bool need = st->calls == 0 || st->cursor >= st->plan.h ||
                    (every > 0 && st->cursor >= every);
        if (need) {
            st->plan = planner.plan(env.observation(), idx, {}, rng);
            ++st->calls;
            st->cursor = 0;
        }
        const auto& norm = planner.model().norm;
        int ds = st->plan.d_state;
        float block[3];
        for (int k = 0; k < 3; ++k)
            block[k] = static_cast<float>(norm.denormalize(
                ds + k,
                st->plan.traj[static_cast<std::size_t>(ds + k) * st->plan.h + st->cursor]));
        ++st->cursor;
        return argmax(block, 3);
    };
}

data::SkirmishPolicy diffusion_skirmish_policy(Planner& planner) {
    struct State {
        PlanResult plan;
        int cursor = 0;
        int calls = 0;
        int last_step = -1;
    };
    auto st = std::make_shared<State>();
    return [&planner, st](const env::SkirmishEnv& env, Rng& rng) {
        const auto& mc = planner.model().model->config();
        std::vector<int> idx;
        if (mc.mode != diff::CondMode::none)
            idx.assign(env.team_latent().begin(), env.team_latent().end());
        if (env.steps() <= st->last_step) st->calls = 0;
        st->last_step = env.steps();
        int every = planner.config().replan_every;
        bool need = st->calls == 0 || st->cursor >= st->plan.h ||
                    (every > 0 && st->cursor >= every);
        if (need) {
            st->plan = planner.plan(env.global_state(), idx, {}, rng);
            ++st->calls;
            st->cursor = 0;
        }
        const auto& norm = planner.model().norm;
        int units = env.team_size();
        int per = env.n_actions();
        std::vector<int> acts(units, 0);
        std::vector<float> block(static_cast<std::size_t>(per));
        for (int u = 0; u < units; ++u) {
            for (int k = 0; k < per; ++k) {
                int row = st->plan.d_state + u * per + k;
                block[k] = static_cast<float>(norm.denormalize(
                    row,
                    st->plan.traj[static_cast<std::size_t>(row) * st->plan.h + st->cursor]));
            }
            acts[u] = argmax(block.data(), per);
        }
        ++st->cursor;
        return acts;
    };
}

}  // namespace ooc::plan
