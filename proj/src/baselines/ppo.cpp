#include "ooc/baselines/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ooc/env/roundabout.hpp"
#include "ooc/util/errors.hpp"

namespace ooc::baselines {

std::vector<double> gae_advantages(const std::vector<double>& rewards,
                                   const std::vector<double>& values,
                                   double gamma, double lambda) {
  if (rewards.size() != values.size())
    throw ContractError("gae: rewards and values must align");
  std::size_t n = rewards.size();
  std::vector<double> adv(n, 0.0);
  double carry = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    double v_next = t + 1 < n ? values[t + 1] : 0.0;
    double delta = rewards[t] + gamma * v_next - values[t];
    carry = delta + gamma * lambda * carry;
    adv[t] = carry;
  }
  return adv;
}

void normalize_advantages(std::vector<double>& adv) {
  if (adv.size() < 2) return;
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= static_cast<double>(adv.size());
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  double std = std::sqrt(var / static_cast<double>(adv.size()));
  if (std < 1e-8) return;
  for (double& a : adv) a = (a - mean) / std;
}

double ppo_logp_grad(double ratio, double advantage, double clip) {
  double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  double unclipped_obj = ratio * advantage;
  double clipped_obj = clipped * advantage;
  if (unclipped_obj <= clipped_obj) return ratio * advantage;
  // min() selected the clipped branch; the clamp is flat outside the band.
  return (ratio > 1.0 - clip && ratio < 1.0 + clip) ? ratio * advantage : 0.0;
}

namespace {

struct Rollout {
  std::vector<float> obs;     // (n, d_s) row-major
  std::vector<int> actions;
  std::vector<double> logp;
  std::vector<double> adv;
  std::vector<double> ret;
  std::size_t size() const { return actions.size(); }
};

double eval_mean_return(PolicyMLP* policy, const data::LatentSource& latents,
                        const PPOConfig& cfg, Rng& act_rng) {
  env::RoundaboutEnv env;
  Rng latent_rng(cfg.seed ^ 0x6c617465ull);
  double total = 0.0;
  for (int e = 0; e < cfg.eval_episodes; ++e) {
    auto latent = latents(latent_rng);
    auto obs = env.reset(data::episode_seed(cfg.seed ^ 0x6576ull, e), latent);
    bool done = false;
    while (!done) {
      int a = policy ? policy->act(obs)
                     : static_cast<int>(act_rng.uniform_int(3));
      auto res = env.step(a);
      total += res.reward;
      obs = std::move(res.obs);
      done = res.done;
    }
  }
  return total / cfg.eval_episodes;
}

}  // namespace

PPOResult train_ppo_roundabout(const data::LatentSource& latents,
                               const PPOConfig& cfg) {
  env::RoundaboutEnv env;
  const int d_s = env.spec().d_s;
  const int k = env.spec().n_actions;

  PPOResult out;
  out.policy = std::make_unique<PolicyMLP>(d_s, k, true, cfg.hidden, cfg.seed);
  Mlp& actor = out.policy->net();
  std::vector<int> vw{d_s};
  vw.insert(vw.end(), cfg.hidden.begin(), cfg.hidden.end());
  vw.push_back(1);
  Mlp critic(vw, cfg.seed ^ 0x7666ull);

  Adam actor_opt(actor.params(), cfg.lr);
  Adam critic_opt(critic.params(), cfg.lr);
  Rng rng(cfg.seed ^ 0x70706full);

  Rng random_rng(cfg.seed ^ 0x726e64ull);
  out.random_eval = eval_mean_return(nullptr, latents, cfg, random_rng);
  std::vector<float> best_weights = actor.params().values;
  out.best_eval = -1e300;

  Rng latent_rng(cfg.seed ^ 0x706c6174ull);
  int episode_counter = 0;

  std::vector<float> xb, dlogits, dvalue;
  std::vector<double> ep_rewards, ep_values;

  for (int it = 0; it < cfg.iterations; ++it) {
    Rollout roll;
    while (static_cast<int>(roll.size()) < cfg.rollout_steps) {
      auto latent = latents(latent_rng);
      auto obs = env.reset(data::episode_seed(cfg.seed, episode_counter++),
                           latent);
      ep_rewards.clear();
      ep_values.clear();
      std::size_t ep_start = roll.size();
      bool done = false;
      while (!done) {
        auto logits = out.policy->logits(obs);
        double lse = 0.0;
        {
          double mx = *std::max_element(logits.begin(), logits.end());
          double z = 0.0;
          for (double v : logits) z += std::exp(v - mx);
          lse = std::log(z) + mx;
        }
        int a = out.policy->sample(obs, rng);
        double v = critic.eval(obs)[0];

        roll.obs.insert(roll.obs.end(), obs.begin(), obs.end());
        roll.actions.push_back(a);
        roll.logp.push_back(logits[static_cast<std::size_t>(a)] - lse);
        ep_values.push_back(v);

        auto res = env.step(a);
        ep_rewards.push_back(res.reward);
        obs = std::move(res.obs);
        done = res.done;
      }
      auto adv = gae_advantages(ep_rewards, ep_values, cfg.gamma,
                                cfg.gae_lambda);
      for (std::size_t t = 0; t < adv.size(); ++t) {
        roll.adv.push_back(adv[t]);
        roll.ret.push_back(adv[t] + ep_values[t]);
      }
      (void)ep_start;
    }

    // Minibatched clipped-surrogate epochs over the fresh rollout.
    std::size_t n = roll.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (int epoch = 0; epoch < cfg.n_epochs; ++epoch) {
      for (std::size_t i = n - 1; i > 0; --i)
        std::swap(order[i], order[rng.uniform_int(
                                static_cast<std::int64_t>(i + 1))]);
      for (std::size_t start = 0; start + 1 <= n; start += cfg.batch) {
        int b = static_cast<int>(
            std::min<std::size_t>(cfg.batch, n - start));
        if (b < 2) break;
        xb.resize(static_cast<std::size_t>(d_s) * b);
        dlogits.assign(static_cast<std::size_t>(k) * b, 0.0f);
        dvalue.resize(b);
        std::vector<double> mb_adv(b);
        for (int col = 0; col < b; ++col) {
          std::size_t row = order[start + col];
          for (int i = 0; i < d_s; ++i)
            xb[static_cast<std::size_t>(i) * b + col] =
                roll.obs[row * d_s + i];
          mb_adv[col] = roll.adv[row];
        }
        normalize_advantages(mb_adv);

        const float* logits = actor.forward(xb.data(), b);
        for (int col = 0; col < b; ++col) {
          std::size_t row = order[start + col];
          int a = roll.actions[row];
          double lse = logsumexp(logits + col, k, b);
          double logp_new =
              logits[static_cast<std::size_t>(a) * b + col] - lse;
          double ratio = std::exp(logp_new - roll.logp[row]);
          double g = ppo_logp_grad(ratio, mb_adv[col], cfg.clip);

          double entropy = 0.0;
          for (int i = 0; i < k; ++i) {
            double lp =
                logits[static_cast<std::size_t>(i) * b + col] - lse;
            entropy -= std::exp(lp) * lp;
          }
          for (int i = 0; i < k; ++i) {
            double lp =
                logits[static_cast<std::size_t>(i) * b + col] - lse;
            double p = std::exp(lp);
            double d = -g * ((i == a ? 1.0 : 0.0) - p);   // surrogate ascent
            d += cfg.ent_coef * p * (lp + entropy);       // entropy bonus
            dlogits[static_cast<std::size_t>(i) * b + col] =
                static_cast<float>(d / b);
          }
        }
        actor.backward(dlogits.data());
        actor_opt.step();
        actor.params().zero_grads();

        const float* v = critic.forward(xb.data(), b);
        double vloss = 0.0;
        for (int col = 0; col < b; ++col) {
          std::size_t row = order[start + col];
          double diff = v[col] - roll.ret[row];
          vloss += 0.5 * diff * diff;
          dvalue[col] = static_cast<float>(cfg.vf_coef * diff / b);
        }
        if (!std::isfinite(vloss))
          throw StateError("train_ppo: value loss diverged");
        critic.backward(dvalue.data());
        critic_opt.step();
        critic.params().zero_grads();
      }
    }

    Rng eval_rng(cfg.seed ^ 0x65767272ull);
    double score = eval_mean_return(out.policy.get(), latents, cfg, eval_rng);
    out.eval_history.push_back(score);
    if (score > out.best_eval) {
      out.best_eval = score;
      best_weights = actor.params().values;
    }
    if (cfg.log_every > 0 && (it + 1) % cfg.log_every == 0)
      std::fprintf(stderr, "ppo iter %d eval %.3f best %.3f\n", it + 1, score,
                   out.best_eval);
  }

  actor.params().values = best_weights;
  out.improved_over_random = out.best_eval > out.random_eval;
  if (!out.improved_over_random)
    std::fprintf(stderr,
                 "warning: ppo failed to beat the random baseline "
                 "(best %.3f vs random %.3f); returning best checkpoint\n",
                 out.best_eval, out.random_eval);
  return out;
}

}  // namespace ooc::baselines
