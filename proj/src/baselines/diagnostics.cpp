#include "ooc/baselines/diagnostics.hpp"

#include <cmath>

#include "ooc/env/roundabout.hpp"
#include "ooc/util/errors.hpp"

namespace ooc::baselines {

std::vector<double> returns_to_go(const std::vector<double>& rewards,
                                  double gamma) {
  std::vector<double> rtg(rewards.size(), 0.0);
  double carry = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    carry = rewards[t] + gamma * carry;
    rtg[t] = carry;
  }
  return rtg;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ContractError("pearson: length mismatch");
  std::size_t n = a.size();
  if (n < 2) return 0.0;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (va < 1e-12 || vb < 1e-12) return 0.0;
  return cov / std::sqrt(va * vb);
}

namespace {

struct RegimeStats {
  std::vector<RTGSeries> series;
  double mean_q = 0.0, mean_rtg = 0.0, mean_gap = 0.0, corr = 0.0;
};

RegimeStats run_regime(QNetwork& qnet, const data::RoundaboutPolicy& policy,
                       const data::LatentSource& latents, bool ooc,
                       int episodes, double gamma, std::uint64_t seed) {
  RegimeStats stats;
  env::RoundaboutEnv env;
  Rng latent_rng(seed ^ 0x6c6174ull);
  Rng act_rng(seed ^ 0x616374ull);
  std::vector<double> all_q, all_rtg;

  for (int e = 0; e < episodes; ++e) {
    auto latent = latents(latent_rng);
    auto obs = env.reset(data::episode_seed(seed, e), latent);
    RTGSeries tr;
    tr.ooc = ooc;
    std::vector<double> rewards;
    bool done = false;
    while (!done) {
      int a = policy(env, act_rng);
      tr.predicted_q.push_back(qnet.q_values(obs)[static_cast<std::size_t>(a)]);
      auto res = env.step(a);
      rewards.push_back(res.reward);
      tr.episode_return += res.reward;
      tr.success = res.success;
      obs = std::move(res.obs);
      done = res.done;
    }
    tr.realized_rtg = returns_to_go(rewards, gamma);
    all_q.insert(all_q.end(), tr.predicted_q.begin(), tr.predicted_q.end());
    all_rtg.insert(all_rtg.end(), tr.realized_rtg.begin(),
                   tr.realized_rtg.end());
    stats.series.push_back(std::move(tr));
  }

  double n = static_cast<double>(all_q.size());
  for (std::size_t i = 0; i < all_q.size(); ++i) {
    stats.mean_q += all_q[i] / n;
    stats.mean_rtg += all_rtg[i] / n;
    stats.mean_gap += std::abs(all_q[i] - all_rtg[i]) / n;
  }
  stats.corr = pearson(all_q, all_rtg);
  return stats;
}

}  // namespace

QDiagnostics diagnose_q_vs_rtg(QNetwork& qnet,
                               const data::RoundaboutPolicy& policy,
                               const data::LatentSource& id_latents,
                               const data::LatentSource& ooc_latents,
                               int episodes_per_regime, double gamma,
                               std::uint64_t seed) {
  if (episodes_per_regime < 1)
    throw ContractError("diagnose_q_vs_rtg: need at least one episode");

  auto id = run_regime(qnet, policy, id_latents, false, episodes_per_regime,
                       gamma, seed ^ 0x6964ull);
  auto ooc = run_regime(qnet, policy, ooc_latents, true, episodes_per_regime,
                        gamma, seed ^ 0x6f6f63ull);

  QDiagnostics d;
  d.id_series = std::move(id.series);
  d.ooc_series = std::move(ooc.series);
  d.mean_q_id = id.mean_q;
  d.mean_q_ooc = ooc.mean_q;
  d.mean_rtg_id = id.mean_rtg;
  d.mean_rtg_ooc = ooc.mean_rtg;
  d.mean_abs_gap_id = id.mean_gap;
  d.mean_abs_gap_ooc = ooc.mean_gap;
  d.corr_id = id.corr;
  d.corr_ooc = ooc.corr;
  return d;
}

}  // namespace ooc::baselines
