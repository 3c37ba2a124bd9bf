#pragma once

#include <cstdint>
#include <vector>

#include "ooc/baselines/mlp.hpp"
#include "ooc/data/dataset.hpp"

namespace ooc::baselines {

// Per-episode trace pairing the value the Q head predicted for the taken
// action with the discounted return actually realized from that step on.
struct RTGSeries {
  std::vector<double> predicted_q;
  std::vector<double> realized_rtg;
  bool ooc = false;
  double episode_return = 0.0;  // undiscounted, for reporting
  bool success = false;
};

struct QDiagnostics {
  std::vector<RTGSeries> id_series, ooc_series;
  double mean_q_id = 0.0, mean_q_ooc = 0.0;
  double mean_rtg_id = 0.0, mean_rtg_ooc = 0.0;
  double mean_abs_gap_id = 0.0, mean_abs_gap_ooc = 0.0;
  double corr_id = 0.0, corr_ooc = 0.0;
};

// Discounted returns-to-go by the exact backward recursion
// rtg_t = r_t + gamma * rtg_{t+1}, rtg_h = 0.
std::vector<double> returns_to_go(const std::vector<double>& rewards,
                                  double gamma);

// Pearson correlation; 0 when either side is degenerate (fewer than two
// points or zero variance).
double pearson(const std::vector<double>& a, const std::vector<double>& b);

// Rolls the supplied behavior policy through both latent regimes, recording
// the Q head's prediction for each taken action and the realized RTG, then
// summarizes per-regime means, mean |Q - RTG|, and correlations (pooled over
// all steps of a regime).
QDiagnostics diagnose_q_vs_rtg(QNetwork& qnet,
                               const data::RoundaboutPolicy& policy,
                               const data::LatentSource& id_latents,
                               const data::LatentSource& ooc_latents,
                               int episodes_per_regime, double gamma,
                               std::uint64_t seed);

}  // namespace ooc::baselines
