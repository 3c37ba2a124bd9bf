#include "ooc/data/dataset.hpp"

#include <zlib.h>

#include <cmath>
#include <fstream>

#include "ooc/util/errors.hpp"

namespace ooc::data {

namespace {

constexpr const char* kFormat = "ooc-dataset-v1";
const std::vector<std::string> kLayout = {"states", "actions", "rewards",
                                          "latent", "success", "return"};

std::size_t record_floats(const DatasetMeta& m) {
  return static_cast<std::size_t>(m.h) * (m.d_s + m.d_a + 1) + m.latent_len + 2;
}

std::uint32_t blob_crc(const std::vector<float>& blob) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(blob.data()),
            static_cast<uInt>(blob.size() * sizeof(float))));
}

}  // namespace

void TrajectoryRecord::validate() const {
  if (h <= 0 || d_s <= 0 || d_a < 0)
    throw ContractError("trajectory record: bad dimensions");
  if (states.size() != static_cast<std::size_t>(h) * d_s)
    throw ContractError("trajectory record: state row count mismatch");
  if (actions.size() != static_cast<std::size_t>(h) * d_a)
    throw ContractError("trajectory record: action row count mismatch");
  if (rewards.size() != static_cast<std::size_t>(h))
    throw ContractError("trajectory record: reward count mismatch");
}

void compute_stats(Dataset& ds) {
  const int dim = ds.meta.d_s + ds.meta.d_a;
  ds.mins.assign(dim, std::numeric_limits<double>::infinity());
  ds.maxs.assign(dim, -std::numeric_limits<double>::infinity());
  std::vector<double> sum(dim, 0.0), sq(dim, 0.0);
  std::size_t rows = 0;
  for (const auto& rec : ds.records) {
    for (int t = 0; t < rec.h; ++t) {
      for (int c = 0; c < dim; ++c) {
        double v = c < ds.meta.d_s
                       ? rec.states[static_cast<std::size_t>(t) * ds.meta.d_s + c]
                       : rec.actions[static_cast<std::size_t>(t) * ds.meta.d_a +
                                     (c - ds.meta.d_s)];
        ds.mins[c] = std::min(ds.mins[c], v);
        ds.maxs[c] = std::max(ds.maxs[c], v);
        sum[c] += v;
        sq[c] += v * v;
      }
      ++rows;
    }
  }
  if (rows == 0) throw ContractError("dataset stats: no rows");
  ds.means.assign(dim, 0.0);
  ds.stds.assign(dim, 0.0);
  for (int c = 0; c < dim; ++c) {
    ds.means[c] = sum[c] / static_cast<double>(rows);
    double var = sq[c] / static_cast<double>(rows) - ds.means[c] * ds.means[c];
    ds.stds[c] = std::sqrt(std::max(0.0, var));
  }
}

Normalizer dataset_normalizer(const Dataset& ds) {
  if (ds.mins.empty())
    throw ContractError("dataset normalizer: stats not computed");
  return Normalizer(ds.mins, ds.maxs);
}

void write_dataset(const Dataset& ds, const std::string& stem) {
  if (ds.records.empty()) throw ContractError("write_dataset: no records");
  const DatasetMeta& m = ds.meta;
  for (const auto& rec : ds.records) {
    rec.validate();
    if (rec.h != m.h || rec.d_s != m.d_s || rec.d_a != m.d_a ||
        rec.latent.size() != static_cast<std::size_t>(m.latent_len))
      throw ContractError("write_dataset: record disagrees with manifest");
  }

  Dataset tmp = ds;
  compute_stats(tmp);

  std::vector<float> blob;
  blob.reserve(ds.records.size() * record_floats(m));
  for (const auto& rec : ds.records) {
    blob.insert(blob.end(), rec.states.begin(), rec.states.end());
    blob.insert(blob.end(), rec.actions.begin(), rec.actions.end());
    blob.insert(blob.end(), rec.rewards.begin(), rec.rewards.end());
    blob.insert(blob.end(), rec.latent.begin(), rec.latent.end());
    blob.push_back(rec.success ? 1.0f : 0.0f);
    blob.push_back(rec.ret);
  }

  nlohmann::json j;
  j["format"] = kFormat;
  j["env"] = m.env;
  j["expert"] = m.expert;
  j["scenario"] = m.scenario;
  j["success_definition"] = m.success_definition;
  j["notes"] = m.notes;
  j["d_s"] = m.d_s;
  j["d_a"] = m.d_a;
  j["h"] = m.h;
  j["latent_kind"] = m.latent_kind;
  j["latent_len"] = m.latent_len;
  j["vocabulary"] = m.vocabulary;
  j["n_slots"] = m.n_slots;
  j["n_records"] = ds.records.size();
  j["layout"] = kLayout;
  j["stats"] = {{"min", tmp.mins},
                {"max", tmp.maxs},
                {"mean", tmp.means},
                {"std", tmp.stds}};
  j["blob_bytes"] = blob.size() * sizeof(float);
  j["blob_crc32"] = blob_crc(blob);

  std::ofstream jf(stem + ".json");
  if (!jf) throw LoadError("write_dataset: cannot open " + stem + ".json");
  jf << j.dump(1) << "\n";
  std::ofstream bf(stem + ".bin", std::ios::binary);
  if (!bf) throw LoadError("write_dataset: cannot open " + stem + ".bin");
  bf.write(reinterpret_cast<const char*>(blob.data()),
           static_cast<std::streamsize>(blob.size() * sizeof(float)));
  if (!bf) throw LoadError("write_dataset: short write to " + stem + ".bin");
}

Dataset read_dataset(const std::string& stem) {
  std::ifstream jf(stem + ".json");
  if (!jf) throw LoadError("read_dataset: cannot open " + stem + ".json");
  nlohmann::json j;
  try {
    jf >> j;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("read_dataset: bad manifest: ") + e.what());
  }

  Dataset ds;
  try {
    if (j.at("format").get<std::string>() != kFormat)
      throw LoadError("read_dataset: unknown format tag");
    DatasetMeta& m = ds.meta;
    m.env = j.at("env").get<std::string>();
    m.expert = j.at("expert").get<std::string>();
    m.scenario = j.at("scenario").get<std::string>();
    m.success_definition = j.at("success_definition").get<std::string>();
    m.notes = j.value("notes", std::string());
    m.d_s = j.at("d_s").get<int>();
    m.d_a = j.at("d_a").get<int>();
    m.h = j.at("h").get<int>();
    m.latent_kind = j.at("latent_kind").get<std::string>();
    m.latent_len = j.at("latent_len").get<int>();
    m.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    m.n_slots = j.at("n_slots").get<int>();
    if (j.at("layout").get<std::vector<std::string>>() != kLayout)
      throw LoadError("read_dataset: unexpected record layout");
    ds.mins = j.at("stats").at("min").get<std::vector<double>>();
    ds.maxs = j.at("stats").at("max").get<std::vector<double>>();
    ds.means = j.at("stats").at("mean").get<std::vector<double>>();
    ds.stds = j.at("stats").at("std").get<std::vector<double>>();

    if (m.d_s <= 0 || m.d_a < 0 || m.h <= 0 || m.latent_len < 0)
      throw LoadError("read_dataset: nonsensical dimensions");
    const int dim = m.d_s + m.d_a;
    if (ds.mins.size() != static_cast<std::size_t>(dim) ||
        ds.maxs.size() != static_cast<std::size_t>(dim) ||
        ds.means.size() != static_cast<std::size_t>(dim) ||
        ds.stds.size() != static_cast<std::size_t>(dim))
      throw LoadError("read_dataset: stats dimension mismatch");

    const std::size_t n = j.at("n_records").get<std::size_t>();
    const std::size_t expect_bytes =
        n * record_floats(m) * sizeof(float);
    if (j.at("blob_bytes").get<std::size_t>() != expect_bytes)
      throw LoadError("read_dataset: manifest blob size inconsistent");

    std::ifstream bf(stem + ".bin", std::ios::binary | std::ios::ate);
    if (!bf) throw LoadError("read_dataset: cannot open " + stem + ".bin");
    const std::size_t actual = static_cast<std::size_t>(bf.tellg());
    if (actual != expect_bytes)
      throw LoadError("read_dataset: blob is " + std::to_string(actual) +
                      " bytes, manifest expects " + std::to_string(expect_bytes));
    bf.seekg(0);
    std::vector<float> blob(expect_bytes / sizeof(float));
    bf.read(reinterpret_cast<char*>(blob.data()),
            static_cast<std::streamsize>(expect_bytes));
    if (!bf) throw LoadError("read_dataset: short read from " + stem + ".bin");
    if (blob_crc(blob) != j.at("blob_crc32").get<std::uint32_t>())
      throw LoadError("read_dataset: checksum mismatch, blob is corrupt");

    ds.records.reserve(n);
    const float* p = blob.data();
    for (std::size_t i = 0; i < n; ++i) {
      TrajectoryRecord rec;
      rec.h = m.h;
      rec.d_s = m.d_s;
      rec.d_a = m.d_a;
      rec.states.assign(p, p + static_cast<std::size_t>(m.h) * m.d_s);
      p += static_cast<std::size_t>(m.h) * m.d_s;
      rec.actions.assign(p, p + static_cast<std::size_t>(m.h) * m.d_a);
      p += static_cast<std::size_t>(m.h) * m.d_a;
      rec.rewards.assign(p, p + m.h);
      p += m.h;
      rec.latent.assign(p, p + m.latent_len);
      p += m.latent_len;
      if (*p != 0.0f && *p != 1.0f)
        throw LoadError("read_dataset: success flag is not boolean");
      rec.success = *p++ == 1.0f;
      rec.ret = *p++;
      ds.records.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("read_dataset: bad manifest: ") + e.what());
  }
  return ds;
}

std::vector<TrajectoryRecord> window_records(
    const std::vector<TrajectoryRecord>& episodes, int h, int stride) {
  if (h <= 0 || stride <= 0)
    throw ContractError("window_records: h and stride must be positive");
  std::vector<TrajectoryRecord> out;
  for (const auto& ep : episodes) {
    ep.validate();
    if (ep.h < h) continue;
    std::vector<int> starts;
    for (int s = 0; s + h <= ep.h; s += stride) starts.push_back(s);
    if (starts.empty() || starts.back() != ep.h - h)
      starts.push_back(ep.h - h);  // keep the terminal segment
    for (int s : starts) {
      TrajectoryRecord w;
      w.h = h;
      w.d_s = ep.d_s;
      w.d_a = ep.d_a;
      w.states.assign(
          ep.states.begin() + static_cast<std::size_t>(s) * ep.d_s,
          ep.states.begin() + static_cast<std::size_t>(s + h) * ep.d_s);
      w.actions.assign(
          ep.actions.begin() + static_cast<std::size_t>(s) * ep.d_a,
          ep.actions.begin() + static_cast<std::size_t>(s + h) * ep.d_a);
      w.rewards.assign(ep.rewards.begin() + s, ep.rewards.begin() + s + h);
      w.latent = ep.latent;
      w.success = ep.success;
      w.ret = 0.0f;
      for (float r : w.rewards) w.ret += r;
      out.push_back(std::move(w));
    }
  }
  return out;
}

std::uint64_t episode_seed(std::uint64_t base_seed, int episode) {
  return base_seed * 1000003ull + static_cast<std::uint64_t>(episode);
}

std::vector<TrajectoryRecord> collect_roundabout(
    std::uint64_t base_seed, int episodes, Keep keep,
    const LatentSource& latents, const RoundaboutPolicy& policy,
    CollectStats* stats) {
  std::vector<TrajectoryRecord> out;
  env::RoundaboutEnv env;
  int successes = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    std::uint64_t eseed = episode_seed(base_seed, ep);
    Rng prng(eseed ^ 0x706f6c696379ull);
    comb::LatentVector z = latents(prng);
    std::vector<double> obs = env.reset(eseed, z);

    TrajectoryRecord rec;
    rec.d_s = env.spec().d_s;
    rec.d_a = env.spec().d_a;
    for (int v : z) rec.latent.push_back(static_cast<float>(v));
    bool success = false;
    while (!env.done()) {
      int a = policy(env, prng);
      auto r = env.step(a);
      for (double v : obs) rec.states.push_back(static_cast<float>(v));
      for (int k = 0; k < rec.d_a; ++k)
        rec.actions.push_back(k == a ? 1.0f : 0.0f);
      rec.rewards.push_back(static_cast<float>(r.reward));
      rec.ret += static_cast<float>(r.reward);
      obs = r.obs;
      ++rec.h;
      if (r.done) success = r.success;
    }
    rec.success = success;
    successes += success ? 1 : 0;
    if (keep == Keep::all || success) out.push_back(std::move(rec));
  }
  if (stats) {
    stats->episodes = episodes;
    stats->successes = successes;
  }
  if (out.empty())
    throw StateError("collect_roundabout: no episodes to keep after budget");
  return out;
}

std::vector<TrajectoryRecord> collect_skirmish(
    std::uint64_t base_seed, int episodes, Keep keep,
    const LatentSource& team_latents, const LatentSource& enemy_latents,
    const SkirmishPolicy& policy, CollectStats* stats) {
  std::vector<TrajectoryRecord> out;
  int successes = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    std::uint64_t eseed = episode_seed(base_seed, ep);
    Rng prng(eseed ^ 0x706f6c696379ull);
    env::SkirmishEnv env;
    comb::LatentVector team = team_latents(prng);
    comb::LatentVector foes = enemy_latents ? enemy_latents(prng) : team;
    env.reset(eseed, team, foes);

    TrajectoryRecord rec;
    rec.d_s = env.state_dim();
    rec.d_a = env.team_size() * env.n_actions();
    for (int v : team) rec.latent.push_back(static_cast<float>(v));
    bool success = false;
    while (!env.done()) {
      std::vector<double> state = env.global_state();
      std::vector<int> acts = policy(env, prng);
      std::vector<bool> alive(static_cast<std::size_t>(env.team_size()));
      for (int i = 0; i < env.team_size(); ++i) alive[i] = env.unit(0, i).alive;
      auto r = env.step(acts);

      for (double v : state) rec.states.push_back(static_cast<float>(v));
      for (int i = 0; i < env.team_size(); ++i)
        for (int k = 0; k < env.n_actions(); ++k)
          rec.actions.push_back(alive[i] && acts[i] == k ? 1.0f : 0.0f);
      rec.rewards.push_back(static_cast<float>(r.reward));
      rec.ret += static_cast<float>(r.reward);
      ++rec.h;
      if (r.done) success = r.success;
    }
    rec.success = success;
    successes += success ? 1 : 0;
    if (keep == Keep::all || success) out.push_back(std::move(rec));
  }
  if (stats) {
    stats->episodes = episodes;
    stats->successes = successes;
  }
  if (out.empty())
    throw StateError("collect_skirmish: no episodes to keep after budget");
  return out;
}

std::vector<TrajectoryRecord> collect_maze(const env::MazeGrid& grid,
                                           std::uint64_t base_seed,
                                           int trajectories, int h) {
  std::vector<TrajectoryRecord> out;
  out.reserve(static_cast<std::size_t>(trajectories));
  for (int i = 0; i < trajectories; ++i) {
    env::MazeTrajectory traj =
        env::maze_generate_expert(grid, episode_seed(base_seed, i), h);
    TrajectoryRecord rec;
    rec.h = h;
    rec.d_s = 4;
    rec.d_a = 0;
    rec.states.assign(traj.states.begin(), traj.states.end());
    rec.rewards.assign(static_cast<std::size_t>(h), 0.0f);
    for (const auto& wp : env::extract_waypoints(traj, 3))
      for (double v : wp) rec.latent.push_back(static_cast<float>(v));
    rec.success = true;
    out.push_back(std::move(rec));
  }
  return out;
}

namespace {

std::vector<comb::LatentVector> all_latents(int vocab, int n) {
  std::vector<comb::LatentVector> out;
  comb::LatentVector z(static_cast<std::size_t>(n), 0);
  while (true) {
    out.push_back(z);
    int i = n - 1;
    while (i >= 0 && ++z[static_cast<std::size_t>(i)] == vocab) {
      z[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
  }
  return out;
}

}  // namespace

SplitSpec make_split(const std::string& scenario,
                     const comb::ElementVocabulary& vocab) {
  SplitSpec spec;
  spec.scenario = scenario;
  if (scenario == "simple" || scenario == "hard") {
    if (vocab.size() != 3)
      throw ContractError("make_split: team scenarios need 3 unit types");
    const int n = 3;
    std::vector<comb::LatentVector> uniform, mixed;
    for (const auto& z : all_latents(vocab.size(), n)) {
      bool uni = true;
      for (int v : z) uni = uni && v == z[0];
      (uni ? uniform : mixed).push_back(z);
    }
    std::vector<comb::LatentVector> everything = all_latents(vocab.size(), n);
    if (scenario == "simple") {
      spec.train = comb::DiscreteSupport(vocab, n, everything);
      spec.test = comb::DiscreteSupport(vocab, n, uniform);
    } else {
      spec.train = comb::DiscreteSupport(vocab, n, uniform);
      spec.test = comb::DiscreteSupport(vocab, n, mixed);
    }
    return spec;
  }
  if (scenario == "roundabout") {
    if (vocab.size() != 2)
      throw ContractError("make_split: roundabout needs the car/bike vocabulary");
    const int n = 5;
    comb::LatentVector all_cars(5, 0);
    comb::LatentVector car_bikes{0, 1, 1, 1, 1};
    std::vector<comb::LatentVector> test;
    for (const auto& z : all_latents(2, 4)) {
      comb::LatentVector full{0};
      full.insert(full.end(), z.begin(), z.end());
      if (full != all_cars && full != car_bikes) test.push_back(full);
    }
    spec.train = comb::DiscreteSupport(vocab, n, {all_cars, car_bikes});
    spec.test = comb::DiscreteSupport(vocab, n, test);
    return spec;
  }
  if (scenario == "maze")
    throw ContractError("make_split: maze split needs grid geometry, use make_maze_split");
  throw ContractError("make_split: unknown scenario " + scenario);
}

int maze_quadrant(const env::MazeGrid& grid, double x, double y) {
  double mx = grid.cols / 2.0, my = grid.rows / 2.0;
  return (y >= my ? 2 : 0) + (x >= mx ? 1 : 0);
}

comb::LatentVector maze_signature(const env::MazeGrid& grid,
                                  const std::vector<float>& waypoint_latent) {
  if (waypoint_latent.size() != 12)
    throw ContractError("maze_signature: expected 3 waypoints of 4 values");
  comb::LatentVector sig;
  for (int j = 0; j < 3; ++j)
    sig.push_back(maze_quadrant(grid, waypoint_latent[4 * j],
                                waypoint_latent[4 * j + 1]));
  return sig;
}

SplitSpec make_maze_split(const env::MazeGrid& grid) {
  comb::ElementVocabulary quadrants({"q0", "q1", "q2", "q3"});
  std::vector<comb::LatentVector> train, test;
  for (const auto& sig : all_latents(4, 3)) {
    if (sig[0] == 3 && sig[2] == 0)
      test.push_back(sig);
    else
      train.push_back(sig);
  }

  SplitSpec spec;
  spec.scenario = "maze";
  spec.train = comb::DiscreteSupport(quadrants, 3, train);
  spec.test = comb::DiscreteSupport(quadrants, 3, test);
  spec.continuous = true;

  double mx = grid.cols / 2.0, my = grid.rows / 2.0;
  double xhi = grid.cols - 1.0, yhi = grid.rows - 1.0;
  auto sample_in = [mx, my, xhi, yhi](int q, Rng& rng, std::vector<double>& w) {
    double xlo = (q & 1) ? mx : 1.0;
    double xh = (q & 1) ? xhi : mx;
    double ylo = (q & 2) ? my : 1.0;
    double yh = (q & 2) ? yhi : my;
    w.push_back(rng.uniform(xlo, xh));
    w.push_back(rng.uniform(ylo, yh));
    w.push_back(rng.uniform(-env::MazeControl::kVmax, env::MazeControl::kVmax));
    w.push_back(rng.uniform(-env::MazeControl::kVmax, env::MazeControl::kVmax));
  };
  // regions own a copy of the grid geometry so they outlive the caller's
  auto make_region = [grid, sample_in](comb::DiscreteSupport sup) {
    comb::ContinuousSupportRegion region;
    region.n = 3;
    region.contains = [grid, sup](const std::vector<double>& w) {
      if (w.size() != 12) return false;
      comb::LatentVector sig;
      for (int j = 0; j < 3; ++j)
        sig.push_back(maze_quadrant(grid, w[4 * j], w[4 * j + 1]));
      return sup.contains(sig);
    };
    std::vector<comb::LatentVector> members(sup.members().begin(),
                                            sup.members().end());
    region.sample = [members, sample_in](Rng& rng) {
      const auto& sig = members[static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(members.size())))];
      std::vector<double> w;
      w.reserve(12);
      for (int q : sig) sample_in(q, rng, w);
      return w;
    };
    return region;
  };
  spec.train_region = make_region(spec.train);
  spec.test_region = make_region(spec.test);
  return spec;
}

}  // namespace ooc::data
