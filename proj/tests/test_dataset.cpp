#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "ooc/data/dataset.hpp"
#include "ooc/util/errors.hpp"

using namespace ooc::data;
using ooc::ContractError;
using ooc::LoadError;
using ooc::Rng;
using ooc::StateError;
using ooc::comb::DiscreteSupport;
using ooc::comb::ElementVocabulary;
using ooc::comb::LatentVector;

namespace {

std::string temp_stem(const char* tag) {
  return (std::filesystem::temp_directory_path() /
          (std::string("ooc_ds_") + tag))
      .string();
}

TrajectoryRecord synthetic_episode(int h, int d_s, int d_a, float base) {
  TrajectoryRecord rec;
  rec.h = h;
  rec.d_s = d_s;
  rec.d_a = d_a;
  for (int t = 0; t < h; ++t) {
    for (int c = 0; c < d_s; ++c)
      rec.states.push_back(base + 10.0f * t + c);
    for (int c = 0; c < d_a; ++c)
      rec.actions.push_back(base - 10.0f * t - c);
    rec.rewards.push_back(base + t);
    rec.ret += base + t;
  }
  rec.latent = {1.0f, 0.0f};
  rec.success = true;
  return rec;
}

int always_idle(const ooc::env::RoundaboutEnv&, Rng&) { return 2; }

Dataset tiny_roundabout_dataset(int episodes) {
  Dataset ds;
  ds.meta.env = "roundabout";
  ds.meta.expert = "idle";
  ds.meta.scenario = "none";
  ds.meta.success_definition = "crash-free full episode";
  ds.meta.d_s = 25;
  ds.meta.d_a = 3;
  ds.meta.h = 12;
  ds.meta.latent_kind = "discrete";
  ds.meta.latent_len = 5;
  ds.meta.vocabulary = {"car", "bike"};
  ds.meta.n_slots = 5;
  auto latents = [](Rng&) { return LatentVector{0, 0, 0, 0, 0}; };
  ds.records = collect_roundabout(77, episodes, Keep::successes_only, latents,
                                  always_idle);
  return ds;
}

}  // namespace

TEST_CASE("window extraction slices episodes with a terminal-aligned tail") {
  std::vector<TrajectoryRecord> eps{synthetic_episode(12, 3, 2, 100.0f)};
  auto w1 = window_records(eps, 8, 2);
  REQUIRE(w1.size() == 3);  // starts 0, 2, 4 (4 is already flush)
  for (std::size_t i = 0; i < w1.size(); ++i) {
    int start = static_cast<int>(i) * 2;
    CHECK(w1[i].h == 8);
    CHECK(w1[i].states[0] == 100.0f + 10.0f * start);
    CHECK(w1[i].actions[0] == 100.0f - 10.0f * start);
    CHECK(w1[i].rewards[0] == 100.0f + start);
    float ret = 0.0f;
    for (float r : w1[i].rewards) ret += r;
    CHECK(w1[i].ret == ret);
    CHECK(w1[i].latent == eps[0].latent);
  }

  auto w2 = window_records(eps, 8, 5);
  REQUIRE(w2.size() == 2);  // start 0, then flush window at 4
  CHECK(w2[1].states[0] == 140.0f);

  // too-short episodes are dropped entirely
  std::vector<TrajectoryRecord> tiny{synthetic_episode(5, 3, 2, 0.0f)};
  CHECK(window_records(tiny, 8, 2).empty());
  CHECK_THROWS_AS(window_records(tiny, 0, 2), ContractError);
}

TEST_CASE("roundabout collection tags records and honors the keep filter") {
  auto latents = [](Rng&) { return LatentVector{0, 0, 0, 0, 0}; };
  CollectStats all_stats;
  auto all = collect_roundabout(77, 50, Keep::all, latents, always_idle,
                                &all_stats);
  CHECK(all.size() == 50);
  CHECK(all_stats.episodes == 50);

  int recount = 0;
  for (const auto& rec : all) recount += rec.success ? 1 : 0;
  CHECK(recount == all_stats.successes);

  CollectStats kept_stats;
  auto kept = collect_roundabout(77, 50, Keep::successes_only, latents,
                                 always_idle, &kept_stats);
  CHECK(static_cast<int>(kept.size()) == recount);
  for (const auto& rec : kept) {
    CHECK(rec.success);
    CHECK(rec.h == 12);
    CHECK(rec.d_s == 25);
    CHECK(rec.d_a == 3);
    REQUIRE(rec.latent.size() == 5);
    for (float v : rec.latent) CHECK(v == 0.0f);
    // idle policy: every action row is the one-hot of action 2
    for (int t = 0; t < rec.h; ++t) {
      CHECK(rec.actions[t * 3 + 0] == 0.0f);
      CHECK(rec.actions[t * 3 + 1] == 0.0f);
      CHECK(rec.actions[t * 3 + 2] == 1.0f);
    }
  }

  // stored first row equals a fresh replay of the recorded episode seed
  ooc::env::RoundaboutEnv env;
  auto obs = env.reset(episode_seed(77, 0), {0, 0, 0, 0, 0});
  for (int c = 0; c < 25; ++c)
    CHECK(all[0].states[c] == static_cast<float>(obs[c]));
}

TEST_CASE("skirmish collection produces planner-shaped episodes") {
  auto team = [](Rng& r) {
    int t = static_cast<int>(r.uniform_int(3));
    return LatentVector{t, t, t};
  };
  auto foes = [](Rng&) { return LatentVector{1, 1, 1}; };
  auto policy = [](const ooc::env::SkirmishEnv& env, Rng& r) {
    std::vector<int> acts;
    for (int i = 0; i < env.team_size(); ++i)
      acts.push_back(static_cast<int>(r.uniform_int(env.n_actions())));
    return acts;
  };
  auto eps = collect_skirmish(31, 30, Keep::all, team, foes, policy);
  CHECK(eps.size() == 30);
  for (const auto& rec : eps) {
    rec.validate();
    CHECK(rec.d_s == 48);
    CHECK(rec.d_a == 24);
    CHECK(rec.h <= 80);
    CHECK(rec.h >= 1);
    REQUIRE(rec.latent.size() == 3);
    CHECK(rec.latent[0] == rec.latent[1]);
    CHECK(rec.latent[1] == rec.latent[2]);
    float ret = 0.0f;
    for (float r : rec.rewards) ret += r;
    CHECK(rec.ret == doctest::Approx(ret).epsilon(1e-5));
    // each unit's action block is one-hot or all zero (dead)
    for (int t = 0; t < rec.h; ++t)
      for (int u = 0; u < 3; ++u) {
        float sum = 0.0f;
        for (int k = 0; k < 8; ++k) sum += rec.actions[(t * 3 + u) * 8 + k];
        CHECK((sum == 0.0f || sum == 1.0f));
      }
  }
}

TEST_CASE("maze collection stores waypoint latents straight off the states") {
  auto grid = ooc::env::load_maze("medium");
  auto recs = collect_maze(grid, 5, 10, 256);
  REQUIRE(recs.size() == 10);
  for (const auto& rec : recs) {
    CHECK(rec.h == 256);
    CHECK(rec.d_s == 4);
    CHECK(rec.d_a == 0);
    REQUIRE(rec.latent.size() == 12);
    for (int j = 0; j < 3; ++j) {
      int idx = 64 * (j + 1);
      CHECK(std::memcmp(rec.latent.data() + 4 * j,
                        rec.states.data() + idx * 4, 4 * sizeof(float)) == 0);
    }
    CHECK(rec.success);
  }
}

TEST_CASE("dataset round trip is field-for-field exact") {
  Dataset ds = tiny_roundabout_dataset(20);
  std::string stem = temp_stem("roundtrip");
  write_dataset(ds, stem);

  Dataset back = read_dataset(stem);
  CHECK(back.meta.env == "roundabout");
  CHECK(back.meta.expert == "idle");
  CHECK(back.meta.d_s == 25);
  CHECK(back.meta.d_a == 3);
  CHECK(back.meta.h == 12);
  CHECK(back.meta.latent_kind == "discrete");
  CHECK(back.meta.vocabulary == std::vector<std::string>{"car", "bike"});
  REQUIRE(back.records.size() == ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& a = ds.records[i];
    const auto& b = back.records[i];
    CHECK(std::memcmp(a.states.data(), b.states.data(),
                      a.states.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(a.actions.data(), b.actions.data(),
                      a.actions.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(a.rewards.data(), b.rewards.data(),
                      a.rewards.size() * sizeof(float)) == 0);
    CHECK(a.latent == b.latent);
    CHECK(a.success == b.success);
    CHECK(a.ret == b.ret);
  }

  // the manifest is plain structured text
  std::ifstream jf(stem + ".json");
  nlohmann::json j;
  jf >> j;
  CHECK(j["format"] == "ooc-dataset-v1");
  CHECK(j["layout"][2] == "rewards");

  std::remove((stem + ".json").c_str());
  std::remove((stem + ".bin").c_str());
}

TEST_CASE("dataset stats in the manifest match independent recomputation") {
  Dataset ds = tiny_roundabout_dataset(15);
  std::string stem = temp_stem("stats");
  write_dataset(ds, stem);
  Dataset back = read_dataset(stem);

  const int dim = 28;
  std::vector<double> sum(dim, 0.0), sq(dim, 0.0);
  std::vector<double> lo(dim, 1e300), hi(dim, -1e300);
  std::size_t rows = 0;
  for (const auto& rec : back.records)
    for (int t = 0; t < rec.h; ++t) {
      ++rows;
      for (int c = 0; c < dim; ++c) {
        double v = c < 25 ? rec.states[t * 25 + c] : rec.actions[t * 3 + c - 25];
        sum[c] += v;
        sq[c] += v * v;
        lo[c] = std::min(lo[c], v);
        hi[c] = std::max(hi[c], v);
      }
    }
  for (int c = 0; c < dim; ++c) {
    double mean = sum[c] / rows;
    double std = std::sqrt(std::max(0.0, sq[c] / rows - mean * mean));
    CHECK(back.means[c] == doctest::Approx(mean).epsilon(1e-6));
    CHECK(back.stds[c] == doctest::Approx(std).epsilon(1e-6));
    CHECK(back.mins[c] == doctest::Approx(lo[c]).epsilon(1e-9));
    CHECK(back.maxs[c] == doctest::Approx(hi[c]).epsilon(1e-9));
  }

  std::remove((stem + ".json").c_str());
  std::remove((stem + ".bin").c_str());
}

TEST_CASE("dataset normalization round-trips every stored coordinate") {
  Dataset ds = tiny_roundabout_dataset(10);
  compute_stats(ds);
  auto norm = dataset_normalizer(ds);
  REQUIRE(norm.dim() == 28);
  for (const auto& rec : ds.records)
    for (int t = 0; t < rec.h; ++t)
      for (int c = 0; c < 28; ++c) {
        double v = c < 25 ? rec.states[t * 25 + c] : rec.actions[t * 3 + c - 25];
        double z = norm.normalize(c, v);
        CHECK(z >= -1.0 - 1e-12);
        CHECK(z <= 1.0 + 1e-12);
        CHECK(norm.denormalize(c, z) == doctest::Approx(v).epsilon(1e-6));
      }
  // idle-only data: action columns are constant, span collapses to a point
  int c_act = 25 + 2;  // idle flag, always 1 under this policy
  CHECK(norm.normalize(c_act, 1.0) == 0.0);
  CHECK(norm.denormalize(c_act, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("dataset loader rejects corruption instead of guessing") {
  Dataset ds = tiny_roundabout_dataset(6);
  std::string stem = temp_stem("corrupt");
  write_dataset(ds, stem);

  CHECK_THROWS_AS(read_dataset(stem + "_missing"), LoadError);

  SUBCASE("flipped byte in the blob") {
    std::fstream f(stem + ".bin",
                   std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(200);
    char b;
    f.seekg(200);
    f.get(b);
    b = static_cast<char>(b ^ 0x40);
    f.seekp(200);
    f.put(b);
    f.close();
    CHECK_THROWS_AS(read_dataset(stem), LoadError);
  }
  SUBCASE("truncated blob") {
    std::filesystem::resize_file(
        stem + ".bin", std::filesystem::file_size(stem + ".bin") - 16);
    CHECK_THROWS_AS(read_dataset(stem), LoadError);
  }
  SUBCASE("manifest dimension lie") {
    std::ifstream jf(stem + ".json");
    nlohmann::json j;
    jf >> j;
    jf.close();
    j["d_s"] = 26;
    std::ofstream out(stem + ".json");
    out << j.dump(1);
    out.close();
    CHECK_THROWS_AS(read_dataset(stem), LoadError);
  }
  SUBCASE("empty dataset refuses to write") {
    Dataset empty;
    empty.meta = ds.meta;
    CHECK_THROWS_AS(write_dataset(empty, stem + "_e"), ContractError);
  }

  std::remove((stem + ".json").c_str());
  std::remove((stem + ".bin").c_str());
}

TEST_CASE("team scenario splits enumerate the paper's supports") {
  ElementVocabulary units({"melee", "ranged", "heavy"});

  auto simple = make_split("simple", units);
  CHECK(simple.train.members().size() == 27);
  CHECK(simple.test.members().size() == 3);
  for (const auto& z : simple.test.members()) {
    CHECK(z[0] == z[1]);
    CHECK(z[1] == z[2]);
  }
  CHECK(check_combinatorial_support(simple.train, simple.test));

  auto hard = make_split("hard", units);
  CHECK(hard.train.members().size() == 3);
  CHECK(hard.test.members().size() == 24);
  CHECK(check_combinatorial_support(hard.train, hard.test));
  for (const auto& z : hard.test.members())
    CHECK(classify_state(z, hard.train) == ooc::comb::StateClass::OOC);

  ElementVocabulary traffic({"car", "bike"});
  auto ra = make_split("roundabout", traffic);
  CHECK(ra.train.members().size() == 2);
  CHECK(ra.test.members().size() == 14);
  CHECK(check_combinatorial_support(ra.train, ra.test));
  for (const auto& z : ra.test.members()) CHECK(z[0] == 0);
  CHECK(classify_state({0, 0, 0, 0, 0}, ra.train) ==
        ooc::comb::StateClass::IN_SUPPORT);
  CHECK(classify_state({0, 1, 0, 1, 1}, ra.train) == ooc::comb::StateClass::OOC);

  CHECK_THROWS_AS(make_split("medium", traffic), ContractError);
  CHECK_THROWS_AS(make_split("maze", traffic), ContractError);
  CHECK_THROWS_AS(make_split("simple", traffic), ContractError);
}

TEST_CASE("maze split holds out bottom-right-to-top-left signatures") {
  auto grid = ooc::env::load_maze("medium");

  CHECK(maze_quadrant(grid, 2.0, 2.0) == 0);
  CHECK(maze_quadrant(grid, 6.0, 2.0) == 1);
  CHECK(maze_quadrant(grid, 2.0, 6.0) == 2);
  CHECK(maze_quadrant(grid, 6.0, 6.0) == 3);

  auto split = make_maze_split(grid);
  CHECK(split.continuous);
  CHECK(split.train.members().size() == 60);
  CHECK(split.test.members().size() == 4);
  for (const auto& sig : split.test.members()) {
    CHECK(sig[0] == 3);
    CHECK(sig[2] == 0);
  }
  CHECK(check_combinatorial_support(split.train, split.test));
  // together they tile the full signature space
  std::set<LatentVector> all(split.train.members().begin(),
                             split.train.members().end());
  all.insert(split.test.members().begin(), split.test.members().end());
  CHECK(all.size() == 64);

  Rng rng(4);
  for (int rep = 0; rep < 200; ++rep) {
    auto w = split.test_region.sample(rng);
    REQUIRE(w.size() == 12);
    CHECK(split.test_region.contains(w));
    CHECK(!split.train_region.contains(w));
    std::vector<float> wf(w.begin(), w.end());
    CHECK(split.test.contains(maze_signature(grid, wf)));

    auto v = split.train_region.sample(rng);
    CHECK(split.train_region.contains(v));
  }

  // signatures of real demonstrations land in one side or the other
  auto recs = collect_maze(grid, 19, 30, 256);
  for (const auto& rec : recs) {
    auto sig = maze_signature(grid, rec.latent);
    CHECK((split.train.contains(sig) || split.test.contains(sig)));
  }
}

TEST_CASE("collected train data stays inside the declared train support") {
  ElementVocabulary traffic({"car", "bike"});
  auto split = make_split("roundabout", traffic);
  std::vector<LatentVector> members(split.train.members().begin(),
                                    split.train.members().end());
  auto latents = [&members](Rng& r) {
    return members[static_cast<std::size_t>(r.uniform_int(
        static_cast<std::int64_t>(members.size())))];
  };
  auto recs =
      collect_roundabout(5, 40, Keep::all, latents, always_idle);
  for (const auto& rec : recs) {
    LatentVector z;
    for (float v : rec.latent) z.push_back(static_cast<int>(v));
    CHECK(split.train.contains(z));
  }
}
