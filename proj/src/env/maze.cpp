#include "ooc/env/maze.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <queue>
#include <sstream>
#include <tuple>

#include "ooc/util/errors.hpp"
#include "ooc/util/rng.hpp"

namespace ooc::env {

MazeGrid MazeGrid::parse(const std::vector<std::string>& lines) {
  if (lines.empty()) throw LoadError("maze grid: empty layout");
  MazeGrid g;
  g.rows = static_cast<int>(lines.size());
  g.cols = static_cast<int>(lines[0].size());
  if (g.cols == 0) throw LoadError("maze grid: empty row");
  for (const auto& row : lines) {
    if (static_cast<int>(row.size()) != g.cols)
      throw LoadError("maze grid: rows have unequal length");
    for (char ch : row)
      if (ch != '#' && ch != '.')
        throw LoadError("maze grid: cells must be '#' or '.'");
  }
  // A closed border keeps the controller's continuous state inside the grid.
  for (int c = 0; c < g.cols; ++c)
    if (lines.front()[c] != '#' || lines.back()[c] != '#')
      throw LoadError("maze grid: top/bottom border must be wall");
  for (int r = 0; r < g.rows; ++r)
    if (lines[r].front() != '#' || lines[r].back() != '#')
      throw LoadError("maze grid: left/right border must be wall");
  g.cells = lines;
  return g;
}

MazeGrid MazeGrid::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("maze grid: cannot open " + path);
  std::vector<std::string> lines;
  std::string row;
  while (std::getline(in, row)) {
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (!row.empty()) lines.push_back(row);
  }
  return parse(lines);
}

bool MazeGrid::wall(int r, int c) const {
  if (r < 0 || r >= rows || c < 0 || c >= cols) return true;
  return cells[r][c] == '#';
}

bool MazeGrid::wall_at(double x, double y) const {
  return wall(static_cast<int>(std::floor(y)), static_cast<int>(std::floor(x)));
}

std::vector<std::pair<int, int>> MazeGrid::free_cells() const {
  std::vector<std::pair<int, int>> out;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (cells[r][c] == '.') out.emplace_back(r, c);
  return out;
}

std::vector<std::pair<int, int>> MazeGrid::shortest_path(
    std::pair<int, int> start, std::pair<int, int> goal) const {
  if (wall(start.first, start.second) || wall(goal.first, goal.second))
    throw ContractError("shortest_path: endpoint inside a wall");

  auto id = [this](int r, int c) { return r * cols + c; };
  const int n = rows * cols;
  std::vector<int> g(n, -1), parent(n, -1);
  auto heur = [&](int r, int c) {
    return std::abs(r - goal.first) + std::abs(c - goal.second);
  };

  // (f, h, cell id): the h and id components pin the expansion order so the
  // returned route is a pure function of the grid.
  using Node = std::tuple<int, int, int>;
  std::priority_queue<Node, std::vector<Node>, std::greater<Node>> open;
  g[id(start.first, start.second)] = 0;
  open.emplace(heur(start.first, start.second), heur(start.first, start.second),
               id(start.first, start.second));

  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  std::vector<bool> closed(n, false);
  while (!open.empty()) {
    auto [f, h, cur] = open.top();
    open.pop();
    if (closed[cur]) continue;
    closed[cur] = true;
    int r = cur / cols, c = cur % cols;
    if (r == goal.first && c == goal.second) break;
    for (int k = 0; k < 4; ++k) {
      int nr = r + dr[k], nc = c + dc[k];
      if (wall(nr, nc)) continue;
      int nid = id(nr, nc);
      int ng = g[cur] + 1;
      if (g[nid] == -1 || ng < g[nid]) {
        g[nid] = ng;
        parent[nid] = cur;
        open.emplace(ng + heur(nr, nc), heur(nr, nc), nid);
      }
    }
  }

  int gid = id(goal.first, goal.second);
  if (g[gid] == -1) return {};
  std::vector<std::pair<int, int>> path;
  for (int cur = gid; cur != -1; cur = parent[cur])
    path.emplace_back(cur / cols, cur % cols);
  std::reverse(path.begin(), path.end());
  return path;
}

namespace {

std::string assets_dir_candidates(const std::string& maze_id,
                                  std::vector<std::string>& out) {
  std::string fname = maze_id + ".txt";
  if (const char* env = std::getenv("OOC_ASSETS_DIR"))
    out.push_back(std::string(env) + "/mazes/" + fname);
#ifdef OOC_SOURCE_DIR
  out.push_back(std::string(OOC_SOURCE_DIR) + "/assets/mazes/" + fname);
#endif
  out.push_back("assets/mazes/" + fname);
  return fname;
}

}  // namespace

MazeGrid load_maze(const std::string& maze_id) {
  if (maze_id != "medium" && maze_id != "large")
    throw ContractError("load_maze: maze_id must be 'medium' or 'large'");
  std::vector<std::string> tried;
  assets_dir_candidates(maze_id, tried);
  for (const auto& path : tried) {
    std::ifstream probe(path);
    if (probe) return MazeGrid::load(path);
  }
  std::ostringstream msg;
  msg << "load_maze: layout not found; tried";
  for (const auto& p : tried) msg << " " << p;
  throw LoadError(msg.str());
}

int maze_horizon(const std::string& maze_id) {
  if (maze_id == "medium") return 256;
  if (maze_id == "large") return 384;
  throw ContractError("maze_horizon: maze_id must be 'medium' or 'large'");
}

namespace {

struct Sim {
  double x, y, vx, vy;
};

double center(int cell) { return cell + 0.5; }

// One controller step toward `target`; position integrates the current
// velocity so recorded states satisfy x_{t+1} = x_t + v_t dt exactly.
void pd_step(Sim& s, double tx, double ty) {
  double ax = MazeControl::kP * (tx - s.x) - MazeControl::kD * s.vx;
  double ay = MazeControl::kP * (ty - s.y) - MazeControl::kD * s.vy;
  double an = std::sqrt(ax * ax + ay * ay);
  if (an > MazeControl::kAmax) {
    ax *= MazeControl::kAmax / an;
    ay *= MazeControl::kAmax / an;
  }
  double nvx = s.vx + ax * MazeControl::kDt;
  double nvy = s.vy + ay * MazeControl::kDt;
  double vn = std::sqrt(nvx * nvx + nvy * nvy);
  if (vn > MazeControl::kVmax) {
    nvx *= MazeControl::kVmax / vn;
    nvy *= MazeControl::kVmax / vn;
  }
  s.x += s.vx * MazeControl::kDt;
  s.y += s.vy * MazeControl::kDt;
  s.vx = nvx;
  s.vy = nvy;
}

}  // namespace

MazeTrajectory maze_generate_expert(const MazeGrid& grid, std::uint64_t seed,
                                    int h, int max_retries) {
  if (h < 2) throw ContractError("maze expert: horizon too short");
  auto free = grid.free_cells();
  if (free.size() < 2) throw ContractError("maze expert: no free space");
  Rng rng(seed ^ 0x6d617a65ull);

  for (int attempt = 0; attempt < max_retries; ++attempt) {
    auto start = free[static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(free.size())))];
    auto goal = free[static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(free.size())))];
    if (start == goal) continue;
    auto route = grid.shortest_path(start, goal);
    if (route.size() < 4) continue;  // trivial hops make poor demonstrations

    MazeTrajectory traj;
    traj.h = h;
    traj.states.reserve(static_cast<std::size_t>(h) * 4);
    traj.start_cell = start;
    traj.goal_cell = goal;

    Sim s{center(start.second), center(start.first), 0.0, 0.0};
    std::size_t wp = 1;  // route[0] is the start cell itself
    bool collided = false;
    bool reached = false;
    double gx = center(goal.second), gy = center(goal.first);

    for (int t = 0; t < h; ++t) {
      traj.states.push_back(s.x);
      traj.states.push_back(s.y);
      traj.states.push_back(s.vx);
      traj.states.push_back(s.vy);

      if (grid.wall_at(s.x, s.y)) {
        collided = true;
        break;
      }
      while (wp + 1 < route.size() &&
             std::hypot(center(route[wp].second) - s.x,
                        center(route[wp].first) - s.y) < MazeControl::kAdvance)
        ++wp;
      if (std::hypot(gx - s.x, gy - s.y) < MazeControl::kGoalTol)
        reached = true;
      pd_step(s, center(route[wp].second), center(route[wp].first));
    }

    if (!collided && reached &&
        traj.states.size() == static_cast<std::size_t>(h) * 4)
      return traj;
  }
  throw StateError("maze expert: retries exhausted without a valid trajectory");
}

std::vector<std::array<double, 4>> extract_waypoints(const MazeTrajectory& traj,
                                                     int k) {
  if (k < 1) throw ContractError("extract_waypoints: k must be positive");
  if (traj.h < k + 1)
    throw ContractError("extract_waypoints: trajectory shorter than k+1");
  std::vector<std::array<double, 4>> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int j = 1; j <= k; ++j) {
    int idx = traj.h * j / (k + 1);
    const double* s = traj.state(idx);
    out.push_back({s[0], s[1], s[2], s[3]});
  }
  return out;
}

}  // namespace ooc::env
