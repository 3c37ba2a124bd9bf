#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ooc::env {

// Axis-aligned wall grid. Cell (r, c) spans [c, c+1) x [r, r+1) in continuous
// coordinates, i.e. x is the column axis and y the row axis; out-of-bounds
// queries count as wall so the boundary is closed even without a '#' border.
struct MazeGrid {
  int rows = 0;
  int cols = 0;
  std::vector<std::string> cells;

  static MazeGrid parse(const std::vector<std::string>& lines);
  static MazeGrid load(const std::string& path);

  bool wall(int r, int c) const;
  bool wall_at(double x, double y) const;
  std::vector<std::pair<int, int>> free_cells() const;

  // 4-connected shortest route (A*, Manhattan heuristic, deterministic
  // tie-breaking). Returns start..goal inclusive, or empty if unreachable.
  std::vector<std::pair<int, int>> shortest_path(std::pair<int, int> start,
                                                 std::pair<int, int> goal) const;
};

// Resolves one of the layouts shipped under assets/mazes. Search order:
// $OOC_ASSETS_DIR, the source tree, the working directory.
MazeGrid load_maze(const std::string& maze_id);
int maze_horizon(const std::string& maze_id);  // medium -> 256, large -> 384

// Point-mass controller constants. Positions integrate the *recorded*
// velocity (x_{t+1} = x_t + v_t dt), so finite differences of a trajectory
// recover v exactly.
struct MazeControl {
  static constexpr double kDt = 0.1;
  static constexpr double kVmax = 1.2;
  static constexpr double kAmax = 6.0;
  static constexpr double kP = 10.0;
  static constexpr double kD = 6.0;
  static constexpr double kAdvance = 0.45;  // waypoint switch radius
  static constexpr double kGoalTol = 0.3;
};

struct MazeTrajectory {
  int h = 0;
  std::vector<double> states;  // h x 4 row-major: x, y, vx, vy
  std::pair<int, int> start_cell{0, 0};
  std::pair<int, int> goal_cell{0, 0};

  const double* state(int t) const { return states.data() + 4 * t; }
};

// Demonstration generator: samples start/goal cells, routes with
// shortest_path, tracks the route with a PD point-mass controller, and
// returns exactly h states. Attempts that collide, stay trivially short or
// fail to reach the goal are resampled; exhausting max_retries throws.
MazeTrajectory maze_generate_expert(const MazeGrid& grid, std::uint64_t seed,
                                    int h, int max_retries = 25);

// States at indices floor(h*j/(k+1)) for j = 1..k; they lie on the input
// trajectory bit-for-bit.
std::vector<std::array<double, 4>> extract_waypoints(const MazeTrajectory& traj,
                                                     int k = 3);

}  // namespace ooc::env
