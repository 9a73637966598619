#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace railalloc {

struct Point2D {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point2D& a, const Point2D& b);

// Frozen network geometry: one track-side BS, Rnum mobile relays on a
// horizontal rail line, M users with a per-user serving-device index
// (0 = BS, 1..Rnum = relay). Immutable after construction and safe to
// share across threads.
struct Scenario {
  double area_side = 0.0;
  Point2D bs_position;
  std::vector<Point2D> mr_positions;
  std::vector<Point2D> users;
  std::vector<int> association;
  std::uint64_t seed = 0;

  int device_count() const { return 1 + static_cast<int>(mr_positions.size()); }
  Point2D device_position(int device) const;
  // Users served by each device, in user-index order.
  std::vector<std::vector<int>> users_by_device() const;
  std::vector<int> device_user_counts() const;
};

struct Layout {
  Point2D bs_position;
  std::vector<Point2D> mr_positions;
};

// BS above the area center, relays evenly spaced on the line
// y = side/2 - rail_offset with x spanning [side/10, 9*side/10]
// (a single relay sits at the span midpoint).
Layout build_layout(double area_side, int rnum, double bs_offset,
                    double rail_offset);

// m i.i.d. uniform points on [0, area_side)^2; bit-identical for equal seeds
// on any platform.
std::vector<Point2D> place_users(double area_side, int m, std::uint64_t seed);

// Nearest device per user; ties go to the lowest device index (BS first).
std::vector<int> associate_nearest(const Point2D& bs,
                                   const std::vector<Point2D>& mrs,
                                   const std::vector<Point2D>& users);

Scenario make_scenario(double area_side, int rnum, double bs_offset,
                       double rail_offset, int m, std::uint64_t seed);

// Each serving link is independently blocked with probability p_b; blocked
// users move to their second-nearest device, the rest keep their association.
Scenario sample_blockage_reassociate(const Scenario& scenario, double p_b,
                                     std::uint64_t seed);

std::string scenario_to_text(const Scenario& scenario);
Scenario scenario_from_text(const std::string& text);
void save_scenario(const Scenario& scenario, const std::string& path);
Scenario load_scenario(const std::string& path);

}  // namespace railalloc
