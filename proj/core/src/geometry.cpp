#include "railalloc/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "railalloc/errors.hpp"

namespace railalloc {

namespace {

// 53-bit uniform in [0, 1); avoids std::uniform_real_distribution, whose
// output is implementation-defined and would break cross-platform
// determinism of seeded scenarios.
double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double squared_distance(const Point2D& a, const Point2D& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// Nearest and second-nearest device; ties go to the lower index.
std::pair<int, int> two_nearest(const Point2D& user,
                                const std::vector<Point2D>& devices) {
  int best = 0;
  int second = -1;
  double best_d = squared_distance(user, devices[0]);
  double second_d = std::numeric_limits<double>::infinity();
  for (int i = 1; i < static_cast<int>(devices.size()); ++i) {
    const double d = squared_distance(user, devices[i]);
    if (d < best_d) {
      second = best;
      second_d = best_d;
      best = i;
      best_d = d;
    } else if (d < second_d) {
      second = i;
      second_d = d;
    }
  }
  return {best, second};
}

std::vector<Point2D> all_devices(const Scenario& sc) {
  std::vector<Point2D> devices;
  devices.reserve(sc.device_count());
  devices.push_back(sc.bs_position);
  devices.insert(devices.end(), sc.mr_positions.begin(),
                 sc.mr_positions.end());
  return devices;
}

}  // namespace

double distance(const Point2D& a, const Point2D& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

Point2D Scenario::device_position(int device) const {
  if (device == 0) return bs_position;
  return mr_positions.at(static_cast<std::size_t>(device) - 1);
}

std::vector<std::vector<int>> Scenario::users_by_device() const {
  std::vector<std::vector<int>> out(device_count());
  for (int k = 0; k < static_cast<int>(users.size()); ++k) {
    out.at(association[k]).push_back(k);
  }
  return out;
}

std::vector<int> Scenario::device_user_counts() const {
  std::vector<int> counts(device_count(), 0);
  for (int a : association) counts.at(a)++;
  return counts;
}

Layout build_layout(double area_side, int rnum, double bs_offset,
                    double rail_offset) {
  if (!(area_side > 0.0)) {
    throw std::invalid_argument("build_layout: area_side must be positive");
  }
  if (rnum < 1) {
    throw std::invalid_argument("build_layout: need at least one relay");
  }
  if (bs_offset < 0.0 || rail_offset < 0.0 || bs_offset >= area_side / 2 ||
      rail_offset >= area_side / 2) {
    throw std::invalid_argument(
        "build_layout: offsets must lie in [0, area_side/2) to keep devices "
        "inside the area");
  }
  Layout layout;
  layout.bs_position = {area_side / 2, area_side / 2 + bs_offset};
  const double rail_y = area_side / 2 - rail_offset;
  if (rnum == 1) {
    layout.mr_positions.push_back({area_side / 2, rail_y});
  } else {
    const double x0 = area_side / 10;
    const double x1 = 9 * area_side / 10;
    for (int i = 0; i < rnum; ++i) {
      layout.mr_positions.push_back(
          {x0 + (x1 - x0) * i / (rnum - 1), rail_y});
    }
  }
  return layout;
}

std::vector<Point2D> place_users(double area_side, int m, std::uint64_t seed) {
  if (!(area_side > 0.0)) {
    throw std::invalid_argument("place_users: area_side must be positive");
  }
  if (m < 1) {
    throw std::invalid_argument("place_users: need at least one user");
  }
  std::mt19937_64 rng(seed);
  std::vector<Point2D> users;
  users.reserve(m);
  for (int k = 0; k < m; ++k) {
    const double x = unit_double(rng) * area_side;
    const double y = unit_double(rng) * area_side;
    users.push_back({x, y});
  }
  return users;
}

std::vector<int> associate_nearest(const Point2D& bs,
                                   const std::vector<Point2D>& mrs,
                                   const std::vector<Point2D>& users) {
  std::vector<Point2D> devices;
  devices.reserve(1 + mrs.size());
  devices.push_back(bs);
  devices.insert(devices.end(), mrs.begin(), mrs.end());
  std::vector<int> assoc(users.size(), 0);
  for (std::size_t k = 0; k < users.size(); ++k) {
    assoc[k] = two_nearest(users[k], devices).first;
  }
  return assoc;
}

Scenario make_scenario(double area_side, int rnum, double bs_offset,
                       double rail_offset, int m, std::uint64_t seed) {
  const Layout layout = build_layout(area_side, rnum, bs_offset, rail_offset);
  Scenario sc;
  sc.area_side = area_side;
  sc.bs_position = layout.bs_position;
  sc.mr_positions = layout.mr_positions;
  sc.users = place_users(area_side, m, seed);
  sc.association = associate_nearest(sc.bs_position, sc.mr_positions, sc.users);
  sc.seed = seed;
  return sc;
}

Scenario sample_blockage_reassociate(const Scenario& scenario, double p_b,
                                     std::uint64_t seed) {
  if (!(p_b >= 0.0 && p_b <= 1.0)) {
    throw std::invalid_argument(
        "sample_blockage_reassociate: p_b must lie in [0, 1]");
  }
  if (p_b > 0.0 && scenario.device_count() < 2) {
    throw std::invalid_argument(
        "sample_blockage_reassociate: re-association needs a second device");
  }
  Scenario out = scenario;
  if (p_b == 0.0) return out;
  const std::vector<Point2D> devices = all_devices(scenario);
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < out.users.size(); ++k) {
    if (unit_double(rng) < p_b) {
      out.association[k] = two_nearest(out.users[k], devices).second;
    }
  }
  return out;
}

std::string scenario_to_text(const Scenario& scenario) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "area_side %.6f\n", scenario.area_side);
  os << buf;
  os << "seed " << scenario.seed << "\n";
  std::snprintf(buf, sizeof buf, "bs %.6f %.6f\n", scenario.bs_position.x,
                scenario.bs_position.y);
  os << buf;
  for (std::size_t i = 0; i < scenario.mr_positions.size(); ++i) {
    std::snprintf(buf, sizeof buf, "mr %zu %.6f %.6f\n", i + 1,
                  scenario.mr_positions[i].x, scenario.mr_positions[i].y);
    os << buf;
  }
  for (std::size_t k = 0; k < scenario.users.size(); ++k) {
    std::snprintf(buf, sizeof buf, "user %zu %.6f %.6f %d\n", k,
                  scenario.users[k].x, scenario.users[k].y,
                  scenario.association[k]);
    os << buf;
  }
  return os.str();
}

Scenario scenario_from_text(const std::string& text) {
  Scenario sc;
  std::istringstream is(text);
  std::string tag;
  bool have_area = false;
  bool have_bs = false;
  while (is >> tag) {
    if (tag == "area_side") {
      if (!(is >> sc.area_side)) throw IoError("scenario: bad area_side line");
      have_area = true;
    } else if (tag == "seed") {
      if (!(is >> sc.seed)) throw IoError("scenario: bad seed line");
    } else if (tag == "bs") {
      if (!(is >> sc.bs_position.x >> sc.bs_position.y)) {
        throw IoError("scenario: bad bs line");
      }
      have_bs = true;
    } else if (tag == "mr") {
      std::size_t index = 0;
      Point2D p;
      if (!(is >> index >> p.x >> p.y)) throw IoError("scenario: bad mr line");
      if (index != sc.mr_positions.size() + 1) {
        throw IoError("scenario: mr lines out of order");
      }
      sc.mr_positions.push_back(p);
    } else if (tag == "user") {
      std::size_t index = 0;
      Point2D p;
      int assoc = 0;
      if (!(is >> index >> p.x >> p.y >> assoc)) {
        throw IoError("scenario: bad user line");
      }
      if (index != sc.users.size()) {
        throw IoError("scenario: user lines out of order");
      }
      if (assoc < 0 || assoc > static_cast<int>(sc.mr_positions.size())) {
        throw IoError("scenario: association index out of range");
      }
      sc.users.push_back(p);
      sc.association.push_back(assoc);
    } else {
      throw IoError("scenario: unknown line tag '" + tag + "'");
    }
  }
  if (!have_area || !have_bs) {
    throw IoError("scenario: missing area_side or bs header");
  }
  return sc;
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("save_scenario: cannot open " + path);
  f << scenario_to_text(scenario);
  if (!f) throw IoError("save_scenario: write failed for " + path);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("load_scenario: cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return scenario_from_text(os.str());
}

}  // namespace railalloc
