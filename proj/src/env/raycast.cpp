#include <cmath>
#include <numbers>

#include "hcraft/env/simulator.hpp"

namespace hcraft::env {

std::pair<double, double> ray_direction(Heading heading, int ray, const EnvOptions& options) {
  const GridPos f = heading_offset(heading);
  const GridPos r = heading_offset(rotate(heading, 1));
  double angle = 0.0;
  if (options.num_rays > 1) {
    const double step = options.fan_degrees / (options.num_rays - 1);
    angle = (-options.fan_degrees / 2.0 + step * ray) * std::numbers::pi / 180.0;
  }
  // Exact zeros along the heading axis keep the centre ray on the cell midline.
  const double c = ray == (options.num_rays - 1) / 2 && options.num_rays % 2 == 1 ? 1.0 : std::cos(angle);
  const double s = ray == (options.num_rays - 1) / 2 && options.num_rays % 2 == 1 ? 0.0 : std::sin(angle);
  return {c * f.x + s * r.x, c * f.y + s * r.y};
}

std::vector<Ray> ray_cast(const WorldState& state, const EnvOptions& options) {
  std::vector<Ray> rays(static_cast<std::size_t>(options.num_rays));
  const double ox = state.agent_pos.x + 0.5;
  const double oy = state.agent_pos.y + 0.5;

  for (int i = 0; i < options.num_rays; ++i) {
    const auto [dx, dy] = ray_direction(state.agent_yaw, i, options);
    Ray& out = rays[static_cast<std::size_t>(i)];

    GridPos cell = state.agent_pos;
    const int step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
    const int step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
    const double delta_x = dx != 0 ? 1.0 / std::abs(dx) : kInfinity;
    const double delta_y = dy != 0 ? 1.0 / std::abs(dy) : kInfinity;
    double next_x = dx > 0 ? (cell.x + 1 - ox) / dx : (dx < 0 ? (cell.x - ox) / dx : kInfinity);
    double next_y = dy > 0 ? (cell.y + 1 - oy) / dy : (dy < 0 ? (cell.y - oy) / dy : kInfinity);

    while (true) {
      double t = 0.0;
      if (next_x < next_y) {
        cell.x += step_x;
        t = next_x;
        next_x += delta_x;
      } else {
        cell.y += step_y;
        t = next_y;
        next_y += delta_y;
      }
      // The world edge is not a block; rays leaving the grid see nothing.
      if (t > options.max_range || !state.in_bounds(cell)) break;
      const double dist = std::hypot(cell.x - state.agent_pos.x, cell.y - state.agent_pos.y);
      if (auto m = state.mob_at(cell); m && out.entity_name == "none") {
        out.entity_name = std::string(mob_name(state.mobs[*m].kind));
        out.entity_distance = dist;
      }
      const Block b = state.at(cell);
      if (is_solid(b)) {
        out.block_name = std::string(block_name(b));
        out.block_distance = dist;
        break;
      }
    }
  }
  return rays;
}

}  // namespace hcraft::env
