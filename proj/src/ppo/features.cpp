#include "hcraft/ppo/features.hpp"

#include <algorithm>
#include <cmath>

namespace hcraft::ppo {

ObservationEncoder::ObservationEncoder(const env::Registry& registry, const env::EnvOptions& options)
    : options_(options),
      blocks_({"air", "tree", "stone", "water", "crafting_table", "bedrock"}),
      entities_({"none", "cow", "sheep"}),
      items_(registry.items()) {
  const int per_ray = 2 + static_cast<int>(blocks_.size() + entities_.size());
  dim_ = options_.num_rays * per_ray + 9 * static_cast<int>(blocks_.size()) + static_cast<int>(items_.size()) + 4;
}

int ObservationEncoder::block_index(const std::string& name) const {
  auto it = std::find(blocks_.begin(), blocks_.end(), name);
  return it == blocks_.end() ? 0 : static_cast<int>(it - blocks_.begin());
}

int ObservationEncoder::entity_index(const std::string& name) const {
  auto it = std::find(entities_.begin(), entities_.end(), name);
  return it == entities_.end() ? 0 : static_cast<int>(it - entities_.begin());
}

Eigen::VectorXd ObservationEncoder::encode(const env::Observation& obs) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
  const double range = options_.max_range;
  auto scaled = [&](double d) { return std::isfinite(d) ? d / range : 2.0; };
  int k = 0;
  for (int r = 0; r < options_.num_rays; ++r) {
    const auto& ray = obs.rays.at(static_cast<std::size_t>(r));
    v(k++) = scaled(ray.block_distance);
    v(k + block_index(ray.block_name)) = 1.0;
    k += static_cast<int>(blocks_.size());
    v(k++) = scaled(ray.entity_distance);
    v(k + entity_index(ray.entity_name)) = 1.0;
    k += static_cast<int>(entities_.size());
  }
  for (const auto& row : obs.voxels) {
    for (const auto& name : row) {
      v(k + block_index(name)) = 1.0;
      k += static_cast<int>(blocks_.size());
    }
  }
  for (const auto& item : items_) v(k++) = std::min(obs.count(item), 10) / 10.0;
  v(k + static_cast<int>(obs.yaw)) = 1.0;
  return v;
}

}  // namespace hcraft::ppo
