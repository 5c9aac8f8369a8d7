#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hcraft/env/registry.hpp"
#include "hcraft/env/simulator.hpp"

namespace hcraft::ppo {

/// Fixed-width vector view of an Observation:
///   per ray: block distance, block one-hot, entity distance, entity one-hot
///   3x3 voxels: block one-hot per cell
///   inventory: count per registry item, clipped at 10 and scaled to [0, 1]
///   heading one-hot
/// Distances are divided by the ray range; "nothing seen" uses a sentinel of twice the range.
class ObservationEncoder {
 public:
  ObservationEncoder(const env::Registry& registry, const env::EnvOptions& options);

  Eigen::VectorXd encode(const env::Observation& obs) const;
  int dim() const { return dim_; }

 private:
  int block_index(const std::string& name) const;
  int entity_index(const std::string& name) const;

  env::EnvOptions options_;
  std::vector<std::string> blocks_;
  std::vector<std::string> entities_;
  std::vector<std::string> items_;
  int dim_ = 0;
};

}  // namespace hcraft::ppo
