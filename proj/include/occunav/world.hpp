#pragma once

#include <memory>
#include <vector>

#include "occunav/occupancy.hpp"

namespace occunav {

/// One generated time step: occupancy plus the pixel-aligned per-view
/// depth and semantics it was built from (views may be empty).
struct WorldState {
  double t = 0;
  SemanticOccupancyGrid occupancy;
  std::vector<ViewImages> views;
};

using WorldStatePtr = std::shared_ptr<const WorldState>;

}  // namespace occunav
