#pragma once

#include "asiplab/types.hpp"

#include <cstdint>
#include <vector>

namespace asiplab {

// Two Gaussian clouds in the plane, lifted to three dimensions by a
// constant bias coordinate. The cloud at (0,0) is labeled -1, the cloud
// at (5,5) is labeled +1.
struct PointCloudSpec {
  std::size_t n_per_class = 1;
  Scalar sigma = 1.0;  // > 0 allowed for experiments; 0 degenerates to the centers
  std::uint64_t seed = 0;
};

// Emits 2 * n_per_class records of dimension exactly 3: the -1 class
// followed by the +1 class, each coordinate pair center + sigma * N(0,1),
// third coordinate exactly 1.0. Identical seeds give identical records.
std::vector<Record> generate_point_cloud(const PointCloudSpec& spec);

}  // namespace asiplab
