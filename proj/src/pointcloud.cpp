#include "asiplab/pointcloud.hpp"

#include "asiplab/rng.hpp"

#include <stdexcept>

namespace asiplab {

std::vector<Record> generate_point_cloud(const PointCloudSpec& spec) {
  if (spec.n_per_class < 1)
    throw std::invalid_argument("point cloud: n_per_class must be >= 1");
  if (spec.sigma < 0)
    throw std::invalid_argument("point cloud: sigma must be >= 0");

  struct Cloud {
    Scalar cx, cy, label;
  };
  const Cloud clouds[2] = {{0.0, 0.0, -1.0}, {5.0, 5.0, 1.0}};

  Rng rng(spec.seed);
  std::vector<Record> records;
  records.reserve(2 * spec.n_per_class);
  for (const Cloud& cloud : clouds) {
    for (std::size_t i = 0; i < spec.n_per_class; ++i) {
      const auto [g0, g1] = normal_pair(rng);
      ModelVector x(3);
      x[0] = cloud.cx + spec.sigma * g0;
      x[1] = cloud.cy + spec.sigma * g1;
      x[2] = 1.0;
      records.emplace_back(FeatureVector::dense(std::move(x)), cloud.label);
    }
  }
  return records;
}

}  // namespace asiplab
