#pragma once

#include "asiplab/types.hpp"

#include <cstdint>
#include <vector>

namespace asiplab {

enum class PlacementPolicy {
  // Seeded shuffle, then round-robin deal; partition sizes differ by at
  // most one.
  Uniform,
  // Every partition holds records of exactly one label; the label classes
  // occupy contiguous partition blocks.
  SkewedByLabel,
};

// Splits records into p partitions. The result is a permutation of the
// input: no record is dropped or duplicated. Deterministic in (records,
// p, policy, seed) on every platform.
PartitionedDataset partition(const std::vector<Record>& records, int p,
                             PlacementPolicy policy, std::uint64_t seed);

// Wraps records as a single-partition dataset (dimension inferred).
PartitionedDataset pooled_dataset(std::vector<Record> records);

}  // namespace asiplab
