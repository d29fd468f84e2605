#include "asiplab/dataset.hpp"

#include "asiplab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace asiplab {

namespace {

Index max_dimension(const std::vector<Record>& records) {
  Index d = 0;
  for (const Record& r : records) d = std::max(d, r.features.dim());
  return d;
}

// Shuffle indices with the given seed, then deal round-robin.
std::vector<std::vector<std::size_t>> deal_uniform(std::size_t n, int p,
                                                   Rng& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  deterministic_shuffle(order, rng);
  std::vector<std::vector<std::size_t>> out(p);
  for (std::size_t i = 0; i < n; ++i) out[i % p].push_back(order[i]);
  return out;
}

}  // namespace

PartitionedDataset partition(const std::vector<Record>& records, int p,
                             PlacementPolicy policy, std::uint64_t seed) {
  if (p < 1) throw std::invalid_argument("partition: p must be at least 1");
  if (static_cast<std::size_t>(p) > records.size())
    throw std::invalid_argument(
        "partition: more partitions than records");

  PartitionedDataset ds;
  ds.dimension = max_dimension(records);
  ds.partitions.resize(p);
  Rng rng(seed);

  if (policy == PlacementPolicy::Uniform) {
    auto deal = deal_uniform(records.size(), p, rng);
    for (int i = 0; i < p; ++i) {
      ds.partitions[i].reserve(deal[i].size());
      for (std::size_t idx : deal[i]) ds.partitions[i].push_back(records[idx]);
    }
    return ds;
  }

  // SkewedByLabel: split by class, then deal each class into its own
  // contiguous block of partitions, sized proportionally to the class.
  std::vector<std::size_t> neg, pos;
  for (std::size_t i = 0; i < records.size(); ++i)
    (records[i].label < 0 ? neg : pos).push_back(i);
  if (neg.empty() || pos.empty())
    throw std::invalid_argument(
        "partition: SkewedByLabel needs both labels present");
  if (p < 2)
    throw std::invalid_argument(
        "partition: SkewedByLabel needs at least 2 partitions");

  const double frac = static_cast<double>(neg.size()) / records.size();
  int p_neg = static_cast<int>(std::lround(frac * p));
  p_neg = std::max(1, std::min(p - 1, p_neg));
  if (neg.size() < static_cast<std::size_t>(p_neg) ||
      pos.size() < static_cast<std::size_t>(p - p_neg))
    throw std::invalid_argument(
        "partition: a label class has fewer records than its partitions");

  const std::vector<std::size_t>* classes[2] = {&neg, &pos};
  const int counts[2] = {p_neg, p - p_neg};
  int base = 0;
  for (int c = 0; c < 2; ++c) {
    const auto& members = *classes[c];
    std::vector<std::size_t> order = members;
    deterministic_shuffle(order, rng);
    for (std::size_t i = 0; i < order.size(); ++i)
      ds.partitions[base + static_cast<int>(i % counts[c])].push_back(
          records[order[i]]);
    base += counts[c];
  }
  return ds;
}

PartitionedDataset pooled_dataset(std::vector<Record> records) {
  PartitionedDataset ds;
  ds.dimension = max_dimension(records);
  ds.partitions.push_back(std::move(records));
  return ds;
}

}  // namespace asiplab
