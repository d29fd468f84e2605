#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace asiplab {

using Scalar = double;
using Index = Eigen::Index;

// Dense model/iterate vector. Fixed dimension for the lifetime of a run;
// owned by exactly one worker when mutated.
using ModelVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Raised when an arithmetic result leaves the finite range.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Raised on malformed input text; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Feature vector of a single example, either dense or index/value sparse.
// Sparse indices are strictly increasing and < dim(). Immutable once built.
class FeatureVector {
 public:
  FeatureVector() : dim_(0) {}

  static FeatureVector dense(ModelVector values) {
    FeatureVector f;
    f.dim_ = values.size();
    f.dense_ = std::move(values);
    return f;
  }

  static FeatureVector sparse(Index dim, std::vector<Index> indices,
                              std::vector<Scalar> values) {
    if (indices.size() != values.size())
      throw std::invalid_argument("sparse feature: index/value length mismatch");
    Index prev = -1;
    for (Index i : indices) {
      if (i <= prev)
        throw std::invalid_argument(
            "sparse feature: indices must be strictly increasing");
      if (i < 0 || i >= dim)
        throw std::invalid_argument("sparse feature: index out of range");
      prev = i;
    }
    FeatureVector f;
    f.dim_ = dim;
    f.is_sparse_ = true;
    f.indices_ = std::move(indices);
    f.values_ = std::move(values);
    return f;
  }

  bool is_sparse() const { return is_sparse_; }
  Index dim() const { return dim_; }
  Index nnz() const {
    return is_sparse_ ? static_cast<Index>(indices_.size()) : dim_;
  }

  const ModelVector& dense_values() const { return dense_; }
  const std::vector<Index>& sparse_indices() const { return indices_; }
  const std::vector<Scalar>& sparse_values() const { return values_; }

  // Inner product with a model vector. The two storage forms of the same
  // vector produce bitwise-identical sums: both accumulate the nonzero
  // products left to right in index order.
  Scalar dot(const ModelVector& m) const {
    if (dim_ > m.size())
      throw std::invalid_argument("dot: feature dimension exceeds model dimension");
    Scalar s = 0.0;
    if (is_sparse_) {
      for (std::size_t k = 0; k < indices_.size(); ++k)
        s += values_[k] * m[indices_[k]];
    } else {
      for (Index i = 0; i < dim_; ++i) {
        if (dense_[i] != 0.0) s += dense_[i] * m[i];
      }
    }
    return s;
  }

  // out += alpha * this, touching only stored coordinates.
  void add_scaled_to(Scalar alpha, ModelVector& out) const {
    if (dim_ > out.size())
      throw std::invalid_argument("axpy: feature dimension exceeds model dimension");
    if (is_sparse_) {
      for (std::size_t k = 0; k < indices_.size(); ++k)
        out[indices_[k]] += alpha * values_[k];
    } else {
      for (Index i = 0; i < dim_; ++i) out[i] += alpha * dense_[i];
    }
  }

 private:
  Index dim_;
  bool is_sparse_ = false;
  ModelVector dense_;
  std::vector<Index> indices_;
  std::vector<Scalar> values_;
};

// One labeled example. Labels are exactly -1 or +1.
struct Record {
  FeatureVector features;
  Scalar label = 1.0;

  Record() = default;
  Record(FeatureVector f, Scalar y) : features(std::move(f)), label(y) {
    if (label != -1.0 && label != 1.0)
      throw std::invalid_argument("record label must be -1 or +1");
  }
};

// Records dealt into p per-worker partitions of one d-dimensional dataset.
struct PartitionedDataset {
  std::vector<std::vector<Record>> partitions;
  Index dimension = 0;

  std::size_t num_partitions() const { return partitions.size(); }
  std::size_t total_records() const {
    std::size_t n = 0;
    for (const auto& part : partitions) n += part.size();
    return n;
  }
};

inline Scalar dot(const FeatureVector& a, const ModelVector& b) {
  return a.dot(b);
}

inline ModelVector axpy(Scalar alpha, const FeatureVector& x,
                        const ModelVector& y) {
  ModelVector out = y;
  x.add_scaled_to(alpha, out);
  if (!out.allFinite()) throw NumericError("axpy produced a non-finite value");
  return out;
}

inline ModelVector axpy(Scalar alpha, const ModelVector& x,
                        const ModelVector& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("axpy: dimension mismatch");
  ModelVector out = y + alpha * x;
  if (!out.allFinite()) throw NumericError("axpy produced a non-finite value");
  return out;
}

}  // namespace asiplab
