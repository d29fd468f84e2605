#include "asiplab/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace asiplab {

namespace {

inline Scalar sigmoid(Scalar s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const Scalar e = std::exp(s);
  return e / (1.0 + e);
}

}  // namespace

Scalar loss_value(LossKind loss, const ModelVector& w, const Record& r) {
  const Scalar margin = r.label * r.features.dot(w);
  if (!std::isfinite(margin))
    throw NumericError("loss evaluated at a non-finite point");
  switch (loss) {
    case LossKind::Hinge:
      return std::max(0.0, 1.0 - margin);
    case LossKind::Logistic: {
      const Scalar s = -margin;
      if (s <= 0.0) return std::log1p(std::exp(s));
      return s + std::log1p(std::exp(-s));
    }
  }
  throw std::logic_error("unknown loss kind");
}

void accumulate_loss_subgradient(LossKind loss, const ModelVector& w,
                                 const Record& r, Scalar scale,
                                 ModelVector& acc) {
  const Scalar margin = r.label * r.features.dot(w);
  if (!std::isfinite(margin))
    throw NumericError("loss subgradient at a non-finite point");
  switch (loss) {
    case LossKind::Hinge:
      // Inactive hinge contributes zero; otherwise -y * x.
      if (margin < 1.0) r.features.add_scaled_to(scale * -r.label, acc);
      return;
    case LossKind::Logistic: {
      const Scalar c = -r.label * sigmoid(-margin);
      r.features.add_scaled_to(scale * c, acc);
      return;
    }
  }
  throw std::logic_error("unknown loss kind");
}

ModelVector loss_subgradient(LossKind loss, const ModelVector& w,
                             const Record& r) {
  ModelVector g = ModelVector::Zero(w.size());
  accumulate_loss_subgradient(loss, w, r, 1.0, g);
  return g;
}

Scalar reg_penalty(RegKind reg, const ModelVector& w) {
  switch (reg) {
    case RegKind::L1:
      return w.cwiseAbs().sum();
    case RegKind::L2:
      return 0.5 * w.squaredNorm();
  }
  throw std::logic_error("unknown regularizer kind");
}

ModelVector reg_subgradient(RegKind reg, const ModelVector& w) {
  if (reg == RegKind::L2) return w;
  ModelVector g(w.size());
  for (Index i = 0; i < w.size(); ++i)
    g[i] = w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0);
  return g;
}

Scalar full_objective(const ObjectiveSpec& spec, const ModelVector& w,
                      const PartitionedDataset& data) {
  const std::size_t n = data.total_records();
  if (n == 0) throw std::invalid_argument("full_objective: empty dataset");
  Scalar sum = 0.0;
  for (const auto& part : data.partitions)
    for (const Record& r : part) sum += loss_value(spec.loss, w, r);
  return sum / static_cast<Scalar>(n) +
         spec.lambda * reg_penalty(spec.reg, w);
}

Scalar soft_threshold(Scalar v, Scalar kappa) {
  const Scalar mag = std::abs(v) - kappa;
  if (mag <= 0.0) return 0.0;
  return v > 0.0 ? mag : -mag;
}

ModelVector consensus_update(const ConsensusParams& params,
                             const ModelVector& w_bar,
                             const ModelVector& mu_bar) {
  if (params.rho <= 0.0)
    throw std::invalid_argument("consensus_update: rho must be positive");
  if (params.p < 1)
    throw std::invalid_argument("consensus_update: p must be at least 1");
  if (params.lambda < 0.0)
    throw std::invalid_argument("consensus_update: lambda must be >= 0");
  if (w_bar.size() != mu_bar.size())
    throw std::invalid_argument("consensus_update: dimension mismatch");

  const Scalar prho = params.rho * static_cast<Scalar>(params.p);
  const ModelVector v = w_bar + mu_bar / params.rho;
  if (params.reg == RegKind::L2)
    return (prho / (params.lambda + prho)) * v;
  const Scalar kappa = params.lambda / prho;
  ModelVector z(v.size());
  for (Index i = 0; i < v.size(); ++i) z[i] = soft_threshold(v[i], kappa);
  return z;
}

}  // namespace asiplab
