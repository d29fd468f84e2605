#pragma once

#include "asiplab/types.hpp"

namespace asiplab {

enum class LossKind { Hinge, Logistic };
enum class RegKind { L1, L2 };

// Regularized empirical-risk objective:
//   f(w) = (1/n) * sum_r loss(w, r) + lambda * reg(w)
struct ObjectiveSpec {
  LossKind loss = LossKind::Hinge;
  RegKind reg = RegKind::L2;
  Scalar lambda = 0.0;
};

// Parameters of the consensus step shared by the ADMM solvers.
struct ConsensusParams {
  Scalar rho = 1.0;  // > 0
  int p = 1;         // >= 1
  Scalar lambda = 0.0;
  RegKind reg = RegKind::L2;
};

// Per-record loss. The logistic branch never overflows: for margin
// s = -y * (w.x) it evaluates log1p(exp(s)) when s <= 0 and
// s + log1p(exp(-s)) otherwise.
Scalar loss_value(LossKind loss, const ModelVector& w, const Record& r);

// Adds scale * (a subgradient of the record loss at w) into acc. Touches
// only the record's stored coordinates.
void accumulate_loss_subgradient(LossKind loss, const ModelVector& w,
                                 const Record& r, Scalar scale,
                                 ModelVector& acc);

ModelVector loss_subgradient(LossKind loss, const ModelVector& w,
                             const Record& r);

Scalar reg_penalty(RegKind reg, const ModelVector& w);

// L2: w itself. L1: sign(w) with sign(0) = 0.
ModelVector reg_subgradient(RegKind reg, const ModelVector& w);

// Full objective over every partition, summed in partition order then
// record order. Empty dataset is an argument error.
Scalar full_objective(const ObjectiveSpec& spec, const ModelVector& w,
                      const PartitionedDataset& data);

// sign(v) * max(|v| - kappa, 0)
Scalar soft_threshold(Scalar v, Scalar kappa);

// argmin_z  lambda * reg(z) + (p * rho / 2) * ||z - (w_bar + mu_bar/rho)||^2
// L2 has the closed form (p*rho / (lambda + p*rho)) * (w_bar + mu_bar/rho);
// L1 applies soft_threshold with kappa = lambda / (p * rho) elementwise.
ModelVector consensus_update(const ConsensusParams& params,
                             const ModelVector& w_bar,
                             const ModelVector& mu_bar);

}  // namespace asiplab
