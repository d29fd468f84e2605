#pragma once

#include "asiplab/dataset.hpp"
#include "asiplab/objective.hpp"
#include "asiplab/rng.hpp"
#include "asiplab/runtime.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace asiplab {

// Shared solver knobs. Every gradient step uses the schedule
// eta0 / sqrt(t) with t counting that worker's own steps.
struct SolverHyperparams {
  Scalar eta0 = 0.1;
  Scalar rho = 0.01;
  Scalar epsilon = 1e-5;       // primal stop: L2 norm of the last step
  int batch_size = 10;         // records per mini-batch, drawn with replacement
  double comm_rate_push_ms = 10.0;  // at most one push per interval
  int polls_every_k_steps = 10;
  int max_primal_iters = 10000;
  // Outer consensus rounds; effectively unbounded, the budget decides.
  std::int64_t outer_rounds = std::numeric_limits<std::int64_t>::max();
  double time_budget_ms = 10000.0;
};

// Mini-batch SGD worker. Drains its inbox every polls_every_k_steps
// steps, applying each received gradient sum with its own current step
// size; pushes its accumulated raw gradients at most once per
// comm_rate_push_ms. With communicate = false it is the isolated local
// solver used by the averaging baseline.
class AsipSgdWorker : public AsipWorkerBody {
 public:
  AsipSgdWorker(const std::vector<Record>* partition, Index dim,
                const SolverHyperparams& hp, const ObjectiveSpec& spec,
                std::uint64_t seed, bool communicate = true);

  void step(WorkerContext& ctx) override;
  void reset() override;
  const ModelVector& model() const override { return w_; }
  bool diverged() const override { return diverged_; }
  std::uint64_t steps() const { return steps_; }

 private:
  const std::vector<Record>* partition_;
  SolverHyperparams hp_;
  ObjectiveSpec spec_;
  std::uint64_t seed_;
  bool communicate_;
  ModelVector w_, prev_w_, grad_, push_acc_;
  std::uint64_t t_ = 1;
  std::uint64_t steps_ = 0;
  double last_push_ms_ = 0;
  Rng rng_;
  bool diverged_ = false;
};

// Dual-averaging worker: keeps the running sum of received dual deltas,
// sets dual = dualSum / p + g each step, w = -(eta0/sqrt(t)) * dual, and
// pushes the change in its dual every step.
class AsipDualAveragingWorker : public AsipWorkerBody {
 public:
  AsipDualAveragingWorker(const std::vector<Record>* partition, Index dim,
                          const SolverHyperparams& hp,
                          const ObjectiveSpec& spec, int p,
                          std::uint64_t seed);

  void step(WorkerContext& ctx) override;
  void reset() override;
  const ModelVector& model() const override { return w_; }
  bool diverged() const override { return diverged_; }
  std::uint64_t steps() const { return steps_; }

 private:
  const std::vector<Record>* partition_;
  SolverHyperparams hp_;
  ObjectiveSpec spec_;
  int p_;
  std::uint64_t seed_;
  ModelVector w_, prev_w_, grad_, dual_, dual_sum_;
  std::uint64_t t_ = 1;
  std::uint64_t steps_ = 0;
  Rng rng_;
  bool diverged_ = false;
};

// Consensus ADMM worker. Each outer round solves the augmented local
// problem by mini-batch SGD (gradient data_share * g_loss + mu +
// rho * (w - z)), then exchanges state: push (w - w_old, mu - mu_old) / p
// (folding its own delta into the running averages at push time), drain
// peer deltas into w_bar / mu_bar, recompute z from the consensus step,
// and update the dual mu += rho * (w - z). The exchange fires only when
// the push-rate gate allows; a primal that converges sooner keeps
// stepping against the current z until then, so there is exactly one
// consensus and dual update per granted push. Returns the consensus
// iterate z. data_share is |partition| / |dataset|: the local loss term
// enters the decomposed objective with that weight, which is what makes
// the consensus step's lambda / (p * rho) proximal scale drive z to the
// minimizer of the pooled objective rather than one with the regularizer
// diluted by a factor of p.
class AsipAdmmWorker : public AsipWorkerBody {
 public:
  AsipAdmmWorker(const std::vector<Record>* partition, Index dim,
                 const SolverHyperparams& hp, const ObjectiveSpec& spec,
                 int p, Scalar data_share, std::uint64_t seed);

  void step(WorkerContext& ctx) override;
  void reset() override;
  const ModelVector& model() const override { return w_; }
  ModelVector final_model() const override { return z_; }
  bool done() const override { return rounds_ >= hp_.outer_rounds; }
  bool diverged() const override { return diverged_; }

  const ModelVector& primal() const { return w_; }
  const ModelVector& consensus() const { return z_; }
  std::int64_t rounds() const { return rounds_; }

 private:
  enum class Phase { Primal, Exchange };

  const std::vector<Record>* partition_;
  SolverHyperparams hp_;
  ObjectiveSpec spec_;
  int p_;
  Scalar share_;
  std::uint64_t seed_;
  ModelVector w_, prev_w_, grad_, mu_, w_bar_, mu_bar_, z_, w_old_, mu_old_;
  Phase phase_ = Phase::Primal;
  std::uint64_t t_ = 1;
  int primal_iters_ = 0;
  std::int64_t rounds_ = 0;
  double last_push_ms_ = 0;
  Rng rng_;
  bool diverged_ = false;
};

// Deterministic-simulation knobs for the round-synchronous solvers and
// the averaging baseline. The straggler/fault schedules mirror the gang
// runtime's; worker_seeds overrides the derived per-partition seeds.
struct BspSimConfig {
  double virtual_step_ms = 0.001;
  double sample_every_rounds = 1;  // trace cadence, in rounds
  std::optional<StragglerSpec> straggler;
  std::optional<FaultSpec> fault;
  std::uint64_t seed = 0;
  std::optional<std::vector<std::uint64_t>> worker_seeds;
};

struct BspResult {
  ModelVector model;
  std::vector<TraceEvent> trace;
  bool diverged = false;
};

struct BspAdmmResult {
  ModelVector z;
  std::vector<ModelVector> w;
  std::vector<ModelVector> mu;
  std::vector<TraceEvent> trace;
  bool diverged = false;
};

// Round-synchronous full-batch gradient descent: one exact gradient over
// all partitions per round (fixed reduction order), one model update,
// barrier. Bitwise deterministic for a fixed seed and config.
BspResult bsp_gd(const PartitionedDataset& data, const SolverHyperparams& hp,
                 const ObjectiveSpec& spec, const BspSimConfig& sim = {});

// Round-synchronous consensus ADMM: per round every partition updates
// its dual, solves its augmented local problem, then a barrier computes
// exact averages and the consensus iterate. Returns z.
BspAdmmResult bsp_admm(const PartitionedDataset& data,
                       const SolverHyperparams& hp, const ObjectiveSpec& spec,
                       const BspSimConfig& sim = {});

struct AvgResult {
  ModelVector model;  // elementwise average of the final local models
  std::vector<ModelVector> locals;
  std::vector<TraceEvent> trace;
  bool diverged = false;
};

// No-communication baseline: independent local mini-batch SGD on every
// partition, averaged at the end.
AvgResult avg_solver(const PartitionedDataset& data,
                     const SolverHyperparams& hp, const ObjectiveSpec& spec,
                     const RuntimeConfig& runtime);

}  // namespace asiplab
