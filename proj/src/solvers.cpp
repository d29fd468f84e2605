#include "asiplab/solvers.hpp"

#include "asiplab/envelope.hpp"

#include <cmath>
#include <stdexcept>

namespace asiplab {

namespace {

void add_reg_subgradient(RegKind reg, Scalar lambda, const ModelVector& w,
                         ModelVector& grad) {
  if (lambda == 0.0) return;
  if (reg == RegKind::L2) {
    grad += lambda * w;
    return;
  }
  for (Index i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0)
      grad[i] += lambda;
    else if (w[i] < 0.0)
      grad[i] -= lambda;
  }
}

// Mini-batch loss gradient: average subgradient over batch_size records
// drawn uniformly with replacement.
void sample_batch_gradient(const std::vector<Record>& part,
                           const ModelVector& w, LossKind loss, int batch,
                           Rng& rng, ModelVector& grad) {
  grad.setZero();
  for (int b = 0; b < batch; ++b) {
    const Record& r = part[uniform_index(rng, part.size())];
    accumulate_loss_subgradient(loss, w, r, 1.0, grad);
  }
  grad /= static_cast<Scalar>(batch);
}

// False when the gradient overflowed mid-evaluation; the caller freezes
// the worker at its last finite state instead of crashing the gang.
bool try_batch_gradient(const std::vector<Record>& part, const ModelVector& w,
                        LossKind loss, int batch, Rng& rng,
                        ModelVector& grad) {
  try {
    sample_batch_gradient(part, w, loss, batch, rng, grad);
    return true;
  } catch (const NumericError&) {
    return false;
  }
}

void require_partition(const std::vector<Record>* partition) {
  if (!partition || partition->empty())
    throw std::invalid_argument("solver worker: empty partition");
}

}  // namespace

AsipSgdWorker::AsipSgdWorker(const std::vector<Record>* partition, Index dim,
                             const SolverHyperparams& hp,
                             const ObjectiveSpec& spec, std::uint64_t seed,
                             bool communicate)
    : partition_(partition),
      hp_(hp),
      spec_(spec),
      seed_(seed),
      communicate_(communicate),
      w_(ModelVector::Zero(dim)),
      prev_w_(ModelVector::Zero(dim)),
      grad_(ModelVector::Zero(dim)),
      push_acc_(ModelVector::Zero(dim)),
      rng_(seed) {
  require_partition(partition);
}

void AsipSgdWorker::reset() {
  w_.setZero();
  prev_w_.setZero();
  grad_.setZero();
  push_acc_.setZero();
  t_ = 1;
  steps_ = 0;
  last_push_ms_ = 0;
  rng_ = Rng(seed_);
  diverged_ = false;
}

void AsipSgdWorker::step(WorkerContext& ctx) {
  if (diverged_) {
    ctx.tick(hp_.batch_size);
    return;
  }
  if (communicate_ && steps_ % static_cast<std::uint64_t>(
                                   hp_.polls_every_k_steps) == 0) {
    while (auto env = ctx.channel().poll()) {
      ctx.tick(1);
      if (env->kind != EnvelopeKind::GradientDelta) continue;
      const Scalar eta = hp_.eta0 / std::sqrt(static_cast<Scalar>(t_));
      prev_w_ = w_;
      w_ -= eta * env->primary;
      if (!w_.allFinite()) {
        w_ = prev_w_;
        diverged_ = true;
        return;
      }
    }
  }
  if (!try_batch_gradient(*partition_, w_, spec_.loss, hp_.batch_size, rng_,
                          grad_)) {
    diverged_ = true;
    ctx.tick(hp_.batch_size);
    return;
  }
  add_reg_subgradient(spec_.reg, spec_.lambda, w_, grad_);
  const Scalar eta = hp_.eta0 / std::sqrt(static_cast<Scalar>(t_));
  prev_w_ = w_;
  w_ -= eta * grad_;
  ++t_;
  ++steps_;
  ctx.tick(hp_.batch_size);
  if (!w_.allFinite()) {
    w_ = prev_w_;
    diverged_ = true;
    return;
  }
  if (!communicate_) return;
  push_acc_ += grad_;
  if (ctx.now_ms() - last_push_ms_ >= hp_.comm_rate_push_ms) {
    ctx.channel().push(make_gradient_delta(ctx.worker(), push_acc_));
    push_acc_.setZero();
    last_push_ms_ = ctx.now_ms();
    ctx.tick(1);
  }
}

AsipDualAveragingWorker::AsipDualAveragingWorker(
    const std::vector<Record>* partition, Index dim,
    const SolverHyperparams& hp, const ObjectiveSpec& spec, int p,
    std::uint64_t seed)
    : partition_(partition),
      hp_(hp),
      spec_(spec),
      p_(p),
      seed_(seed),
      w_(ModelVector::Zero(dim)),
      prev_w_(ModelVector::Zero(dim)),
      grad_(ModelVector::Zero(dim)),
      dual_(ModelVector::Zero(dim)),
      dual_sum_(ModelVector::Zero(dim)),
      rng_(seed) {
  require_partition(partition);
  if (p < 1) throw std::invalid_argument("dual averaging: p must be >= 1");
}

void AsipDualAveragingWorker::reset() {
  w_.setZero();
  prev_w_.setZero();
  grad_.setZero();
  dual_.setZero();
  dual_sum_.setZero();
  t_ = 1;
  steps_ = 0;
  rng_ = Rng(seed_);
  diverged_ = false;
}

void AsipDualAveragingWorker::step(WorkerContext& ctx) {
  if (diverged_) {
    ctx.tick(hp_.batch_size);
    return;
  }
  while (auto env = ctx.channel().poll()) {
    ctx.tick(1);
    if (env->kind != EnvelopeKind::DualDelta) continue;
    dual_sum_ += env->primary;
    if (!dual_sum_.allFinite()) {
      diverged_ = true;
      return;
    }
  }
  if (!try_batch_gradient(*partition_, w_, spec_.loss, hp_.batch_size, rng_,
                          grad_)) {
    diverged_ = true;
    ctx.tick(hp_.batch_size);
    return;
  }
  add_reg_subgradient(spec_.reg, spec_.lambda, w_, grad_);
  const ModelVector dual_old = dual_;
  dual_ = dual_sum_ / static_cast<Scalar>(p_) + grad_;
  prev_w_ = w_;
  w_ = -(hp_.eta0 / std::sqrt(static_cast<Scalar>(t_))) * dual_;
  ++t_;
  ++steps_;
  ctx.tick(hp_.batch_size);
  if (!w_.allFinite() || !dual_.allFinite()) {
    w_ = prev_w_;
    dual_ = dual_old;
    diverged_ = true;
    return;
  }
  ctx.channel().push(make_dual_delta(ctx.worker(), dual_ - dual_old));
  ctx.tick(1);
}

AsipAdmmWorker::AsipAdmmWorker(const std::vector<Record>* partition, Index dim,
                               const SolverHyperparams& hp,
                               const ObjectiveSpec& spec, int p,
                               Scalar data_share, std::uint64_t seed)
    : partition_(partition),
      hp_(hp),
      spec_(spec),
      p_(p),
      share_(data_share),
      seed_(seed),
      w_(ModelVector::Zero(dim)),
      prev_w_(ModelVector::Zero(dim)),
      grad_(ModelVector::Zero(dim)),
      mu_(ModelVector::Zero(dim)),
      w_bar_(ModelVector::Zero(dim)),
      mu_bar_(ModelVector::Zero(dim)),
      z_(ModelVector::Zero(dim)),
      w_old_(ModelVector::Zero(dim)),
      mu_old_(ModelVector::Zero(dim)),
      rng_(seed) {
  require_partition(partition);
  if (p < 1) throw std::invalid_argument("admm worker: p must be >= 1");
  if (!(data_share > 0) || data_share > 1)
    throw std::invalid_argument("admm worker: data share must be in (0, 1]");
}

void AsipAdmmWorker::reset() {
  // Optimization state restarts; the communication view survives. w_bar,
  // mu_bar, and the consensus iterate are accumulated knowledge of the
  // peers, and w_old / mu_old record what the peers have already folded
  // in. Zeroing those would both orphan the old contributions inside
  // every peer's averages and strip this worker's view of theirs, a
  // permanent consensus bias rather than a transient dip; continuing the
  // delta telescope from the pre-reset values keeps rejoining cheap.
  w_.setZero();
  prev_w_.setZero();
  grad_.setZero();
  mu_.setZero();
  phase_ = Phase::Primal;
  t_ = 1;
  primal_iters_ = 0;
  rounds_ = 0;
  last_push_ms_ = 0;
  rng_ = Rng(seed_);
  diverged_ = false;
}

void AsipAdmmWorker::step(WorkerContext& ctx) {
  if (diverged_) {
    ctx.tick(hp_.batch_size);
    return;
  }
  if (phase_ == Phase::Primal) {
    if (!try_batch_gradient(*partition_, w_, spec_.loss, hp_.batch_size, rng_,
                            grad_)) {
      diverged_ = true;
      ctx.tick(hp_.batch_size);
      return;
    }
    grad_ *= share_;
    grad_ += mu_;
    grad_ += hp_.rho * (w_ - z_);
    const Scalar eta = hp_.eta0 / std::sqrt(static_cast<Scalar>(t_));
    prev_w_ = w_;
    w_ -= eta * grad_;
    ++t_;
    ++primal_iters_;
    ctx.tick(hp_.batch_size);
    if (!w_.allFinite()) {
      w_ = prev_w_;
      diverged_ = true;
      return;
    }
    // The exchange waits for both the primal stop rule and the push-rate
    // gate. Running the consensus and dual updates faster than pushes go
    // out lets mu integrate against a view that cannot contain its own
    // recent growth, which feeds back into z and locks the gang into a
    // limit cycle; one outer round per granted push keeps the loop
    // closed. Until then the primal keeps polishing w against current z.
    if ((eta * grad_.norm() < hp_.epsilon ||
         primal_iters_ >= hp_.max_primal_iters) &&
        ctx.now_ms() - last_push_ms_ >= hp_.comm_rate_push_ms)
      phase_ = Phase::Exchange;
    return;
  }

  // Exchange: share deltas, fold peers' state, consensus and dual update.
  {
    const ModelVector dw = (w_ - w_old_) / static_cast<Scalar>(p_);
    const ModelVector dmu = (mu_ - mu_old_) / static_cast<Scalar>(p_);
    ctx.channel().push(make_primal_dual_delta(ctx.worker(), dw, dmu));
    ctx.tick(1);
    w_bar_ += dw;
    mu_bar_ += dmu;
    w_old_ = w_;
    mu_old_ = mu_;
    last_push_ms_ = ctx.now_ms();
  }
  while (auto env = ctx.channel().poll()) {
    ctx.tick(1);
    if (env->kind != EnvelopeKind::PrimalDualDelta) continue;
    w_bar_ += env->primary;
    mu_bar_ += *env->secondary;
    if (!w_bar_.allFinite() || !mu_bar_.allFinite()) {
      diverged_ = true;
      return;
    }
  }
  z_ = consensus_update({hp_.rho, p_, spec_.lambda, spec_.reg}, w_bar_,
                        mu_bar_);
  mu_ += hp_.rho * (w_ - z_);
  if (!z_.allFinite() || !mu_.allFinite()) {
    diverged_ = true;
    return;
  }
  ++rounds_;
  t_ = 1;
  primal_iters_ = 0;
  phase_ = Phase::Primal;
  ctx.tick(1);
}

namespace {

// Wall-anchored straggler timeline: each period opens with an active
// span of period - pause, then the pause. Advances `t` by `work_ms` of
// useful work, stepping over any pause windows on the way. Pauses that
// pass while a worker idles at a barrier cost nothing extra.
double advance_worker_time(double t, double work_ms, const StragglerSpec* s) {
  if (!s) return t + work_ms;
  while (work_ms > 0) {
    const double cyc = std::fmod(t, s->period_ms);
    const double active_end = s->period_ms - s->pause_ms;
    if (cyc < active_end) {
      const double chunk = std::min(work_ms, active_end - cyc);
      t += chunk;
      work_ms -= chunk;
    } else {
      t += s->period_ms - cyc;
    }
  }
  return t;
}

void validate_bsp(const PartitionedDataset& data, const SolverHyperparams& hp,
                  const BspSimConfig& sim) {
  if (data.partitions.empty() || data.total_records() == 0)
    throw std::invalid_argument("bsp solver: empty dataset");
  for (const auto& part : data.partitions)
    if (part.empty())
      throw std::invalid_argument("bsp solver: empty partition");
  if (!(hp.time_budget_ms > 0))
    throw std::invalid_argument("bsp solver: time budget must be positive");
  if (!(sim.virtual_step_ms > 0))
    throw std::invalid_argument("bsp solver: virtual step must be positive");
  const int p = static_cast<int>(data.num_partitions());
  if (sim.straggler) {
    const auto& s = *sim.straggler;
    if (s.worker < 0 || s.worker >= p)
      throw std::invalid_argument("bsp solver: straggler worker out of range");
    if (!(s.pause_ms > 0) || !(s.pause_ms < s.period_ms))
      throw std::invalid_argument(
          "bsp solver: straggler pause must satisfy 0 < pause < period");
  }
  if (sim.fault && (sim.fault->worker < 0 || sim.fault->worker >= p))
    throw std::invalid_argument("bsp solver: fault worker out of range");
}

ModelVector full_loss_gradient(const PartitionedDataset& data,
                               LossKind loss, const ModelVector& w) {
  ModelVector g = ModelVector::Zero(w.size());
  for (const auto& part : data.partitions)
    for (const Record& r : part)
      accumulate_loss_subgradient(loss, w, r, 1.0, g);
  g /= static_cast<Scalar>(data.total_records());
  return g;
}

const StragglerSpec* straggler_for(const BspSimConfig& sim, int worker) {
  if (sim.straggler && sim.straggler->worker == worker)
    return &*sim.straggler;
  return nullptr;
}

}  // namespace

BspResult bsp_gd(const PartitionedDataset& data, const SolverHyperparams& hp,
                 const ObjectiveSpec& spec, const BspSimConfig& sim) {
  validate_bsp(data, hp, sim);
  const int p = static_cast<int>(data.num_partitions());
  const Index dim = data.dimension;
  const ObjectiveSpec obj = spec;

  BspResult result;
  ModelVector w = ModelVector::Zero(dim);
  result.trace.push_back({0.0, full_objective(obj, w, data), kSnapshotAvg});

  double elapsed = 0.0;
  bool fault_pending = sim.fault.has_value();
  std::uint64_t t = 1;
  for (std::int64_t round = 1;
       elapsed < hp.time_budget_ms && round <= hp.outer_rounds; ++round) {
    ModelVector g;
    try {
      g = full_loss_gradient(data, obj.loss, w);
    } catch (const NumericError&) {
      result.diverged = true;
      break;
    }
    add_reg_subgradient(obj.reg, obj.lambda, w, g);
    const Scalar eta = hp.eta0 / std::sqrt(static_cast<Scalar>(t));
    const ModelVector prev = w;
    w -= eta * g;
    ++t;

    double round_end = elapsed;
    for (int i = 0; i < p; ++i) {
      const double work =
          static_cast<double>(data.partitions[i].size()) * sim.virtual_step_ms;
      double end_i = advance_worker_time(elapsed, work, straggler_for(sim, i));
      if (fault_pending && sim.fault->worker == i &&
          sim.fault->at_ms < end_i) {
        // The relaunched worker redoes its share of the round.
        fault_pending = false;
        const double restart = std::max(sim.fault->at_ms, elapsed);
        end_i = advance_worker_time(restart, work, straggler_for(sim, i));
      }
      round_end = std::max(round_end, end_i);
    }
    elapsed = round_end;

    if (!w.allFinite()) {
      w = prev;
      result.diverged = true;
      result.trace.push_back(
          {elapsed, full_objective(obj, w, data), kSnapshotAvg});
      break;
    }
    result.trace.push_back(
        {elapsed, full_objective(obj, w, data), kSnapshotAvg});
  }
  result.model = std::move(w);
  return result;
}

namespace {

// Augmented local solve by mini-batch SGD; returns the step count. share
// is the partition's fraction of the dataset (see AsipAdmmWorker).
int run_primal(ModelVector& w, const ModelVector& mu, const ModelVector& z,
               const std::vector<Record>& part, Rng& rng,
               const SolverHyperparams& hp, LossKind loss, Scalar rho,
               Scalar share, bool& diverged) {
  ModelVector grad(w.size()), prev(w.size());
  std::uint64_t t = 1;
  int iters = 0;
  while (iters < hp.max_primal_iters) {
    if (!try_batch_gradient(part, w, loss, hp.batch_size, rng, grad)) {
      diverged = true;
      break;
    }
    grad *= share;
    grad += mu;
    grad += rho * (w - z);
    const Scalar eta = hp.eta0 / std::sqrt(static_cast<Scalar>(t));
    prev = w;
    w -= eta * grad;
    ++t;
    ++iters;
    if (!w.allFinite()) {
      w = prev;
      diverged = true;
      break;
    }
    if (eta * grad.norm() < hp.epsilon) break;
  }
  return iters;
}

}  // namespace

BspAdmmResult bsp_admm(const PartitionedDataset& data,
                       const SolverHyperparams& hp, const ObjectiveSpec& spec,
                       const BspSimConfig& sim) {
  validate_bsp(data, hp, sim);
  const int p = static_cast<int>(data.num_partitions());
  const Index dim = data.dimension;

  BspAdmmResult result;
  result.w.assign(p, ModelVector::Zero(dim));
  result.mu.assign(p, ModelVector::Zero(dim));
  ModelVector z = ModelVector::Zero(dim);

  std::vector<std::uint64_t> seeds(p);
  for (int i = 0; i < p; ++i)
    seeds[i] = sim.worker_seeds ? (*sim.worker_seeds)[i]
                                : worker_seed(sim.seed, i);
  std::vector<Rng> rngs;
  rngs.reserve(p);
  for (int i = 0; i < p; ++i) rngs.emplace_back(seeds[i]);

  auto emit = [&](double t) {
    result.trace.push_back({t, full_objective(spec, z, data), kSnapshotAvg});
    for (int i = 0; i < p; ++i)
      result.trace.push_back(
          {t, full_objective(spec, result.w[i], data), i});
  };
  emit(0.0);

  double elapsed = 0.0;
  bool fault_pending = sim.fault.has_value();
  for (std::int64_t round = 1;
       elapsed < hp.time_budget_ms && round <= hp.outer_rounds; ++round) {
    double round_end = elapsed;
    for (int i = 0; i < p; ++i) {
      const Scalar share = static_cast<Scalar>(data.partitions[i].size()) /
                           static_cast<Scalar>(data.total_records());
      result.mu[i] += hp.rho * (result.w[i] - z);
      bool div = false;
      int steps = run_primal(result.w[i], result.mu[i], z, data.partitions[i],
                             rngs[i], hp, spec.loss, hp.rho, share, div);
      double work = static_cast<double>(steps) * hp.batch_size *
                    sim.virtual_step_ms;
      double end_i = advance_worker_time(elapsed, work, straggler_for(sim, i));
      if (fault_pending && sim.fault->worker == i &&
          sim.fault->at_ms < end_i) {
        // Relaunch from reset state and redo the round's local work.
        fault_pending = false;
        result.w[i].setZero();
        result.mu[i].setZero();
        rngs[i] = Rng(seeds[i]);
        div = false;
        result.mu[i] += hp.rho * (result.w[i] - z);
        steps = run_primal(result.w[i], result.mu[i], z, data.partitions[i],
                           rngs[i], hp, spec.loss, hp.rho, share, div);
        work = static_cast<double>(steps) * hp.batch_size *
               sim.virtual_step_ms;
        const double restart = std::max(sim.fault->at_ms, elapsed);
        end_i = advance_worker_time(restart, work, straggler_for(sim, i));
      }
      result.diverged = result.diverged || div;
      round_end = std::max(round_end, end_i);
    }
    elapsed = round_end;

    ModelVector w_bar = result.w[0];
    ModelVector mu_bar = result.mu[0];
    for (int i = 1; i < p; ++i) {
      w_bar += result.w[i];
      mu_bar += result.mu[i];
    }
    w_bar /= static_cast<Scalar>(p);
    mu_bar /= static_cast<Scalar>(p);
    z = consensus_update({hp.rho, p, spec.lambda, spec.reg}, w_bar, mu_bar);
    emit(elapsed);
  }
  result.z = std::move(z);
  return result;
}

AvgResult avg_solver(const PartitionedDataset& data,
                     const SolverHyperparams& hp, const ObjectiveSpec& spec,
                     const RuntimeConfig& runtime) {
  if (data.partitions.empty())
    throw std::invalid_argument("avg solver: empty dataset");
  if (runtime.p != static_cast<int>(data.num_partitions()))
    throw std::invalid_argument(
        "avg solver: worker count must match partition count");

  std::vector<std::unique_ptr<AsipWorkerBody>> bodies;
  bodies.reserve(runtime.p);
  for (int i = 0; i < runtime.p; ++i)
    bodies.push_back(std::make_unique<AsipSgdWorker>(
        &data.partitions[i], data.dimension, hp, spec,
        worker_seed(runtime.seed, i), /*communicate=*/false));

  GangResult gang = run_gang(runtime, bodies, [&](const ModelVector& m) {
    return full_objective(spec, m, data);
  });

  AvgResult result;
  result.locals = std::move(gang.finals);
  result.model = result.locals[0];
  for (std::size_t i = 1; i < result.locals.size(); ++i)
    result.model += result.locals[i];
  result.model /= static_cast<Scalar>(result.locals.size());
  result.trace = std::move(gang.trace);
  for (bool d : gang.diverged) result.diverged = result.diverged || d;
  return result;
}

}  // namespace asiplab
