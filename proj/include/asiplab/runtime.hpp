#pragma once

#include "asiplab/channel.hpp"
#include "asiplab/types.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace asiplab {

enum class ClockMode {
  // Wall time from a monotonic clock; workers run on their own threads
  // and a monitor thread samples the trace.
  Real,
  // Simulated time advanced only at instrumented yield points (gradient
  // steps, pushes, polls). Workers are interleaved cooperatively in
  // smallest-local-time order, so a run is a pure function of its
  // configuration and seed.
  Virtual,
};

// Worker `worker` pauses for pause_ms out of every period_ms, starting
// after its first active span. pause_ms < period_ms.
struct StragglerSpec {
  int worker = 0;
  double pause_ms = 0;
  double period_ms = 0;
};

// Worker `worker` is reset once at at_ms: model, dual state, and counters
// return to their initial values, its inbox is cleared, and it resumes
// consuming its partition from the start. Other workers are unaffected.
struct FaultSpec {
  int worker = 0;
  double at_ms = 0;
};

struct RuntimeConfig {
  int p = 1;
  std::size_t inbox_capacity = BroadcastBus::kDefaultCapacity;
  double time_budget_ms = 0;  // > 0
  ClockMode clock = ClockMode::Real;
  // Simulated cost of one recorded event. The default models a worker
  // retiring one million record-touches per simulated second.
  double virtual_step_ms = 0.001;
  double sample_period_ms = 100.0;
  std::optional<StragglerSpec> straggler;
  std::optional<FaultSpec> fault;
  std::uint64_t seed = 0;
  bool duplicate_push_suppression = true;
};

constexpr int kSnapshotAvg = -1;

// One sampled point of an objective trajectory. snapshot identifies the
// model the objective was evaluated on: kSnapshotAvg for the elementwise
// average of the current worker models, otherwise a worker id.
struct TraceEvent {
  double elapsed_ms = 0;
  Scalar objective = 0;
  int snapshot = kSnapshotAvg;
};

// Raised when a worker body throws; carries the worker id.
class GangWorkerError : public std::runtime_error {
 public:
  GangWorkerError(int worker, const std::string& what)
      : std::runtime_error("worker " + std::to_string(worker) + ": " + what),
        worker_(worker) {}
  int worker() const { return worker_; }

 private:
  int worker_;
};

// Services the runtime provides to a worker body. tick reports completed
// work in recorded events (one event per record gradient, delivered
// envelope, or push) and is what advances the virtual clock.
class WorkerContext {
 public:
  virtual ~WorkerContext() = default;
  virtual AsipChannel& channel() = 0;
  virtual double now_ms() const = 0;
  virtual void tick(std::int64_t events) = 0;
  virtual int worker() const = 0;
};

// A worker's solver state plus its inner loop. step() performs one small
// unit of work (at most a handful of events) so the runtime can gate
// pauses, faults, and the budget between calls. Bodies must keep
// stepping (and ticking) until the runtime stops them; a body that has
// nothing left to do reports done() = true.
class AsipWorkerBody {
 public:
  virtual ~AsipWorkerBody() = default;
  virtual void step(WorkerContext& ctx) = 0;
  virtual void reset() = 0;
  virtual const ModelVector& model() const = 0;
  virtual ModelVector final_model() const { return model(); }
  virtual bool done() const { return false; }
  virtual bool diverged() const { return false; }
};

using SnapshotObjective = std::function<Scalar(const ModelVector&)>;

struct GangResult {
  std::vector<ModelVector> finals;
  std::vector<TraceEvent> trace;
  std::vector<bool> diverged;
};

// Runs one gang: all workers start together and run until the time
// budget elapses (or every body is done). Straggler pauses and the fault
// reset are injected per config. The trace records, at t = 0 and every
// sample period, the objective of the average model and of each worker
// model, via the supplied callback.
GangResult run_gang(const RuntimeConfig& cfg,
                    std::vector<std::unique_ptr<AsipWorkerBody>>& bodies,
                    const SnapshotObjective& objective);

}  // namespace asiplab
