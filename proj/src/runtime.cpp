#include "asiplab/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <latch>
#include <mutex>
#include <thread>

namespace asiplab {

namespace {

using SteadyClock = std::chrono::steady_clock;

double ms_since(SteadyClock::time_point t0) {
  return std::chrono::duration<double, std::milli>(SteadyClock::now() - t0)
      .count();
}

void validate(const RuntimeConfig& cfg, std::size_t bodies) {
  if (cfg.p < 1) throw std::invalid_argument("run_gang: p must be at least 1");
  if (bodies != static_cast<std::size_t>(cfg.p))
    throw std::invalid_argument("run_gang: body count must equal p");
  if (!(cfg.time_budget_ms > 0))
    throw std::invalid_argument("run_gang: time budget must be positive");
  if (!(cfg.virtual_step_ms > 0))
    throw std::invalid_argument("run_gang: virtual step must be positive");
  if (!(cfg.sample_period_ms > 0))
    throw std::invalid_argument("run_gang: sample period must be positive");
  if (cfg.straggler) {
    const auto& s = *cfg.straggler;
    if (s.worker < 0 || s.worker >= cfg.p)
      throw std::invalid_argument("run_gang: straggler worker out of range");
    if (!(s.pause_ms > 0) || !(s.pause_ms < s.period_ms))
      throw std::invalid_argument(
          "run_gang: straggler pause must satisfy 0 < pause < period");
  }
  if (cfg.fault) {
    if (cfg.fault->worker < 0 || cfg.fault->worker >= cfg.p)
      throw std::invalid_argument("run_gang: fault worker out of range");
    if (cfg.fault->at_ms < 0)
      throw std::invalid_argument("run_gang: fault time must be >= 0");
  }
}

ModelVector average_model(const std::vector<ModelVector>& models) {
  ModelVector avg = models[0];
  for (std::size_t i = 1; i < models.size(); ++i) avg += models[i];
  return avg / static_cast<Scalar>(models.size());
}

void append_sample(std::vector<TraceEvent>& trace, double t,
                   const std::vector<ModelVector>& models,
                   const SnapshotObjective& objective) {
  trace.push_back({t, objective(average_model(models)), kSnapshotAvg});
  for (std::size_t i = 0; i < models.size(); ++i)
    trace.push_back({t, objective(models[i]), static_cast<int>(i)});
}

// Straggler schedule: in each period the worker is active for
// period - pause, then pauses. Returns the start of the first pause.
double first_pause_start(const StragglerSpec& s) {
  return s.period_ms - s.pause_ms;
}

class VirtualContext final : public WorkerContext {
 public:
  VirtualContext(AsipChannel chan, int worker, double step_ms)
      : chan_(std::move(chan)), worker_(worker), step_ms_(step_ms) {}

  AsipChannel& channel() override { return chan_; }
  double now_ms() const override { return local_ms_; }
  void tick(std::int64_t events) override {
    local_ms_ += static_cast<double>(events) * step_ms_;
  }
  int worker() const override { return worker_; }

  double local_ms_ = 0;
  AsipChannel chan_;

 private:
  int worker_;
  double step_ms_;
};

// Cooperative single-thread simulation: repeatedly run one step of the
// worker with the smallest local time (ties to the lowest id). Pauses
// jump the local clock without doing work, so the other workers run
// through the gap, exactly as a stalled peer would be overtaken.
GangResult run_gang_virtual(const RuntimeConfig& cfg,
                            std::vector<std::unique_ptr<AsipWorkerBody>>& bodies,
                            const SnapshotObjective& objective,
                            BroadcastBus& bus) {
  const int p = cfg.p;
  GangResult result;

  std::vector<VirtualContext> ctx;
  ctx.reserve(p);
  for (int i = 0; i < p; ++i)
    ctx.emplace_back(bus.channel(i), i, cfg.virtual_step_ms);

  std::vector<bool> finished(p, false);
  std::vector<double> pause_start(p, -1.0);
  if (cfg.straggler)
    pause_start[cfg.straggler->worker] = first_pause_start(*cfg.straggler);
  bool fault_pending = cfg.fault.has_value();

  auto models = [&]() {
    std::vector<ModelVector> m;
    m.reserve(p);
    for (int i = 0; i < p; ++i) m.push_back(bodies[i]->model());
    return m;
  };

  append_sample(result.trace, 0.0, models(), objective);
  double next_target = cfg.sample_period_ms;

  while (true) {
    int i = -1;
    for (int j = 0; j < p; ++j) {
      if (finished[j]) continue;
      if (i < 0 || ctx[j].local_ms_ < ctx[i].local_ms_) i = j;
    }
    if (i < 0) break;
    const double local = ctx[i].local_ms_;

    // local is the global minimum time, so every sample target it has
    // passed is final and can be recorded.
    while (next_target <= local && next_target < cfg.time_budget_ms) {
      append_sample(result.trace, next_target, models(), objective);
      next_target += cfg.sample_period_ms;
    }

    if (pause_start[i] >= 0 && local >= pause_start[i]) {
      ctx[i].local_ms_ += cfg.straggler->pause_ms;
      pause_start[i] += cfg.straggler->period_ms;
      continue;
    }
    if (fault_pending && cfg.fault->worker == i && local >= cfg.fault->at_ms) {
      fault_pending = false;
      bodies[i]->reset();
      bus.reset_worker(i);
      ctx[i].chan_ = bus.channel(i);
      continue;
    }
    if (local >= cfg.time_budget_ms || bodies[i]->done()) {
      finished[i] = true;
      continue;
    }
    try {
      bodies[i]->step(ctx[i]);
    } catch (const std::exception& e) {
      throw GangWorkerError(i, e.what());
    }
    if (ctx[i].local_ms_ == local) ctx[i].tick(1);  // a step never stalls time
  }

  while (next_target < cfg.time_budget_ms) {
    append_sample(result.trace, next_target, models(), objective);
    next_target += cfg.sample_period_ms;
  }
  append_sample(result.trace, cfg.time_budget_ms, models(), objective);
  return result;
}

class RealContext final : public WorkerContext {
 public:
  RealContext(AsipChannel chan, int worker, SteadyClock::time_point t0)
      : chan_(std::move(chan)), worker_(worker), t0_(t0) {}

  AsipChannel& channel() override { return chan_; }
  double now_ms() const override { return ms_since(t0_); }
  void tick(std::int64_t) override {}
  int worker() const override { return worker_; }

  AsipChannel chan_;

 private:
  int worker_;
  SteadyClock::time_point t0_;
};

// Snapshot slot a worker republishes after each step; the monitor copies
// it under a short lock and never touches the worker's live state.
struct SnapshotSlot {
  std::mutex mutex;
  ModelVector model;
};

GangResult run_gang_real(const RuntimeConfig& cfg,
                         std::vector<std::unique_ptr<AsipWorkerBody>>& bodies,
                         const SnapshotObjective& objective,
                         BroadcastBus& bus) {
  const int p = cfg.p;
  GangResult result;

  std::vector<SnapshotSlot> slots(p);
  for (int i = 0; i < p; ++i) slots[i].model = bodies[i]->model();

  {
    std::vector<ModelVector> init;
    init.reserve(p);
    for (int i = 0; i < p; ++i) init.push_back(bodies[i]->model());
    append_sample(result.trace, 0.0, init, objective);
  }

  std::atomic<bool> stop{false};
  std::mutex crash_mutex;
  int crash_worker = -1;
  std::string crash_what;

  std::mutex wake_mutex;
  std::condition_variable wake_cv;
  std::atomic<int> running{p};

  std::latch start(1);
  SteadyClock::time_point t0{};

  auto worker_main = [&](int i) {
    start.wait();
    RealContext ctx(bus.channel(i), i, t0);
    double pause_start =
        (cfg.straggler && cfg.straggler->worker == i)
            ? first_pause_start(*cfg.straggler)
            : -1.0;
    bool fault_pending = cfg.fault && cfg.fault->worker == i;
    while (!stop.load(std::memory_order_relaxed)) {
      const double now = ctx.now_ms();
      if (now >= cfg.time_budget_ms) break;
      if (pause_start >= 0 && now >= pause_start) {
        const double nap =
            std::min(cfg.straggler->pause_ms, cfg.time_budget_ms - now);
        std::this_thread::sleep_for(
            std::chrono::duration<double, std::milli>(nap));
        pause_start += cfg.straggler->period_ms;
        continue;
      }
      if (fault_pending && now >= cfg.fault->at_ms) {
        fault_pending = false;
        bodies[i]->reset();
        bus.reset_worker(i);
        ctx.chan_ = bus.channel(i);
      }
      try {
        bodies[i]->step(ctx);
      } catch (const std::exception& e) {
        {
          std::lock_guard<std::mutex> lock(crash_mutex);
          if (crash_worker < 0) {
            crash_worker = i;
            crash_what = e.what();
          }
        }
        stop.store(true);
        break;
      }
      {
        std::lock_guard<std::mutex> lock(slots[i].mutex);
        slots[i].model = bodies[i]->model();
      }
      if (bodies[i]->done()) break;
    }
    if (running.fetch_sub(1) == 1) {
      std::lock_guard<std::mutex> lock(wake_mutex);
      wake_cv.notify_all();
    }
  };

  auto read_slots = [&]() {
    std::vector<ModelVector> m;
    m.reserve(p);
    for (int i = 0; i < p; ++i) {
      std::lock_guard<std::mutex> lock(slots[i].mutex);
      m.push_back(slots[i].model);
    }
    return m;
  };

  double last_sampled = 0.0;
  auto monitor_main = [&]() {
    start.wait();
    for (int k = 1;; ++k) {
      const double target =
          std::min(k * cfg.sample_period_ms, cfg.time_budget_ms);
      {
        std::unique_lock<std::mutex> lock(wake_mutex);
        wake_cv.wait_until(
            lock,
            t0 + std::chrono::duration_cast<SteadyClock::duration>(
                     std::chrono::duration<double, std::milli>(target)),
            [&] { return stop.load() || running.load() == 0; });
      }
      if (stop.load() || running.load() == 0) return;
      append_sample(result.trace, target, read_slots(), objective);
      last_sampled = target;
      if (target >= cfg.time_budget_ms) return;
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(p + 1);
  for (int i = 0; i < p; ++i) threads.emplace_back(worker_main, i);
  std::thread monitor;
  t0 = SteadyClock::now();
  start.count_down();
  monitor = std::thread(monitor_main);
  for (auto& t : threads) t.join();
  {
    std::lock_guard<std::mutex> lock(wake_mutex);
    wake_cv.notify_all();
  }
  monitor.join();

  if (crash_worker >= 0) throw GangWorkerError(crash_worker, crash_what);

  if (last_sampled < cfg.time_budget_ms) {
    const double end_t =
        std::max(std::min(ms_since(t0), cfg.time_budget_ms),
                 std::nextafter(last_sampled, cfg.time_budget_ms));
    std::vector<ModelVector> finals;
    finals.reserve(p);
    for (int i = 0; i < p; ++i) finals.push_back(bodies[i]->model());
    append_sample(result.trace, end_t, finals, objective);
  }
  return result;
}

}  // namespace

GangResult run_gang(const RuntimeConfig& cfg,
                    std::vector<std::unique_ptr<AsipWorkerBody>>& bodies,
                    const SnapshotObjective& objective) {
  validate(cfg, bodies.size());
  for (const auto& b : bodies)
    if (!b) throw std::invalid_argument("run_gang: null worker body");

  const Index dim = bodies[0]->model().size();
  BroadcastBus bus(cfg.p, cfg.inbox_capacity, cfg.duplicate_push_suppression,
                   dim);

  GangResult result = cfg.clock == ClockMode::Virtual
                          ? run_gang_virtual(cfg, bodies, objective, bus)
                          : run_gang_real(cfg, bodies, objective, bus);

  result.finals.reserve(cfg.p);
  result.diverged.reserve(cfg.p);
  for (int i = 0; i < cfg.p; ++i) {
    result.finals.push_back(bodies[i]->final_model());
    result.diverged.push_back(bodies[i]->diverged());
  }
  return result;
}

}  // namespace asiplab
