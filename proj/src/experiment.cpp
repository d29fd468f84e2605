#include "asiplab/experiment.hpp"

#include "asiplab/pointcloud.hpp"
#include "asiplab/sparse_text.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace asiplab {

namespace {

using SteadyClock = std::chrono::steady_clock;

double ms_between(SteadyClock::time_point a, SteadyClock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw UsageError(key, "expected a number, got '" + value + "'");
  }
  if (used != value.size())
    throw UsageError(key, "expected a number, got '" + value + "'");
  return v;
}

long long parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    throw UsageError(key, "expected an integer, got '" + value + "'");
  }
  if (used != value.size())
    throw UsageError(key, "expected an integer, got '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw UsageError(key, "expected true or false, got '" + value + "'");
}

// "worker,a,b" for stragglers, "worker,at" for faults, or "off".
std::vector<double> parse_csv_numbers(const std::string& key,
                                      const std::string& value,
                                      std::size_t count) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.size() != count)
    throw UsageError(key, "expected " + std::to_string(count) +
                              " comma-separated numbers, got '" + value + "'");
  return out;
}

}  // namespace

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::AsipSgd: return "asip-sgd";
    case Algorithm::AsipDualAvg: return "asip-dualavg";
    case Algorithm::AsipAdmm: return "asip-admm";
    case Algorithm::BspGd: return "bsp-gd";
    case Algorithm::BspAdmm: return "bsp-admm";
    case Algorithm::Avg: return "avg";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::AsipSgd, Algorithm::AsipDualAvg,
                      Algorithm::AsipAdmm, Algorithm::BspGd,
                      Algorithm::BspAdmm, Algorithm::Avg})
    if (name == algorithm_name(a)) return a;
  throw UsageError("algorithm", "unknown algorithm '" + name + "'");
}

void apply_setting(ExperimentConfig& cfg, const std::string& key,
                   const std::string& value) {
  if (key == "algorithm") {
    cfg.algorithm = parse_algorithm(value);
  } else if (key == "loss") {
    if (value == "svm") cfg.objective.loss = LossKind::Hinge;
    else if (value == "lr") cfg.objective.loss = LossKind::Logistic;
    else throw UsageError(key, "expected svm or lr, got '" + value + "'");
  } else if (key == "reg") {
    if (value == "l1") cfg.objective.reg = RegKind::L1;
    else if (value == "l2") cfg.objective.reg = RegKind::L2;
    else throw UsageError(key, "expected l1 or l2, got '" + value + "'");
  } else if (key == "lambda") {
    cfg.objective.lambda = parse_double(key, value);
  } else if (key == "eta0") {
    cfg.hyper.eta0 = parse_double(key, value);
  } else if (key == "rho") {
    cfg.hyper.rho = parse_double(key, value);
  } else if (key == "epsilon") {
    cfg.hyper.epsilon = parse_double(key, value);
  } else if (key == "batch-size") {
    cfg.hyper.batch_size = static_cast<int>(parse_int(key, value));
  } else if (key == "comm-rate-push-ms") {
    cfg.hyper.comm_rate_push_ms = parse_double(key, value);
    cfg.comm_rate_explicit = true;
  } else if (key == "polls-every-steps") {
    cfg.hyper.polls_every_k_steps = static_cast<int>(parse_int(key, value));
  } else if (key == "max-primal-iters") {
    cfg.hyper.max_primal_iters = static_cast<int>(parse_int(key, value));
  } else if (key == "outer-rounds") {
    cfg.hyper.outer_rounds = parse_int(key, value);
  } else if (key == "time-budget-ms") {
    cfg.hyper.time_budget_ms = parse_double(key, value);
    cfg.runtime.time_budget_ms = cfg.hyper.time_budget_ms;
  } else if (key == "workers") {
    cfg.runtime.p = static_cast<int>(parse_int(key, value));
  } else if (key == "inbox-capacity") {
    const long long v = parse_int(key, value);
    if (v < 1) throw UsageError(key, "must be at least 1");
    cfg.runtime.inbox_capacity = static_cast<std::size_t>(v);
  } else if (key == "clock") {
    if (value == "real") cfg.runtime.clock = ClockMode::Real;
    else if (value == "virtual") cfg.runtime.clock = ClockMode::Virtual;
    else throw UsageError(key, "expected real or virtual, got '" + value + "'");
  } else if (key == "virtual-step-ms") {
    cfg.runtime.virtual_step_ms = parse_double(key, value);
  } else if (key == "sample-period-ms") {
    cfg.runtime.sample_period_ms = parse_double(key, value);
  } else if (key == "straggler") {
    if (value == "off") {
      cfg.runtime.straggler.reset();
    } else {
      const auto v = parse_csv_numbers(key, value, 3);
      cfg.runtime.straggler =
          StragglerSpec{static_cast<int>(v[0]), v[1], v[2]};
    }
  } else if (key == "fault") {
    if (value == "off") {
      cfg.runtime.fault.reset();
    } else {
      const auto v = parse_csv_numbers(key, value, 2);
      cfg.runtime.fault = FaultSpec{static_cast<int>(v[0]), v[1]};
    }
  } else if (key == "duplicate-push-suppression") {
    cfg.runtime.duplicate_push_suppression = parse_bool(key, value);
  } else if (key == "seed") {
    cfg.runtime.seed =
        static_cast<std::uint64_t>(parse_int(key, value));
    cfg.seed_explicit = true;
  } else if (key == "data") {
    cfg.data_path = value;
  } else if (key == "pointcloud-n") {
    const long long v = parse_int(key, value);
    if (v < 1) throw UsageError(key, "must be at least 1");
    cfg.pointcloud_n_per_class = static_cast<std::size_t>(v);
  } else if (key == "pointcloud-sigma") {
    cfg.pointcloud_sigma = parse_double(key, value);
  } else if (key == "placement") {
    if (value == "uniform") cfg.placement = PlacementPolicy::Uniform;
    else if (value == "skewed") cfg.placement = PlacementPolicy::SkewedByLabel;
    else throw UsageError(key, "expected uniform or skewed, got '" + value + "'");
  } else if (key == "out") {
    cfg.output_path = value;
  } else {
    throw UsageError(key, "unknown setting");
  }
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config", "cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    std::size_t b = line.find_last_not_of(" \t\r");
    line = line.substr(a, b - a + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config", path + " line " + std::to_string(line_no) +
                                     ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto strip = [](std::string& s) {
      const std::size_t x = s.find_first_not_of(" \t");
      const std::size_t y = s.find_last_not_of(" \t");
      s = x == std::string::npos ? "" : s.substr(x, y - x + 1);
    };
    strip(key);
    strip(value);
    apply_setting(cfg, key, value);
  }
}

void finalize_config(ExperimentConfig& cfg) {
  if (!cfg.comm_rate_explicit && (cfg.algorithm == Algorithm::AsipAdmm ||
                                  cfg.algorithm == Algorithm::BspAdmm))
    cfg.hyper.comm_rate_push_ms = 100.0;

  if (cfg.runtime.p < 1) throw UsageError("workers", "must be at least 1");
  if (cfg.objective.lambda < 0) throw UsageError("lambda", "must be >= 0");
  if (!(cfg.hyper.eta0 > 0)) throw UsageError("eta0", "must be positive");
  if (!(cfg.hyper.rho > 0)) throw UsageError("rho", "must be positive");
  if (!(cfg.hyper.epsilon > 0)) throw UsageError("epsilon", "must be positive");
  if (cfg.hyper.batch_size < 1)
    throw UsageError("batch-size", "must be at least 1");
  if (!(cfg.hyper.comm_rate_push_ms > 0))
    throw UsageError("comm-rate-push-ms", "must be positive");
  if (cfg.hyper.polls_every_k_steps < 1)
    throw UsageError("polls-every-steps", "must be at least 1");
  if (cfg.hyper.max_primal_iters < 1)
    throw UsageError("max-primal-iters", "must be at least 1");
  if (cfg.hyper.outer_rounds < 1)
    throw UsageError("outer-rounds", "must be at least 1");
  if (!(cfg.hyper.time_budget_ms > 0))
    throw UsageError("time-budget-ms", "must be positive");
  if (!(cfg.runtime.virtual_step_ms > 0))
    throw UsageError("virtual-step-ms", "must be positive");
  if (!(cfg.runtime.sample_period_ms > 0))
    throw UsageError("sample-period-ms", "must be positive");
  if (cfg.data_path.empty() == (cfg.pointcloud_n_per_class == 0))
    throw UsageError("data",
                     "exactly one data source: data=<path> or pointcloud-n=<n>");
  if (cfg.runtime.straggler) {
    const auto& s = *cfg.runtime.straggler;
    if (s.worker < 0 || s.worker >= cfg.runtime.p)
      throw UsageError("straggler", "worker id out of range");
    if (!(s.pause_ms > 0) || !(s.pause_ms < s.period_ms))
      throw UsageError("straggler", "need 0 < pause < period");
  }
  if (cfg.runtime.fault) {
    if (cfg.runtime.fault->worker < 0 ||
        cfg.runtime.fault->worker >= cfg.runtime.p)
      throw UsageError("fault", "worker id out of range");
    if (cfg.runtime.fault->at_ms < 0)
      throw UsageError("fault", "reset time must be >= 0");
  }
  cfg.runtime.time_budget_ms = cfg.hyper.time_budget_ms;
}

namespace {

std::vector<Record> load_records(const ExperimentConfig& cfg) {
  if (!cfg.data_path.empty()) return load_sparse_text(cfg.data_path);
  PointCloudSpec pc;
  pc.n_per_class = cfg.pointcloud_n_per_class;
  pc.sigma = cfg.pointcloud_sigma;
  pc.seed = cfg.runtime.seed;
  return generate_point_cloud(pc);
}

BspSimConfig bsp_sim_from(const RuntimeConfig& rt) {
  BspSimConfig sim;
  sim.virtual_step_ms = rt.virtual_step_ms;
  sim.straggler = rt.straggler;
  sim.fault = rt.fault;
  sim.seed = rt.seed;
  return sim;
}

ModelVector average_of(const std::vector<ModelVector>& models) {
  ModelVector avg = models[0];
  for (std::size_t i = 1; i < models.size(); ++i) avg += models[i];
  return avg / static_cast<Scalar>(models.size());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentConfig cfg = config;
  finalize_config(cfg);

  const auto load_start = SteadyClock::now();
  std::vector<Record> records = load_records(cfg);
  PartitionedDataset data =
      partition(records, cfg.runtime.p, cfg.placement, cfg.runtime.seed);
  const auto solve_start = SteadyClock::now();

  ExperimentResult result;
  result.data_load_ms = ms_between(load_start, solve_start);

  const ObjectiveSpec& obj = cfg.objective;
  auto objective_cb = [&](const ModelVector& m) {
    return full_objective(obj, m, data);
  };

  switch (cfg.algorithm) {
    case Algorithm::AsipSgd:
    case Algorithm::AsipDualAvg:
    case Algorithm::AsipAdmm: {
      std::vector<std::unique_ptr<AsipWorkerBody>> bodies;
      bodies.reserve(cfg.runtime.p);
      for (int i = 0; i < cfg.runtime.p; ++i) {
        const std::uint64_t seed = worker_seed(cfg.runtime.seed, i);
        const std::vector<Record>* part = &data.partitions[i];
        if (cfg.algorithm == Algorithm::AsipSgd)
          bodies.push_back(std::make_unique<AsipSgdWorker>(
              part, data.dimension, cfg.hyper, obj, seed));
        else if (cfg.algorithm == Algorithm::AsipDualAvg)
          bodies.push_back(std::make_unique<AsipDualAveragingWorker>(
              part, data.dimension, cfg.hyper, obj, cfg.runtime.p, seed));
        else
          bodies.push_back(std::make_unique<AsipAdmmWorker>(
              part, data.dimension, cfg.hyper, obj, cfg.runtime.p,
              static_cast<Scalar>(part->size()) /
                  static_cast<Scalar>(data.total_records()),
              seed));
      }
      GangResult gang = run_gang(cfg.runtime, bodies, objective_cb);
      result.model = average_of(gang.finals);
      result.trace = std::move(gang.trace);
      for (bool d : gang.diverged) result.diverged = result.diverged || d;
      break;
    }
    case Algorithm::BspGd: {
      BspResult r = bsp_gd(data, cfg.hyper, obj, bsp_sim_from(cfg.runtime));
      result.model = std::move(r.model);
      result.trace = std::move(r.trace);
      result.diverged = r.diverged;
      break;
    }
    case Algorithm::BspAdmm: {
      BspAdmmResult r =
          bsp_admm(data, cfg.hyper, obj, bsp_sim_from(cfg.runtime));
      result.model = std::move(r.z);
      result.trace = std::move(r.trace);
      result.diverged = r.diverged;
      break;
    }
    case Algorithm::Avg: {
      AvgResult r = avg_solver(data, cfg.hyper, obj, cfg.runtime);
      result.model = std::move(r.model);
      result.trace = std::move(r.trace);
      result.diverged = r.diverged;
      break;
    }
  }

  result.wall_ms = ms_between(solve_start, SteadyClock::now());
  result.final_objective = full_objective(obj, result.model, data);
  if (!cfg.output_path.empty()) write_trace_csv(cfg.output_path, result.trace);
  return result;
}

void write_trace_csv(const std::string& path,
                     const std::vector<TraceEvent>& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "elapsed_ms,objective,snapshot\n";
  char buf[128];
  for (const TraceEvent& e : trace) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,", e.elapsed_ms, e.objective);
    out << buf;
    if (e.snapshot == kSnapshotAvg)
      out << "avg";
    else
      out << 'w' << e.snapshot;
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

Scalar objective_at(const std::vector<TraceEvent>& trace, double t) {
  bool found = false;
  Scalar value = 0;
  for (const TraceEvent& e : trace) {
    if (e.snapshot != kSnapshotAvg) continue;
    if (e.elapsed_ms > t) break;
    value = e.objective;
    found = true;
  }
  if (!found) throw std::invalid_argument("trace has no sample before t");
  return value;
}

RatioReport run_perturbation_suite(const ExperimentConfig& config,
                                   PerturbationMode mode) {
  ExperimentConfig base = config;
  finalize_config(base);

  ExperimentConfig perturbed = base;
  base.runtime.straggler.reset();
  base.runtime.fault.reset();
  if (mode == PerturbationMode::Straggler) {
    perturbed.runtime.fault.reset();
    if (!perturbed.runtime.straggler) perturbed = base;
  } else {
    perturbed.runtime.straggler.reset();
    if (!perturbed.runtime.fault) perturbed = base;
  }
  const bool applied =
      perturbed.runtime.straggler.has_value() ||
      perturbed.runtime.fault.has_value();

  RatioReport report;
  report.perturbation_applied = applied;
  report.checkpoint_ms = {0.5 * base.hyper.time_budget_ms,
                          base.hyper.time_budget_ms};

  const ExperimentResult base_run = run_experiment(base);
  // Without a perturbation the two conditions are the same experiment,
  // so the baseline stands in for both and the ratios are exactly 1.
  const ExperimentResult* pert_run = &base_run;
  ExperimentResult pert_storage;
  if (applied) {
    pert_storage = run_experiment(perturbed);
    pert_run = &pert_storage;
  }

  for (int c = 0; c < 2; ++c) {
    report.baseline[c] = objective_at(base_run.trace, report.checkpoint_ms[c]);
    report.perturbed[c] =
        objective_at(pert_run->trace, report.checkpoint_ms[c]);
    report.ratio[c] = applied ? report.perturbed[c] / report.baseline[c] : 1.0;
  }
  return report;
}

}  // namespace asiplab
