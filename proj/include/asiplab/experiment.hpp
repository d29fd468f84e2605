#pragma once

#include "asiplab/dataset.hpp"
#include "asiplab/objective.hpp"
#include "asiplab/runtime.hpp"
#include "asiplab/solvers.hpp"

#include <array>
#include <string>
#include <vector>

namespace asiplab {

enum class Algorithm { AsipSgd, AsipDualAvg, AsipAdmm, BspGd, BspAdmm, Avg };

const char* algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name);  // UsageError on bad name

// Raised on an invalid configuration; carries the offending field.
class UsageError : public std::runtime_error {
 public:
  UsageError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::AsipSgd;
  ObjectiveSpec objective;     // loss svm|lr, reg l1|l2, lambda
  SolverHyperparams hyper;
  RuntimeConfig runtime;       // workers, clock, budget, perturbations, seed

  std::string data_path;                   // file source...
  std::size_t pointcloud_n_per_class = 0;  // ...or generated source
  Scalar pointcloud_sigma = 1.0;
  PlacementPolicy placement = PlacementPolicy::Uniform;
  std::string output_path;  // trace CSV; empty writes no file

  // Set when the user pinned the value; finalize() leaves those alone.
  bool comm_rate_explicit = false;
  bool seed_explicit = false;
};

// Applies one key=value setting (config file and CLI share the same
// keys). Unknown keys and unparseable values raise UsageError.
void apply_setting(ExperimentConfig& cfg, const std::string& key,
                   const std::string& value);

// Reads a flat key=value file ('#' starts a comment).
void load_config_file(ExperimentConfig& cfg, const std::string& path);

// Fills algorithm-dependent defaults (consensus solvers push once per
// 100 ms unless pinned) and checks every field, raising UsageError
// naming the first offender.
void finalize_config(ExperimentConfig& cfg);

struct ExperimentResult {
  ModelVector model;
  Scalar final_objective = 0;
  double wall_ms = 0;       // solve time; data loading is excluded
  double data_load_ms = 0;
  std::vector<TraceEvent> trace;
  bool diverged = false;
};

// Loads or generates the configured dataset, runs the configured solver,
// and (if output_path is set) writes the trace CSV.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Writes header `elapsed_ms,objective,snapshot` plus one row per trace
// event; snapshot is `avg` or `w<i>`.
void write_trace_csv(const std::string& path,
                     const std::vector<TraceEvent>& trace);

// Last objective of the averaged-model stream at or before elapsed t.
Scalar objective_at(const std::vector<TraceEvent>& trace, double t);

enum class PerturbationMode { Straggler, Fault };

struct RatioReport {
  std::array<double, 2> checkpoint_ms{};
  std::array<Scalar, 2> baseline{};
  std::array<Scalar, 2> perturbed{};
  std::array<Scalar, 2> ratio{};
  bool perturbation_applied = false;
};

// Runs the experiment twice on identical data and seeds, once without
// any perturbation and once with the configured one, and reports the
// objective ratios perturbed/baseline at 50% and 100% of the budget.
// When the config carries no perturbation of the requested kind, the
// baseline stands in for both runs and the ratios are exactly 1.
RatioReport run_perturbation_suite(const ExperimentConfig& cfg,
                                   PerturbationMode mode);

}  // namespace asiplab
