#include "asiplab/experiment.hpp"
#include "asiplab/pointcloud.hpp"
#include "asiplab/sparse_text.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace asiplab;

// Every ExperimentConfig setting doubles as a CLI flag; the config file
// and the command line share one key table (flags win).
struct ExperimentFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path,
                    "flat key=value config file, overridden by flags");
    static const std::pair<const char*, const char*> kKeys[] = {
        {"algorithm",
         "asip-sgd|asip-dualavg|asip-admm|bsp-gd|bsp-admm|avg"},
        {"loss", "svm|lr"},
        {"reg", "l1|l2"},
        {"lambda", "regularization weight"},
        {"eta0", "step size scale, eta0/sqrt(t)"},
        {"rho", "consensus penalty"},
        {"epsilon", "primal stopping threshold"},
        {"batch-size", "records per stochastic gradient"},
        {"comm-rate-push-ms", "minimum ms between pushes"},
        {"polls-every-steps", "inbox drain cadence"},
        {"max-primal-iters", "primal iteration cap per round"},
        {"outer-rounds", "consensus round cap"},
        {"time-budget-ms", "run length"},
        {"workers", "worker count p"},
        {"inbox-capacity", "per-worker inbox slots"},
        {"clock", "real|virtual"},
        {"virtual-step-ms", "modeled ms per record gradient"},
        {"sample-period-ms", "trace sampling period"},
        {"straggler", "worker,pause_ms,period_ms or off"},
        {"fault", "worker,at_ms or off"},
        {"duplicate-push-suppression", "true|false"},
        {"seed", "run seed"},
        {"data", "sparse text dataset path"},
        {"pointcloud-n", "generated records per class"},
        {"pointcloud-sigma", "point cloud spread"},
        {"placement", "uniform|skewed"},
        {"out", "trace CSV path"},
    };
    for (const auto& [key, help] : kKeys) {
      CLI::Option* opt =
          cmd->add_option("--" + std::string(key), values[key], help);
      options.emplace_back(key, opt);
    }
  }

  bool given(const std::string& key) const {
    for (const auto& [k, opt] : options)
      if (k == key) return opt->count() > 0;
    return false;
  }

  ExperimentConfig make_config() const {
    ExperimentConfig cfg;
    if (const char* env = std::getenv("ASIPLAB_SEED"))
      apply_setting(cfg, "seed", env);
    if (!config_path.empty()) load_config_file(cfg, config_path);
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) apply_setting(cfg, key, values.at(key));
    return cfg;
  }
};

int run_single(const ExperimentFlags& flags) {
  ExperimentConfig cfg = flags.make_config();
  const ExperimentResult r = run_experiment(cfg);
  std::printf("algorithm %s\n", algorithm_name(cfg.algorithm));
  std::printf("final_objective %.17g\n", r.final_objective);
  std::printf("wall_ms %.3f\n", r.wall_ms);
  std::printf("data_load_ms %.3f\n", r.data_load_ms);
  if (r.diverged) {
    std::fprintf(stderr,
                 "divergence detected; model reverted to last finite state\n");
    return 2;
  }
  return 0;
}

int run_perturb(const ExperimentFlags& flags, const std::string& mode_name) {
  ExperimentConfig cfg = flags.make_config();
  const PerturbationMode mode = mode_name == "straggler"
                                    ? PerturbationMode::Straggler
                                    : PerturbationMode::Fault;
  // When no perturbation is pinned, fill in the canonical one: a 1 s
  // pause every 2 s on worker 0, or a worker-0 reset at 30% of budget.
  // An explicit `off` keeps it disabled and the ratios land at 1.
  if (mode == PerturbationMode::Straggler && !cfg.runtime.straggler &&
      !flags.given("straggler"))
    cfg.runtime.straggler = StragglerSpec{0, 1000.0, 2000.0};
  if (mode == PerturbationMode::Fault && !cfg.runtime.fault &&
      !flags.given("fault"))
    cfg.runtime.fault = FaultSpec{0, 0.3 * cfg.hyper.time_budget_ms};

  const RatioReport report = run_perturbation_suite(cfg, mode);
  std::printf("mode %s\n", mode_name.c_str());
  std::printf("perturbation_applied %s\n",
              report.perturbation_applied ? "yes" : "no");
  for (int c = 0; c < 2; ++c) {
    std::printf("checkpoint_ms %.17g baseline %.17g perturbed %.17g ratio %.17g\n",
                report.checkpoint_ms[c], report.baseline[c],
                report.perturbed[c], report.ratio[c]);
  }
  return 0;
}

int run_compare(const ExperimentFlags& flags, const std::string& algorithms,
                const std::string& out_prefix) {
  const ExperimentConfig base = flags.make_config();

  std::vector<Algorithm> algos;
  std::stringstream ss(algorithms);
  std::string name;
  while (std::getline(ss, name, ','))
    if (!name.empty()) algos.push_back(parse_algorithm(name));
  if (algos.empty()) throw UsageError("algorithms", "no algorithms named");

  std::printf("%-14s %-22s %10s %s\n", "algorithm", "final_objective",
              "wall_ms", "diverged");
  bool any_diverged = false;
  for (Algorithm a : algos) {
    ExperimentConfig cfg = base;
    cfg.algorithm = a;
    if (!out_prefix.empty())
      cfg.output_path = out_prefix + algorithm_name(a) + ".csv";
    const ExperimentResult r = run_experiment(cfg);
    any_diverged = any_diverged || r.diverged;
    std::printf("%-14s %-22.15g %10.3f %s\n", algorithm_name(a),
                r.final_objective, r.wall_ms, r.diverged ? "yes" : "no");
  }
  return any_diverged ? 2 : 0;
}

int run_gen(std::size_t n_per_class, double sigma, std::uint64_t seed,
            bool seed_given, const std::string& out) {
  PointCloudSpec pc;
  pc.n_per_class = n_per_class;
  pc.sigma = sigma;
  pc.seed = seed;
  if (!seed_given)
    if (const char* env = std::getenv("ASIPLAB_SEED"))
      pc.seed = static_cast<std::uint64_t>(std::stoll(env));
  const std::vector<Record> records = generate_point_cloud(pc);
  save_sparse_text(out, records);
  std::printf("wrote %zu records to %s\n", records.size(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asynchronous sideways information passing lab"};
  app.require_subcommand(1);
  int exit_code = 0;

  ExperimentFlags run_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "run one experiment");
  run_flags.attach(run_cmd);
  run_cmd->callback([&] { exit_code = run_single(run_flags); });

  ExperimentFlags perturb_flags;
  std::string mode_name;
  CLI::App* perturb_cmd = app.add_subcommand(
      "perturb", "compare a baseline run against a perturbed one");
  perturb_flags.attach(perturb_cmd);
  perturb_cmd
      ->add_option("--mode", mode_name, "straggler|fault")
      ->required()
      ->check(CLI::IsMember({"straggler", "fault"}));
  perturb_cmd->callback(
      [&] { exit_code = run_perturb(perturb_flags, mode_name); });

  ExperimentFlags compare_flags;
  std::string algorithms =
      "asip-sgd,asip-dualavg,asip-admm,bsp-gd,bsp-admm,avg";
  std::string out_prefix;
  CLI::App* compare_cmd = app.add_subcommand(
      "compare", "run several algorithms on the same instance");
  compare_flags.attach(compare_cmd);
  compare_cmd->add_option("--algorithms", algorithms,
                          "comma-separated algorithm list");
  compare_cmd->add_option("--out-prefix", out_prefix,
                          "write <prefix><algorithm>.csv per run");
  compare_cmd->callback([&] {
    exit_code = run_compare(compare_flags, algorithms, out_prefix);
  });

  std::size_t n_per_class = 0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::string gen_out;
  CLI::App* gen_cmd =
      app.add_subcommand("gen-pointcloud", "generate a two-cloud dataset");
  gen_cmd->add_option("--n-per-class", n_per_class, "records per class")
      ->required()
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--sigma", sigma, "cloud spread");
  CLI::Option* seed_opt = gen_cmd->add_option("--seed", seed, "generator seed");
  gen_cmd->add_option("--out", gen_out, "output path")->required();
  gen_cmd->callback([&] {
    exit_code =
        run_gen(n_per_class, sigma, seed, seed_opt->count() > 0, gen_out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const asiplab::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const asiplab::ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}
