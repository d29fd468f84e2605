// Acceptance gate. Each criterion prints one [PASS]/[FAIL] line (plus
// indented detail where a single number would hide too much) and the
// process exits with the number of failed criteria. Tolerances and
// instance parameters are pinned here as constants.

#include "asiplab/dataset.hpp"
#include "asiplab/experiment.hpp"
#include "asiplab/objective.hpp"
#include "asiplab/pointcloud.hpp"
#include "asiplab/rng.hpp"
#include "asiplab/runtime.hpp"
#include "asiplab/solvers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

using namespace asiplab;

namespace {

// Shared benchmark instance: two Gaussian clouds, 5000 records per class,
// sigma 1.0, eight uniform partitions, hinge + L2 at lambda 1e-2, a 60 s
// modeled budget at 1 us per record event, seed 1.
constexpr std::size_t kNPerClass = 5000;
constexpr Scalar kSigma = 1.0;
constexpr int kWorkers = 8;
constexpr Scalar kLambda = 1e-2;
constexpr double kBudgetMs = 60000.0;
constexpr double kEventCostMs = 0.001;
constexpr std::uint64_t kSeed = 1;

constexpr Scalar kFdH = 1e-6;          // central difference half-step
constexpr Scalar kFdRelTol = 1e-5;     // per-point gradient mismatch bound
constexpr int kFdPoints = 100;         // smooth points per objective family
constexpr Scalar kFdLambda = 0.35;
constexpr double kFdBudgetS = 5.0;

constexpr Scalar kProxTol = 1e-6;      // elementwise prox agreement bound
constexpr int kProxInstances = 100;
constexpr double kProxBudgetS = 5.0;

constexpr Scalar kC3RelTol = 0.05;     // allowed excess over the oracle
constexpr Scalar kC4Residual = 1e-2;   // max ||w_i - z|| at the end

// Skew separation margins (avg objective minus each consensus solver's),
// fixed by a pre-registered run of this instance on 2026-08-22 and
// asserted with 10% slack.
constexpr Scalar kSkewMarginBsp = 0.5397;
constexpr Scalar kSkewMarginAsip = 0.5397;
constexpr Scalar kSkewSlack = 0.10;

// One worker pauses 500 ms out of every 2000 ms: a 25% duty-cycle hole.
constexpr int kStragglerWorker = 0;
constexpr double kStragglerPauseMs = 500.0;
constexpr double kStragglerPeriodMs = 2000.0;

// One worker is reset at 30% of the budget.
constexpr int kFaultWorker = 0;
constexpr double kFaultAtMs = 18000.0;
constexpr Scalar kFaultBand = 0.10;    // |perturbed/baseline - 1| bound

constexpr int kChannelOps = 20000;
constexpr double kChannelBudgetS = 10.0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

ModelVector random_vec(Rng& rng, Index d, Scalar scale) {
  ModelVector v(d);
  for (Index i = 0; i < d; ++i) v[i] = scale * normal_pair(rng).first;
  return v;
}

// ---- criterion 1: analytic subgradients vs central differences ----

Scalar point_objective(LossKind loss, RegKind reg, const ModelVector& w,
                       const Record& r) {
  return loss_value(loss, w, r) + kFdLambda * reg_penalty(reg, w);
}

bool criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(7);
  const Index d = 6;
  Scalar worst = 0;
  int bad = 0;
  for (LossKind loss : {LossKind::Hinge, LossKind::Logistic}) {
    for (RegKind reg : {RegKind::L2, RegKind::L1}) {
      for (int n = 0; n < kFdPoints; ++n) {
        ModelVector w;
        Record r = Record(FeatureVector::dense(ModelVector::Zero(d)), 1.0);
        // Resample until clear of the hinge kink and, for L1, of every
        // coordinate axis: differentiation points must be smooth.
        for (;;) {
          w = random_vec(rng, d, 1.5);
          const Scalar y = uniform_index(rng, 2) == 0 ? -1.0 : 1.0;
          r = Record(FeatureVector::dense(random_vec(rng, d, 2.0)), y);
          if (loss == LossKind::Hinge &&
              std::abs(1.0 - y * dot(r.features, w)) < 1e-3)
            continue;
          if (reg == RegKind::L1 && w.cwiseAbs().minCoeff() < 1e-3) continue;
          break;
        }

        ModelVector analytic = ModelVector::Zero(d);
        accumulate_loss_subgradient(loss, w, r, 1.0, analytic);
        analytic += kFdLambda * reg_subgradient(reg, w);

        ModelVector fd(d);
        for (Index i = 0; i < d; ++i) {
          ModelVector wp = w, wm = w;
          wp[i] += kFdH;
          wm[i] -= kFdH;
          fd[i] = (point_objective(loss, reg, wp, r) -
                   point_objective(loss, reg, wm, r)) /
                  (2.0 * kFdH);
        }
        const Scalar scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
        const Scalar err = (analytic - fd).cwiseAbs().maxCoeff() / scale;
        worst = std::max(worst, err);
        if (err > kFdRelTol) ++bad;
      }
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = bad == 0 && secs < kFdBudgetS;
  std::printf(
      "[%s] criterion 1: analytic subgradients match central differences "
      "(4 families x %d smooth points, max rel err %.2e, %.2f s)\n",
      ok ? "PASS" : "FAIL", kFdPoints, worst, secs);
  return ok;
}

// ---- criterion 2: consensus step vs an independent scalar minimizer ----

// The consensus objective separates by coordinate into
//   lambda * reg(z) + (p * rho / 2) * (z - v)^2,  v = w_bar + mu_bar/rho.
// Its subgradient is monotone in z, so bisection on the sign pins the
// minimizer far below the requested tolerance without sharing any code
// with the closed forms under test.
Scalar prox_min(Scalar lambda, RegKind reg, Scalar prho, Scalar v) {
  auto slope = [&](Scalar z) {
    const Scalar r =
        reg == RegKind::L1 ? (z > 0 ? 1.0 : (z < 0 ? -1.0 : 0.0)) : z;
    return lambda * r + prho * (z - v);
  };
  Scalar lo = std::min(v, 0.0) - 1.0, hi = std::max(v, 0.0) + 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const Scalar mid = (lo + hi) / 2.0;
    if (slope(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return (lo + hi) / 2.0;
}

bool criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(8);
  const Index d = 5;
  Scalar worst = 0;
  int bad = 0;
  for (int n = 0; n < kProxInstances; ++n) {
    const RegKind reg = uniform_index(rng, 2) == 0 ? RegKind::L2 : RegKind::L1;
    const int p = static_cast<int>(uniform_index(rng, kWorkers)) + 1;
    const Scalar rho = std::pow(10.0, -3.0 + 4.0 * uniform_unit(rng));
    const Scalar lambda = 2.0 * uniform_unit(rng);
    const ModelVector w_bar = random_vec(rng, d, 1.0);
    const ModelVector mu_bar = random_vec(rng, d, rho);  // keeps v moderate

    const ModelVector z =
        consensus_update({rho, p, lambda, reg}, w_bar, mu_bar);
    for (Index i = 0; i < d; ++i) {
      const Scalar v = w_bar[i] + mu_bar[i] / rho;
      const Scalar err =
          std::abs(z[i] - prox_min(lambda, reg, p * rho, v));
      worst = std::max(worst, err);
      if (err > kProxTol) ++bad;
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = bad == 0 && secs < kProxBudgetS;
  std::printf(
      "[%s] criterion 2: consensus step matches the bisection oracle "
      "(%d random instances, max abs err %.2e, %.2f s)\n",
      ok ? "PASS" : "FAIL", kProxInstances, worst, secs);
  return ok;
}

// ---- criteria 3-7 share the benchmark instance ----

ExperimentConfig instance_config(Algorithm a) {
  ExperimentConfig cfg;
  cfg.algorithm = a;
  cfg.objective = {LossKind::Hinge, RegKind::L2, kLambda};
  cfg.pointcloud_n_per_class = kNPerClass;
  cfg.pointcloud_sigma = kSigma;
  cfg.placement = PlacementPolicy::Uniform;
  cfg.runtime.p = kWorkers;
  cfg.runtime.clock = ClockMode::Virtual;
  cfg.hyper.time_budget_ms = kBudgetMs;  // finalize mirrors this onto runtime
  cfg.runtime.virtual_step_ms = kEventCostMs;
  cfg.runtime.sample_period_ms = 1000.0;
  cfg.runtime.seed = kSeed;
  return cfg;
}

// Pooled full-batch subgradient descent with stagewise halved steps,
// tracking the best iterate: an oracle for the unconstrained optimum
// that shares nothing with the solvers but the gradient primitives.
Scalar pooled_oracle(const PartitionedDataset& data) {
  ObjectiveSpec spec{LossKind::Hinge, RegKind::L2, kLambda};
  ModelVector w = ModelVector::Zero(data.dimension), best = w;
  ModelVector g(data.dimension);
  Scalar best_f = full_objective(spec, w, data);
  Scalar eta = 0.1;
  for (int stage = 0; stage < 16; ++stage, eta *= 0.5) {
    for (int it = 0; it < 800; ++it) {
      g.setZero();
      for (const auto& part : data.partitions)
        for (const Record& r : part)
          accumulate_loss_subgradient(spec.loss, w, r, 1.0, g);
      g /= static_cast<Scalar>(data.total_records());
      g += kLambda * w;
      w -= eta * g;
      const Scalar f = full_objective(spec, w, data);
      if (f < best_f) {
        best_f = f;
        best = w;
      }
    }
    w = best;
  }
  return best_f;
}

struct AdmmProbe {
  Scalar final_objective = 0;
  Scalar max_residual = 0;
};

// Runs the asynchronous consensus solver exactly as run_experiment would
// (same seeds, same finalized hyperparameters) but keeps the worker
// handles so the end-of-run primal/consensus residuals are observable.
AdmmProbe run_asip_admm_probe(const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  finalize_config(cfg);
  auto records = generate_point_cloud(
      {cfg.pointcloud_n_per_class, cfg.pointcloud_sigma, cfg.runtime.seed});
  auto data =
      partition(std::move(records), cfg.runtime.p, cfg.placement,
                cfg.runtime.seed);
  const ObjectiveSpec obj = cfg.objective;

  std::vector<std::unique_ptr<AsipWorkerBody>> bodies;
  std::vector<AsipAdmmWorker*> ws;
  for (int i = 0; i < cfg.runtime.p; ++i) {
    auto* w = new AsipAdmmWorker(
        &data.partitions[i], data.dimension, cfg.hyper, obj, cfg.runtime.p,
        static_cast<Scalar>(data.partitions[i].size()) /
            static_cast<Scalar>(data.total_records()),
        worker_seed(cfg.runtime.seed, i));
    ws.push_back(w);
    bodies.emplace_back(w);
  }
  run_gang(cfg.runtime, bodies, [&](const ModelVector& m) {
    return full_objective(obj, m, data);
  });

  AdmmProbe probe;
  ModelVector zavg = ModelVector::Zero(data.dimension);
  for (auto* w : ws) {
    zavg += w->final_model();
    probe.max_residual =
        std::max(probe.max_residual, (w->primal() - w->consensus()).norm());
  }
  zavg /= static_cast<Scalar>(cfg.runtime.p);
  probe.final_objective = full_objective(obj, zavg, data);
  return probe;
}

AdmmProbe run_bsp_admm_probe(const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  finalize_config(cfg);
  auto records = generate_point_cloud(
      {cfg.pointcloud_n_per_class, cfg.pointcloud_sigma, cfg.runtime.seed});
  auto data =
      partition(std::move(records), cfg.runtime.p, cfg.placement,
                cfg.runtime.seed);
  BspSimConfig sim;
  sim.virtual_step_ms = cfg.runtime.virtual_step_ms;
  sim.seed = cfg.runtime.seed;
  const BspAdmmResult r = bsp_admm(data, cfg.hyper, cfg.objective, sim);

  AdmmProbe probe;
  probe.final_objective = full_objective(cfg.objective, r.z, data);
  for (const auto& w : r.w)
    probe.max_residual = std::max(probe.max_residual, (w - r.z).norm());
  return probe;
}

struct BenchState {
  Scalar oracle = 0;
  AdmmProbe asip;
  AdmmProbe bsp;
};

bool criterion3(BenchState& st) {
  auto records = generate_point_cloud({kNPerClass, kSigma, kSeed});
  st.oracle = pooled_oracle(pooled_dataset(std::move(records)));
  const Scalar bound = st.oracle * (1.0 + kC3RelTol);

  struct Row {
    Algorithm algo;
    Scalar final_objective;
  };
  std::vector<Row> rows;
  for (Algorithm a : {Algorithm::AsipSgd, Algorithm::AsipDualAvg,
                      Algorithm::BspGd, Algorithm::Avg})
    rows.push_back({a, run_experiment(instance_config(a)).final_objective});
  st.asip = run_asip_admm_probe(instance_config(Algorithm::AsipAdmm));
  st.bsp = run_bsp_admm_probe(instance_config(Algorithm::BspAdmm));
  rows.push_back({Algorithm::AsipAdmm, st.asip.final_objective});
  rows.push_back({Algorithm::BspAdmm, st.bsp.final_objective});

  int bad = 0;
  for (const Row& r : rows)
    if (!(r.final_objective <= bound)) ++bad;
  std::printf(
      "[%s] criterion 3: final objectives within %.0f%% of the pooled "
      "oracle %.8f on the 60 s benchmark\n",
      bad == 0 ? "PASS" : "FAIL", kC3RelTol * 100.0, st.oracle);
  for (const Row& r : rows)
    std::printf("        %-13s %.8f  (%.4fx oracle)%s\n",
                algorithm_name(r.algo), r.final_objective,
                r.final_objective / st.oracle,
                r.final_objective <= bound ? "" : "  <-- outside");
  return bad == 0;
}

bool criterion4(const BenchState& st) {
  const bool ok =
      st.bsp.max_residual <= kC4Residual && st.asip.max_residual <= kC4Residual;
  std::printf(
      "[%s] criterion 4: consensus residual max||w_i - z|| <= %.0e "
      "(synchronous %.2e, asynchronous %.2e)\n",
      ok ? "PASS" : "FAIL", kC4Residual, st.bsp.max_residual,
      st.asip.max_residual);
  return ok;
}

bool criterion5() {
  auto skewed = [](Algorithm a) {
    ExperimentConfig cfg = instance_config(a);
    cfg.placement = PlacementPolicy::SkewedByLabel;
    return run_experiment(cfg).final_objective;
  };
  const Scalar f_avg = skewed(Algorithm::Avg);
  const Scalar f_bsp = skewed(Algorithm::BspAdmm);
  const Scalar f_asip = skewed(Algorithm::AsipAdmm);

  const bool ok = f_avg > f_bsp && f_avg > f_asip &&
                  f_avg - f_bsp >= (1.0 - kSkewSlack) * kSkewMarginBsp &&
                  f_avg - f_asip >= (1.0 - kSkewSlack) * kSkewMarginAsip;
  std::printf(
      "[%s] criterion 5: label-skewed placement separates averaging from "
      "consensus (avg %.6f vs bsp-admm %.6f, asip-admm %.6f; margins "
      "%.4f/%.4f vs pre-registered %.4f with %.0f%% slack)\n",
      ok ? "PASS" : "FAIL", f_avg, f_bsp, f_asip, f_avg - f_bsp, f_avg - f_asip,
      kSkewMarginBsp, kSkewSlack * 100.0);
  return ok;
}

bool criterion6() {
  auto ratio_under_straggler = [](Algorithm a) {
    ExperimentConfig cfg = instance_config(a);
    cfg.runtime.straggler =
        StragglerSpec{kStragglerWorker, kStragglerPauseMs, kStragglerPeriodMs};
    return run_perturbation_suite(cfg, PerturbationMode::Straggler);
  };
  const RatioReport bsp = ratio_under_straggler(Algorithm::BspGd);
  const RatioReport asip = ratio_under_straggler(Algorithm::AsipSgd);

  const bool ok = bsp.perturbation_applied && asip.perturbation_applied &&
                  bsp.ratio[1] >= asip.ratio[1];
  std::printf(
      "[%s] criterion 6: a 25%% duty-cycle straggler costs the barrier "
      "solver at least as much (end-of-budget ratio bsp-gd %.6f >= "
      "asip-sgd %.6f; mid-run %.6f vs %.6f)\n",
      ok ? "PASS" : "FAIL", bsp.ratio[1], asip.ratio[1], bsp.ratio[0],
      asip.ratio[0]);
  return ok;
}

bool criterion7() {
  auto ratio_under_fault = [](Algorithm a) {
    ExperimentConfig cfg = instance_config(a);
    cfg.runtime.fault = FaultSpec{kFaultWorker, kFaultAtMs};
    return run_perturbation_suite(cfg, PerturbationMode::Fault);
  };
  const RatioReport sgd = ratio_under_fault(Algorithm::AsipSgd);
  const RatioReport admm = ratio_under_fault(Algorithm::AsipAdmm);

  auto within = [](const RatioReport& r) {
    return r.perturbation_applied && std::abs(r.ratio[1] - 1.0) <= kFaultBand;
  };
  const bool ok = within(sgd) && within(admm);
  std::printf(
      "[%s] criterion 7: one worker reset at 30%% of budget ends within "
      "%.0f%% of fault-free (asip-sgd ratio %.6f, asip-admm ratio %.6f)\n",
      ok ? "PASS" : "FAIL", kFaultBand * 100.0, sgd.ratio[1], admm.ratio[1]);
  return ok;
}

// ---- criterion 8: bitwise-identical traces across reruns ----

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool criterion8() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path();
  int bad = 0;
  std::string detail;

  auto rerun_matches = [&](ExperimentConfig cfg, const char* tag) {
    const fs::path f1 = dir / (std::string("accept8_") + tag + "_a.csv");
    const fs::path f2 = dir / (std::string("accept8_") + tag + "_b.csv");
    cfg.output_path = f1.string();
    run_experiment(cfg);
    cfg.output_path = f2.string();
    run_experiment(cfg);
    const std::string b1 = file_bytes(f1), b2 = file_bytes(f2);
    fs::remove(f1);
    fs::remove(f2);
    const bool same = !b1.empty() && b1 == b2;
    if (!same) {
      ++bad;
      detail += std::string(" ") + tag;
    }
  };

  auto small = [](Algorithm a, int p) {
    ExperimentConfig cfg;
    cfg.algorithm = a;
    cfg.objective = {LossKind::Hinge, RegKind::L2, 1e-3};
    cfg.pointcloud_n_per_class = 200;
    cfg.pointcloud_sigma = 1.0;
    cfg.runtime.p = p;
    cfg.runtime.clock = ClockMode::Virtual;
    cfg.runtime.time_budget_ms = p == 1 ? 500.0 : 2000.0;
    cfg.hyper.time_budget_ms = cfg.runtime.time_budget_ms;
    cfg.runtime.sample_period_ms = 100.0;
    cfg.runtime.seed = 3;
    return cfg;
  };

  rerun_matches(small(Algorithm::BspGd, 4), "bsp-gd");
  rerun_matches(small(Algorithm::BspAdmm, 4), "bsp-admm");
  for (Algorithm a : {Algorithm::AsipSgd, Algorithm::AsipDualAvg,
                      Algorithm::AsipAdmm, Algorithm::BspGd,
                      Algorithm::BspAdmm, Algorithm::Avg})
    rerun_matches(small(a, 1), (std::string("p1-") + algorithm_name(a)).c_str());

  const bool ok = bad == 0;
  std::printf(
      "[%s] criterion 8: repeated runs write byte-identical traces "
      "(2 multi-worker + 6 single-worker pairs%s%s)\n",
      ok ? "PASS" : "FAIL", ok ? "" : "; mismatched:", detail.c_str());
  return ok;
}

// ---- criterion 9: randomized channel contract ----

bool criterion9() {
  const auto t0 = std::chrono::steady_clock::now();
  const int p = 4;
  const std::size_t capacity = 4;
  BroadcastBus bus(p, capacity);
  std::vector<AsipChannel> chans;
  for (int i = 0; i < p; ++i) chans.push_back(bus.channel(i));

  // Reference: one bounded FIFO per receiver, drop-oldest on overflow.
  std::vector<std::deque<std::pair<int, Scalar>>> reference(p);
  Rng rng(2026);
  std::uint64_t seq = 0, polled = 0;
  int bad = 0;

  auto one = [](Scalar x) {
    ModelVector v(1);
    v[0] = x;
    return v;
  };

  for (int op = 0; op < kChannelOps; ++op) {
    const int who = static_cast<int>(uniform_index(rng, p));
    if (uniform_index(rng, 2) == 0) {
      const Scalar payload = static_cast<Scalar>(++seq);
      chans[who].push(make_gradient_delta(who, one(payload)));
      for (int r = 0; r < p; ++r) {
        if (r == who) continue;  // no self-delivery expected
        if (reference[r].size() == capacity) reference[r].pop_front();
        reference[r].emplace_back(who, payload);
      }
    } else {
      const auto got = chans[who].poll();
      if (reference[who].empty()) {
        if (got.has_value()) ++bad;  // poll on empty must return nothing
      } else if (!got.has_value()) {
        ++bad;
      } else {
        // Head match enforces per-pair FIFO and drop-oldest at once.
        if (got->sender == who) ++bad;
        if (got->sender != reference[who].front().first ||
            got->primary[0] != reference[who].front().second)
          ++bad;
        reference[who].pop_front();
        ++polled;
      }
    }
  }
  std::uint64_t waiting = 0;
  for (int i = 0; i < p; ++i)
    while (chans[i].poll()) ++waiting;
  std::uint64_t reference_waiting = 0;
  for (const auto& q : reference) reference_waiting += q.size();
  if (waiting != reference_waiting) ++bad;
  if (bus.delivered() - bus.dropped() != polled + waiting) ++bad;

  const double secs = seconds_since(t0);
  const bool ok = bad == 0 && secs < kChannelBudgetS;
  std::printf(
      "[%s] criterion 9: channel matches the reference queue model over "
      "%d randomized ops (%llu polled, %llu dropped, %.2f s)\n",
      ok ? "PASS" : "FAIL", kChannelOps,
      static_cast<unsigned long long>(polled),
      static_cast<unsigned long long>(bus.dropped()), secs);
  return ok;
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  int failed = 0;
  BenchState st;

  failed += criterion1() ? 0 : 1;
  failed += criterion2() ? 0 : 1;
  failed += criterion3(st) ? 0 : 1;
  failed += criterion4(st) ? 0 : 1;
  failed += criterion5() ? 0 : 1;
  failed += criterion6() ? 0 : 1;
  failed += criterion7() ? 0 : 1;
  failed += criterion8() ? 0 : 1;
  failed += criterion9() ? 0 : 1;

  std::printf("%d of 9 criteria failed\n", failed);
  return failed;
}
