#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wncs/channel.hpp"
#include "wncs/controller.hpp"
#include "wncs/mathkit.hpp"
#include "wncs/plant.hpp"
#include "wncs/predictor.hpp"

namespace wncs::simulator {

enum class Scheduling { kRoundRobin, kChannelAware };
enum class PredictionKind { kNone, kArima, kGpr };
enum class ControlKind { kTail, kClassic };

struct VariantSpec {
  Scheduling scheduling = Scheduling::kChannelAware;
  PredictionKind prediction = PredictionKind::kGpr;
  ControlKind control = ControlKind::kTail;
  std::string name = "Full";
};

// V1, V2, V3, V4, Full in that order.
std::vector<VariantSpec> standard_variants();

/// Looks up a named variant. Besides the table names, accepts ablation
/// names of the form SCHED-PRED-CTRL, e.g. "CA-ARIMA-TAIL".
VariantSpec variant_by_name(const std::string& name);

struct SimConfig {
  std::size_t M = 6;
  std::int64_t K = 1000;
  std::vector<std::uint64_t> seeds = {1};

  double alpha = 0.0025;
  double b = 3.0;
  plant::MountainCarOptions plant_options;
  Vector x0 = (Vector(2) << -1.5, 0.0).finished();

  channel::ChannelConfig channel;
  double p_rr = channel::db_to_linear(28.2);

  double V = 1000.0;
  double psi_beta = 1.0;
  double psi_p = 1.0;
  mathkit::LyapunovForm lyapunov_form = mathkit::LyapunovForm::kContinuous;

  std::size_t window = 10;
  predictor::KernelParams kernel;
  bool tune_kernel = true;
  std::vector<predictor::KernelParams> tune_grid;

  int warmup_steps = 100;
  double action_low = -10.0;
  double action_high = 10.0;

  plant::SystemModel model() const;
  void validate() const;
};

// Default kernel grid searched at episode warm-up.
std::vector<predictor::KernelParams> default_tune_grid();

struct CostLedger {
  double sum_beta = 0.0;
  double sum_p_hat = 0.0;
  double sum_stage_cost = 0.0;
  double sum_state_cost = 0.0;
  double sum_action_cost = 0.0;
  std::int64_t count = 0;
};

// ψ_β log(1 + β̄) + ψ_p log(1 + p̄̂)
double comm_cost(const CostLedger& ledger, double psi_beta, double psi_p);
// Time-average stage cost J̄.
double control_cost(const CostLedger& ledger);
double stability_cost(const CostLedger& ledger);
double controlling_cost(const CostLedger& ledger);

// (1/M) Σ comm_m + (1/M) Σ J̄_m
double objective(const std::vector<double>& comm, const std::vector<double>& control);

struct SlotRecord {
  std::int64_t k = 0;
  std::optional<std::size_t> chosen;
  double power = 0.0;
  double gamma = 0.0;
  bool success = false;
  std::vector<std::int64_t> aoi;           // after this slot's update
  std::vector<double> queue;               // after this slot's update
  std::vector<Vector> actions;             // applied
  std::vector<Vector> states;              // true state at the start of the slot
  std::vector<predictor::Source> control_source;
};

struct EpisodeResult {
  std::string variant;
  std::size_t M = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";

  std::vector<CostLedger> ledgers;
  std::vector<double> comm;          // per system
  std::vector<double> control;       // per system
  std::vector<double> stability;     // per system
  std::vector<double> controlling;   // per system

  double objective = 0.0;
  double comm_cost = 0.0;            // mean over systems
  double control_cost = 0.0;
  double stability_cost = 0.0;
  double controlling_cost = 0.0;
  double mean_aoi = 0.0;
  double mean_power = 0.0;
  double sched_success_rate = 0.0;
  double max_queue_over_K = 0.0;
  double drift_satisfaction = 0.0;   // share of (slot, system) pairs meeting the ζ drift condition
  std::int64_t transmissions = 0;
  std::int64_t successes = 0;

  std::vector<SlotRecord> trace;     // only when requested
  bool ok() const { return status == "ok"; }
};

struct Policies {
  std::optional<controller::GaussianPolicy> tail;
  // Used for CLASSIC variants instead of the analytic LQR gain when set.
  std::optional<controller::GaussianPolicy> classic_rl;
};

struct RunOptions {
  bool record_trace = false;
};

/// One online episode of the networked loop for a variant. Per slot:
/// predict every system, pick at most one uplink, decode, update AoI and
/// virtual queues, act on the decoded state (or the prediction, or zero
/// control without one), step every plant and book costs.
///
/// Deterministic in (cfg, variant, seed). Random streams are keyed by
/// (seed, system, role) only, so variants see common plant noise and
/// channel draws. Throws ConfigError when a needed policy is missing; a
/// non-finite state ends the episode with status "aborted: ...".
EpisodeResult run_episode(const SimConfig& cfg, const VariantSpec& variant, std::uint64_t seed,
                          const Policies& policies, const RunOptions& options = {});

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
};

MetricSummary summarize(const std::vector<double>& values);

struct Summary {
  MetricSummary objective, comm_cost, control_cost, stability_cost, controlling_cost, mean_aoi,
      mean_power, sched_success_rate, max_queue_over_K;
  std::vector<EpisodeResult> rows;
};

Summary aggregate(const std::vector<EpisodeResult>& results);

}  // namespace wncs::simulator
