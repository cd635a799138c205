#include "wncs/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wncs/scheduler.hpp"

namespace wncs::simulator {

std::vector<VariantSpec> standard_variants() {
  using enum Scheduling;
  using enum PredictionKind;
  using enum ControlKind;
  return {
      {kRoundRobin, kNone, kTail, "V1"},
      {kRoundRobin, kArima, kTail, "V2"},
      {kRoundRobin, kArima, kClassic, "V3"},
      {kChannelAware, kGpr, kClassic, "V4"},
      {kChannelAware, kGpr, kTail, "Full"},
  };
}

VariantSpec variant_by_name(const std::string& name) {
  for (const auto& v : standard_variants()) {
    if (v.name == name) return v;
  }
  std::vector<std::string> parts;
  std::stringstream in(name);
  for (std::string tok; std::getline(in, tok, '-');) parts.push_back(tok);
  if (parts.size() == 3) {
    VariantSpec v;
    v.name = name;
    bool ok = true;
    if (parts[0] == "RR") v.scheduling = Scheduling::kRoundRobin;
    else if (parts[0] == "CA") v.scheduling = Scheduling::kChannelAware;
    else ok = false;
    if (parts[1] == "NONE") v.prediction = PredictionKind::kNone;
    else if (parts[1] == "ARIMA") v.prediction = PredictionKind::kArima;
    else if (parts[1] == "GPR") v.prediction = PredictionKind::kGpr;
    else ok = false;
    if (parts[2] == "TAIL") v.control = ControlKind::kTail;
    else if (parts[2] == "CLASSIC") v.control = ControlKind::kClassic;
    else ok = false;
    if (ok) return v;
  }
  throw ConfigError("unknown variant '" + name +
                    "' (expected V1..V4, Full, or SCHED-PRED-CTRL such as CA-ARIMA-TAIL)");
}

std::vector<predictor::KernelParams> default_tune_grid() {
  std::vector<predictor::KernelParams> grid;
  for (double s : {20.0, 100.0, 1000.0}) {
    for (double l : {0.5, 1.0, 2.0}) {
      for (double h : {0.5, 1.0, 2.0}) grid.push_back({h, l, s, 1e-4});
    }
  }
  return grid;
}

plant::SystemModel SimConfig::model() const { return plant::mountain_car(alpha, b, plant_options); }

void SimConfig::validate() const {
  if (M < 1) throw ConfigError("M must be at least 1");
  if (K < 1) throw ConfigError("K must be at least 1");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (window < 1) throw ConfigError("window must be at least 1");
  if (!(p_rr >= 0.0 && p_rr <= channel.pmax)) throw ConfigError("p_rr must lie in [0, Pmax]");
  if (!(V > 0.0)) throw ConfigError("V must be positive");
  if (!(psi_beta >= 0.0) || !(psi_p >= 0.0)) throw ConfigError("psi weights must be nonnegative");
  if (!(action_low < action_high)) throw ConfigError("action range is empty");
  if (warmup_steps < 20) throw ConfigError("warmup_steps must be at least 20");
  channel.validate();
  kernel.validate();
  const auto m = model();
  if (x0.size() != m.state_dim()) throw ConfigError("x0 has the wrong dimension");
}

double comm_cost(const CostLedger& ledger, double psi_beta, double psi_p) {
  if (ledger.count < 1) throw DomainError("comm_cost: empty ledger");
  const double beta_bar = ledger.sum_beta / static_cast<double>(ledger.count);
  const double p_bar = ledger.sum_p_hat / static_cast<double>(ledger.count);
  if (beta_bar < 1.0) throw DomainError("comm_cost: mean AoI below 1");
  return psi_beta * std::log1p(beta_bar) + psi_p * std::log1p(p_bar);
}

double control_cost(const CostLedger& ledger) {
  if (ledger.count < 1) throw DomainError("control_cost: empty ledger");
  return ledger.sum_stage_cost / static_cast<double>(ledger.count);
}

double stability_cost(const CostLedger& ledger) {
  if (ledger.count < 1) throw DomainError("stability_cost: empty ledger");
  return ledger.sum_state_cost / static_cast<double>(ledger.count);
}

double controlling_cost(const CostLedger& ledger) {
  if (ledger.count < 1) throw DomainError("controlling_cost: empty ledger");
  return ledger.sum_action_cost / static_cast<double>(ledger.count);
}

double objective(const std::vector<double>& comm, const std::vector<double>& control) {
  if (comm.size() != control.size() || comm.empty()) {
    throw DimensionError("objective: need matching nonempty per-system costs");
  }
  const double m = static_cast<double>(comm.size());
  double c = 0.0, j = 0.0;
  for (double v : comm) c += v;
  for (double v : control) j += v;
  return c / m + j / m;
}

namespace {

class NonFiniteState : public Error {
 public:
  using Error::Error;
};

struct SystemStreams {
  RngStream plant;
  RngStream channel;
  RngStream receiver;
};

controller::ControlLaw make_law(const SimConfig& cfg, const VariantSpec& variant,
                                const plant::SystemModel& model, const Policies& policies) {
  if (variant.control == ControlKind::kTail) {
    if (!policies.tail) throw ConfigError("variant " + variant.name + " needs a trained TAIL policy");
    return controller::ControlLaw(*policies.tail);
  }
  if (policies.classic_rl) return controller::ControlLaw(*policies.classic_rl);
  return controller::ControlLaw(controller::lqr_policy(model, cfg.action_low, cfg.action_high));
}

struct Warmup {
  Matrix phi_closed_loop;  // u ≈ −phi_closed_loop·x
  Matrix Z;
  predictor::KernelParams kernel;
};

// Fully observed rollout of the control law: fits the feedback gain, solves
// for the Lyapunov weight and picks kernel hyperparameters.
Warmup warm_up(const SimConfig& cfg, const plant::SystemModel& model,
               const controller::ControlLaw& law, RngStream rng) {
  const int steps = std::max<int>(cfg.warmup_steps, static_cast<int>(cfg.window * cfg.M) + 1);
  std::vector<Vector> states, actions;
  states.reserve(steps);
  actions.reserve(steps);
  plant::PlantState s{cfg.x0, 0};
  for (int t = 0; t < steps; ++t) {
    const Vector u = law.act(s.x);
    states.push_back(s.x);
    actions.push_back(u);
    s = plant::step(model, s, u, rng);
    if (!s.x.allFinite()) throw NonFiniteState("warm-up rollout produced a non-finite state");
  }

  Warmup w;
  const controller::PolicyGain fit = controller::feedback_gain(states, actions);
  w.phi_closed_loop = -fit.phi;
  w.Z = mathkit::solve_lyapunov(model.A - model.B * w.phi_closed_loop, cfg.lyapunov_form);

  w.kernel = cfg.kernel;
  if (cfg.tune_kernel) {
    // Sample the rollout at the round-robin revisit interval.
    predictor::ObservationWindow window(model.state_dim(), cfg.window);
    for (int t = steps - 1 - static_cast<int>(cfg.M) * static_cast<int>(cfg.window - 1);
         t < steps; t += static_cast<int>(cfg.M)) {
      if (t >= 0) window.push(t, states[static_cast<std::size_t>(t)]);
    }
    const auto grid = cfg.tune_grid.empty() ? default_tune_grid() : cfg.tune_grid;
    w.kernel = predictor::gpr_tune(window, grid);
  }
  return w;
}

predictor::Prediction predict(const VariantSpec& variant, const predictor::ObservationWindow& window,
                              const predictor::KernelParams& kernel, std::int64_t k) {
  const Eigen::Index d = window.dim();
  if (variant.prediction == PredictionKind::kNone || window.empty()) {
    return predictor::none_predict(d);
  }
  if (variant.prediction == PredictionKind::kArima) return predictor::arima_predict(window);
  const predictor::GprModel model = predictor::gpr_fit(window, kernel);
  return predictor::gpr_predict(model, window, static_cast<double>(k));
}

double lyapunov_value(const Matrix& z, const Vector& x, const plant::SystemModel& model) {
  return plant::tail_indicator(x, model.eta, model.tail_norm) == 1 ? x.dot(z * x) : 0.0;
}

void finalize(EpisodeResult& r, const SimConfig& cfg, std::int64_t slots) {
  const std::size_t m = r.ledgers.size();
  r.comm.resize(m);
  r.control.resize(m);
  r.stability.resize(m);
  r.controlling.resize(m);
  double aoi = 0.0, power = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const CostLedger& l = r.ledgers[i];
    r.comm[i] = comm_cost(l, cfg.psi_beta, cfg.psi_p);
    r.control[i] = control_cost(l);
    r.stability[i] = stability_cost(l);
    r.controlling[i] = controlling_cost(l);
    aoi += l.sum_beta / static_cast<double>(l.count);
    power += l.sum_p_hat / static_cast<double>(l.count);
  }
  const double md = static_cast<double>(m);
  auto mean = [md](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / md;
  };
  r.objective = objective(r.comm, r.control);
  r.comm_cost = mean(r.comm);
  r.control_cost = mean(r.control);
  r.stability_cost = mean(r.stability);
  r.controlling_cost = mean(r.controlling);
  r.mean_aoi = aoi / md;
  r.mean_power = power / md;
  r.sched_success_rate =
      r.transmissions > 0 ? static_cast<double>(r.successes) / static_cast<double>(r.transmissions) : 0.0;
  r.max_queue_over_K /= static_cast<double>(slots);
}

}  // namespace

EpisodeResult run_episode(const SimConfig& cfg, const VariantSpec& variant, std::uint64_t seed,
                          const Policies& policies, const RunOptions& options) {
  cfg.validate();
  const plant::SystemModel model = cfg.model();
  const controller::ControlLaw law = make_law(cfg, variant, model, policies);
  const std::size_t systems = cfg.M;
  const Eigen::Index d = model.state_dim();
  const Eigen::Index n = model.action_dim();

  EpisodeResult r;
  r.variant = variant.name;
  r.M = systems;
  r.seed = seed;
  r.ledgers.assign(systems, CostLedger{});

  const RngStream root(seed);
  std::vector<SystemStreams> streams;
  streams.reserve(systems);
  for (std::size_t m = 0; m < systems; ++m) {
    streams.push_back({root.derive(StreamRole::kPlantNoise, m), root.derive(StreamRole::kChannel, m),
                       root.derive(StreamRole::kReceiverNoise, m)});
  }

  std::int64_t slots_done = 0;
  try {
    const Warmup warm = warm_up(cfg, model, law, root.derive(StreamRole::kWarmup));

    std::vector<plant::PlantState> states(systems, plant::PlantState{cfg.x0, 0});
    std::vector<predictor::ObservationWindow> windows(systems,
                                                      predictor::ObservationWindow(d, cfg.window));
    scheduler::SchedulerState sched =
        scheduler::SchedulerState::initial(systems, cfg.V, cfg.psi_beta, cfg.psi_p);
    std::vector<predictor::Prediction> preds(systems);
    std::vector<Matrix> channels(systems);
    std::vector<Matrix> factors(systems);
    std::vector<scheduler::Candidate> candidates(systems);
    std::vector<double> ratios(systems);
    std::vector<int> xi(systems);
    std::int64_t drift_ok = 0;

    for (std::int64_t k = 0; k < cfg.K; ++k) {
      for (std::size_t m = 0; m < systems; ++m) {
        preds[m] = predict(variant, windows[m], warm.kernel, k);
        channels[m] = channel::draw_channel(streams[m].channel, d, cfg.channel.sigma2_h);
        factors[m] = channel::second_moment_factor(preds[m].Psi, preds[m].x_hat);
        candidates[m].p_req = channel::required_power(channels[m], cfg.channel);
      }

      scheduler::ScheduleDecision decision =
          variant.scheduling == Scheduling::kChannelAware
              ? scheduler::ca_select(sched, candidates)
              : scheduler::rr_select(k, systems, cfg.p_rr);

      // Required service rate from the decoding covariance each system would
      // get if it were served this slot.
      for (std::size_t m = 0; m < systems; ++m) {
        double p = cfg.p_rr;
        if (variant.scheduling == Scheduling::kChannelAware) {
          p = candidates[m].p_req.value_or(cfg.channel.pmax);
        }
        const channel::MmseGain hypothetical =
            channel::mmse_gain_factored(p, channels[m], model.Omega, factors[m], cfg.channel);
        ratios[m] = scheduler::stability_ratio(model, warm.Z, warm.phi_closed_loop, preds[m].Psi,
                                               hypothetical.V_cov, model.W);
      }

      std::optional<channel::UplinkResult> uplink;
      if (decision.chosen) {
        const std::size_t m = *decision.chosen;
        uplink = channel::transmit_ul_factored(states[m].x, decision.p[m], channels[m], model.Omega,
                                               factors[m], cfg.channel, streams[m].receiver);
        ++r.transmissions;
        if (uplink->success) {
          ++r.successes;
          windows[m].push(k, uplink->x_tilde);
        }
      }

      SlotRecord rec;
      if (options.record_trace) {
        rec.k = k;
        rec.chosen = decision.chosen;
        if (uplink) {
          rec.power = uplink->p_used;
          rec.gamma = uplink->gamma;
          rec.success = uplink->success;
        }
      }

      for (std::size_t m = 0; m < systems; ++m) {
        const bool scheduled = decision.a[m] == 1;
        const bool success = scheduled && uplink && uplink->success;
        xi[m] = success ? 1 : 0;
        sched.beta[m] = scheduler::update_aoi(sched.beta[m], scheduled, success);
      }
      sched = scheduler::update_queues(std::move(sched), ratios, xi);

      for (std::size_t m = 0; m < systems; ++m) {
        const bool success = xi[m] == 1;
        Vector u = Vector::Zero(n);
        predictor::Source source = preds[m].source;
        if (success) {
          u = law.act(uplink->x_tilde);
          source = predictor::Source::kDecoded;
        } else if (preds[m].source != predictor::Source::kNone) {
          u = law.act(preds[m].x_hat);
        }

        const Vector& x = states[m].x;
        const plant::StageCost cost = plant::stage_cost_split(model, x, u);
        CostLedger& l = r.ledgers[m];
        l.sum_beta += static_cast<double>(sched.beta[m]);
        l.sum_p_hat += decision.a[m] * decision.p[m];
        l.sum_state_cost += cost.state;
        l.sum_action_cost += cost.action;
        l.sum_stage_cost += cost.total();
        ++l.count;

        if (options.record_trace) {
          rec.aoi.push_back(sched.beta[m]);
          rec.queue.push_back(sched.Q[m]);
          rec.actions.push_back(u);
          rec.states.push_back(x);
          rec.control_source.push_back(source);
        }

        const double before = lyapunov_value(warm.Z, x, model);
        states[m] = plant::step(model, states[m], u, streams[m].plant);
        if (!states[m].x.allFinite()) {
          throw NonFiniteState("non-finite state for system " + std::to_string(m) + " at slot " +
                               std::to_string(k));
        }
        if (lyapunov_value(warm.Z, states[m].x, model) <= model.zeta * before) ++drift_ok;
      }
      r.max_queue_over_K = *std::max_element(sched.Q.begin(), sched.Q.end());
      if (options.record_trace) r.trace.push_back(std::move(rec));
      ++slots_done;
    }
    r.drift_satisfaction =
        static_cast<double>(drift_ok) / (static_cast<double>(cfg.K) * static_cast<double>(systems));
  } catch (const NonFiniteState& e) {
    r.status = std::string("aborted: ") + e.what();
  } catch (const SolverError& e) {
    r.status = std::string("aborted: ") + e.what();
  }

  if (slots_done > 0) {
    finalize(r, cfg, slots_done);
  } else {
    r.objective = r.comm_cost = r.control_cost = std::nan("");
  }
  return r;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  s.n = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(s.n - 1));
  }
  const double half = 1.959963984540054 * s.std / std::sqrt(static_cast<double>(s.n));
  s.ci_low = s.mean - half;
  s.ci_high = s.mean + half;
  return s;
}

Summary aggregate(const std::vector<EpisodeResult>& results) {
  if (results.empty()) throw DomainError("aggregate: no episodes");
  Summary out;
  out.rows = results;
  auto collect = [&](auto field) {
    std::vector<double> v;
    v.reserve(results.size());
    for (const auto& r : results) v.push_back(r.*field);
    return summarize(v);
  };
  out.objective = collect(&EpisodeResult::objective);
  out.comm_cost = collect(&EpisodeResult::comm_cost);
  out.control_cost = collect(&EpisodeResult::control_cost);
  out.stability_cost = collect(&EpisodeResult::stability_cost);
  out.controlling_cost = collect(&EpisodeResult::controlling_cost);
  out.mean_aoi = collect(&EpisodeResult::mean_aoi);
  out.mean_power = collect(&EpisodeResult::mean_power);
  out.sched_success_rate = collect(&EpisodeResult::sched_success_rate);
  out.max_queue_over_K = collect(&EpisodeResult::max_queue_over_K);
  return out;
}

}  // namespace wncs::simulator
