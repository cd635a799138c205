#include "wncs/scheduler.hpp"

#include <algorithm>
#include <cmath>

namespace wncs::scheduler {

SchedulerState SchedulerState::initial(std::size_t systems, double v, double psi_beta,
                                       double psi_p) {
  if (!(v > 0.0)) throw DomainError("SchedulerState: V must be positive");
  SchedulerState s;
  s.beta.assign(systems, 1);
  s.Q.assign(systems, 0.0);
  s.V = v;
  s.psi_beta = psi_beta;
  s.psi_p = psi_p;
  return s;
}

ScheduleDecision ScheduleDecision::none(std::size_t systems) {
  ScheduleDecision d;
  d.a.assign(systems, 0);
  d.p.assign(systems, 0.0);
  return d;
}

std::int64_t update_aoi(std::int64_t beta_prev, bool scheduled, bool success) {
  if (beta_prev < 1) throw DomainError("update_aoi: AoI must be at least 1");
  return (scheduled && success) ? 1 : beta_prev + 1;
}

StabilityTerms stability_terms(const plant::SystemModel& model, const Matrix& z,
                               const Matrix& phi, const Matrix& psi, const Matrix& v_cov,
                               const Matrix& w) {
  const Eigen::Index d = model.state_dim();
  require_shape(z, d, d, "stability_terms(Z)");
  require_shape(phi, model.action_dim(), d, "stability_terms(Phi)");
  require_shape(psi, d, d, "stability_terms(Psi)");
  require_shape(v_cov, d, d, "stability_terms(V)");
  require_shape(w, d, d, "stability_terms(W)");

  const Matrix& a = model.A;
  const Matrix& b = model.B;
  const Matrix eye = Matrix::Identity(d, d);
  const Matrix bphi = b * phi;
  const Matrix ac = a - bphi;
  const Matrix weighted = bphi.transpose() * z * bphi;
  const Matrix shifted = ac - model.zeta * eye;

  StabilityTerms t;
  t.upsilon = (weighted * psi).trace() - (weighted * v_cov).trace();
  t.gamma = (shifted.transpose() * z * shifted).trace() +
            (b.transpose() * z * b).trace() * psi.trace() +
            ((a.transpose() * z * a - model.zeta * z) * psi).trace() + (z * w).trace();
  t.ratio = t.upsilon > 0.0 ? t.gamma / t.upsilon : 1.0;
  return t;
}

double stability_ratio(const plant::SystemModel& model, const Matrix& z, const Matrix& phi,
                       const Matrix& psi, const Matrix& v_cov, const Matrix& w) {
  return stability_terms(model, z, phi, psi, v_cov, w).ratio;
}

double clamp_unit(double c) {
  if (std::isnan(c)) return 1.0;
  return std::max(std::min(c, 1.0), 0.0);
}

SchedulerState update_queues(SchedulerState state, const std::vector<double>& c,
                             const std::vector<int>& xi) {
  if (c.size() != state.Q.size() || xi.size() != state.Q.size()) {
    throw DimensionError("update_queues: per-system vectors must have M entries");
  }
  for (std::size_t m = 0; m < state.Q.size(); ++m) {
    state.Q[m] = std::max(state.Q[m] + clamp_unit(c[m]) - static_cast<double>(xi[m]), 0.0);
  }
  return state;
}

double ca_weight(const SchedulerState& state, std::size_t m, double p_req) {
  return state.Q[m] + state.V * state.psi_beta * std::log1p(static_cast<double>(state.beta[m])) -
         state.V * state.psi_p * std::log1p(p_req);
}

ScheduleDecision ca_select(const SchedulerState& state, const std::vector<Candidate>& candidates) {
  const std::size_t systems = state.systems();
  if (candidates.size() != systems) {
    throw DimensionError("ca_select: need one candidate per system");
  }
  ScheduleDecision d = ScheduleDecision::none(systems);
  double best = 0.0;
  for (std::size_t m = 0; m < systems; ++m) {
    if (!candidates[m].p_req) continue;
    const double w = ca_weight(state, m, *candidates[m].p_req);
    if (w > best) {
      best = w;
      d.chosen = m;
    }
  }
  if (d.chosen) {
    d.a[*d.chosen] = 1;
    d.p[*d.chosen] = *candidates[*d.chosen].p_req;
  }
  return d;
}

ScheduleDecision rr_select(std::int64_t k, std::size_t systems, double fixed_p) {
  if (systems == 0) throw DomainError("rr_select: need at least one system");
  if (k < 0) throw DomainError("rr_select: slot index must be nonnegative");
  ScheduleDecision d = ScheduleDecision::none(systems);
  const auto m = static_cast<std::size_t>(k % static_cast<std::int64_t>(systems));
  d.chosen = m;
  d.a[m] = 1;
  d.p[m] = fixed_p;
  return d;
}

}  // namespace wncs::scheduler
