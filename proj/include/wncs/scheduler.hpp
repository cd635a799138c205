#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wncs/linalg.hpp"
#include "wncs/plant.hpp"

namespace wncs::scheduler {

struct SchedulerState {
  std::vector<std::int64_t> beta;  // AoI in slots, >= 1
  std::vector<double> Q;           // virtual queue backlogs, >= 0
  double V = 1000.0;
  double psi_beta = 1.0;
  double psi_p = 1.0;

  static SchedulerState initial(std::size_t systems, double v, double psi_beta, double psi_p);
  std::size_t systems() const { return beta.size(); }
};

struct ScheduleDecision {
  std::optional<std::size_t> chosen;
  std::vector<int> a;
  std::vector<double> p;

  static ScheduleDecision none(std::size_t systems);
};

// AoI: reset to 1 on a successful scheduled update, else grow.
std::int64_t update_aoi(std::int64_t beta_prev, bool scheduled, bool success);

struct StabilityTerms {
  double gamma = 0.0;    // Γ
  double upsilon = 0.0;  // Υ
  double ratio = 1.0;    // Γ/Υ, or 1 when Υ <= 0
};

/// Drift-condition terms for one system.
///   Υ = Tr[(BΦ)ᵀZ(BΦ)Ψ] − Tr[(BΦ)ᵀZ(BΦ)V]
///   Γ = Tr[(Ac−ζI)ᵀZ(Ac−ζI)] + Tr[BᵀZB]·Tr[Ψ] + Tr[(AᵀZA − ζZ)Ψ] + Tr[ZW]
/// with Ac = A − BΦ. The ratio is not clamped here; see clamp_unit().
StabilityTerms stability_terms(const plant::SystemModel& model, const Matrix& z,
                               const Matrix& phi, const Matrix& psi, const Matrix& v_cov,
                               const Matrix& w);

double stability_ratio(const plant::SystemModel& model, const Matrix& z, const Matrix& phi,
                       const Matrix& psi, const Matrix& v_cov, const Matrix& w);

// G_l(c) = max(min(c, 1), 0)
double clamp_unit(double c);

// Q_m <- max(Q_m + G_l(c_m) − ξ_m, 0)
SchedulerState update_queues(SchedulerState state, const std::vector<double>& c,
                             const std::vector<int>& xi);

struct Candidate {
  std::optional<double> p_req;  // nullopt when infeasible this slot
};

/// Per-slot max-weight choice:
///   w_m = Q_m + V ψ_β log(1+β_m) − V ψ_p log(1+p_req_m)
/// over feasible systems. Chooses the largest weight when it is positive,
/// lowest index on ties; the chosen system transmits at p_req.
ScheduleDecision ca_select(const SchedulerState& state, const std::vector<Candidate>& candidates);

double ca_weight(const SchedulerState& state, std::size_t m, double p_req);

// Round robin: system k mod M at fixed power.
ScheduleDecision rr_select(std::int64_t k, std::size_t systems, double fixed_p);

}  // namespace wncs::scheduler
