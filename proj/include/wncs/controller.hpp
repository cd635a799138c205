#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "wncs/linalg.hpp"
#include "wncs/plant.hpp"
#include "wncs/rng.hpp"

namespace wncs::controller {

// Which stage cost the reward negates: the tail-gated cost, or the
// classic quadratic cost with the indicator fixed at one.
enum class Objective { kTail, kClassic };

const char* to_string(Objective o);

double reward(const plant::SystemModel& model, const Vector& x, const Vector& u,
              Objective objective = Objective::kTail);

/// Linear-Gaussian policy: u ~ N(W·[x; 1], diag(exp(log_std))²), clipped to
/// [action_low, action_high].
struct GaussianPolicy {
  Matrix mean_weights;  // N x (D + 1), last column is the bias
  Vector log_std;       // N
  Vector action_low;
  Vector action_high;

  static GaussianPolicy zeros(Eigen::Index state_dim, Eigen::Index action_dim, double low,
                              double high, double log_std = 0.0);

  Eigen::Index state_dim() const { return mean_weights.cols() - 1; }
  Eigen::Index action_dim() const { return mean_weights.rows(); }
  Eigen::Index parameter_count() const { return mean_weights.size() + log_std.size(); }

  Vector mean(const Vector& x) const;
  Vector clip(const Vector& u) const;

  // Flat parameter vector: mean_weights row-major, then log_std.
  Vector parameters() const;
  void set_parameters(const Vector& theta);

  void validate() const;
};

Vector policy_sample(const GaussianPolicy& policy, const Vector& x, RngStream& rng,
                     bool deterministic);

// Log density of an unclipped action under the policy at state x.
double log_prob(const GaussianPolicy& policy, const Vector& x, const Vector& u);

struct TrainConfig {
  int epochs = 100;
  int episodes_per_epoch = 200;
  int horizon = 200;
  double discount = 0.9;
  double learning_rate = 0.3;
  double grad_clip = 10.0;
  std::uint64_t seed = 1;
  Vector x0 = (Vector(2) << -1.5, 0.0).finished();
  double x0_jitter = 0.1;
  double action_low = -10.0;
  double action_high = 10.0;
  double initial_log_std = 0.0;
  // Episodes whose state leaves the box |x_i| <= state_bound are absorbed
  // there for the remaining steps. Zero disables the box.
  double state_bound = 10.0;
  Objective objective = Objective::kTail;

  void validate() const;
};

struct Episode {
  std::vector<Vector> states;
  std::vector<Vector> actions;  // unclipped samples, as scored by log_prob
  std::vector<double> rewards;  // computed with the clipped action

  // states and actions stop at the exit step of an absorbed episode;
  // rewards always span the full horizon.

  double undiscounted_return() const;
};

Episode rollout(const plant::SystemModel& model, const GaussianPolicy& policy, const Vector& x0,
                int horizon, Objective objective, RngStream& rng, bool deterministic = false,
                double state_bound = 0.0);

// Σ_{j >= t} ν^{j-t} r_j for every t.
std::vector<double> reward_to_go(const std::vector<double>& rewards, double discount);

/// REINFORCE estimate of the gradient of the expected discounted return,
///   (1/E) Σ_e Σ_t ∇log π(u_t | x_t) (G_t − b_t),
/// with b_t the mean reward-to-go at step t across the batch. When
/// `normalize` is set the advantages are divided by their batch standard
/// deviation. Ordering matches GaussianPolicy::parameters().
Vector policy_gradient(const GaussianPolicy& policy, const std::vector<Episode>& batch,
                       double discount, bool normalize);

struct CurvePoint {
  int epoch = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
};

struct TrainResult {
  GaussianPolicy policy;
  std::vector<CurvePoint> curve;
};

class TrainingDiverged : public DivergenceError {
 public:
  TrainingDiverged(const std::string& what, std::vector<CurvePoint> curve)
      : DivergenceError(what), curve_(std::move(curve)) {}
  const std::vector<CurvePoint>& curve() const { return curve_; }

 private:
  std::vector<CurvePoint> curve_;
};

/// Offline policy-gradient training on the fully observed plant. Each epoch
/// rolls out `episodes_per_epoch` episodes from x0 plus uniform jitter,
/// forms the normalised REINFORCE gradient, clips its norm and takes one
/// Adam ascent step. Deterministic for a fixed cfg.seed.
TrainResult train_policy(const plant::SystemModel& model, const TrainConfig& cfg);

struct LqrGain {
  Matrix K;  // u = -K x
  Matrix P;
  Vector action_low;
  Vector action_high;

  Vector act(const Vector& x) const;
};

// Infinite-horizon LQR on (A, B, Q, Y) via the DARE.
LqrGain lqr_policy(const plant::SystemModel& model, double action_low = -10.0,
                   double action_high = 10.0);

// Least-squares linearisation u ≈ phi·x of a logged policy.
struct PolicyGain {
  Matrix phi;  // N x D
};

PolicyGain feedback_gain(const std::vector<Vector>& states, const std::vector<Vector>& actions);

// A deterministic state-feedback law used by the online loop.
class ControlLaw {
 public:
  explicit ControlLaw(GaussianPolicy policy) : law_(std::move(policy)) {}
  explicit ControlLaw(LqrGain gain) : law_(std::move(gain)) {}

  Vector act(const Vector& x) const;
  Eigen::Index action_dim() const;

 private:
  std::variant<GaussianPolicy, LqrGain> law_;
};

}  // namespace wncs::controller
