#include "wncs/controller.hpp"

#include <cmath>
#include <numbers>

#include "wncs/mathkit.hpp"

namespace wncs::controller {

const char* to_string(Objective o) { return o == Objective::kTail ? "TAIL" : "CLASSIC"; }

double reward(const plant::SystemModel& model, const Vector& x, const Vector& u,
              Objective objective) {
  if (objective == Objective::kTail) return -plant::stage_cost(model, x, u);
  require_size(x, model.state_dim(), "reward(x)");
  require_size(u, model.action_dim(), "reward(u)");
  return -(x.dot(model.Q * x) + u.dot(model.Y * u));
}

GaussianPolicy GaussianPolicy::zeros(Eigen::Index state_dim, Eigen::Index action_dim, double low,
                                     double high, double log_std) {
  GaussianPolicy p;
  p.mean_weights = Matrix::Zero(action_dim, state_dim + 1);
  p.log_std = Vector::Constant(action_dim, log_std);
  p.action_low = Vector::Constant(action_dim, low);
  p.action_high = Vector::Constant(action_dim, high);
  p.validate();
  return p;
}

Vector GaussianPolicy::mean(const Vector& x) const {
  require_size(x, state_dim(), "GaussianPolicy::mean");
  return mean_weights.leftCols(state_dim()) * x + mean_weights.col(state_dim());
}

Vector GaussianPolicy::clip(const Vector& u) const {
  return u.cwiseMax(action_low).cwiseMin(action_high);
}

Vector GaussianPolicy::parameters() const {
  Vector theta(parameter_count());
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < mean_weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < mean_weights.cols(); ++c) theta[i++] = mean_weights(r, c);
  }
  theta.tail(log_std.size()) = log_std;
  return theta;
}

void GaussianPolicy::set_parameters(const Vector& theta) {
  require_size(theta, parameter_count(), "GaussianPolicy::set_parameters");
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < mean_weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < mean_weights.cols(); ++c) mean_weights(r, c) = theta[i++];
  }
  log_std = theta.tail(log_std.size());
}

void GaussianPolicy::validate() const {
  if (mean_weights.rows() < 1 || mean_weights.cols() < 2) {
    throw DimensionError("GaussianPolicy: mean_weights must be N x (D + 1)");
  }
  require_size(log_std, action_dim(), "GaussianPolicy.log_std");
  require_size(action_low, action_dim(), "GaussianPolicy.action_low");
  require_size(action_high, action_dim(), "GaussianPolicy.action_high");
  if (!(action_low.array() < action_high.array()).all()) {
    throw DomainError("GaussianPolicy: action_low must be below action_high");
  }
  if (!log_std.allFinite() || !mean_weights.allFinite()) {
    throw DomainError("GaussianPolicy: parameters must be finite");
  }
}

Vector policy_sample(const GaussianPolicy& policy, const Vector& x, RngStream& rng,
                     bool deterministic) {
  Vector u = policy.mean(x);
  if (!deterministic) {
    u += policy.log_std.array().exp().matrix().cwiseProduct(rng.normal_vector(u.size()));
  }
  return policy.clip(u);
}

double log_prob(const GaussianPolicy& policy, const Vector& x, const Vector& u) {
  const Vector mu = policy.mean(x);
  double lp = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double sigma = std::exp(policy.log_std[i]);
    const double z = (u[i] - mu[i]) / sigma;
    lp += -0.5 * z * z - policy.log_std[i] - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return lp;
}

void TrainConfig::validate() const {
  if (epochs < 1 || episodes_per_epoch < 1 || horizon < 1) {
    throw DomainError("TrainConfig: epochs, episodes_per_epoch and horizon must be positive");
  }
  if (!(discount >= 0.0 && discount < 1.0)) throw DomainError("TrainConfig: discount must be in [0, 1)");
  if (!(learning_rate > 0.0)) throw DomainError("TrainConfig: learning_rate must be positive");
  if (!(grad_clip > 0.0)) throw DomainError("TrainConfig: grad_clip must be positive");
  if (!(state_bound >= 0.0)) throw DomainError("TrainConfig: state_bound must be nonnegative");
  if (!(x0_jitter >= 0.0)) throw DomainError("TrainConfig: x0_jitter must be nonnegative");
  if (!(action_low < action_high)) throw DomainError("TrainConfig: empty action range");
}

double Episode::undiscounted_return() const {
  double total = 0.0;
  for (double r : rewards) total += r;
  return total;
}

Episode rollout(const plant::SystemModel& model, const GaussianPolicy& policy, const Vector& x0,
                int horizon, Objective objective, RngStream& rng, bool deterministic,
                double state_bound) {
  RngStream policy_rng = rng.derive(StreamRole::kPolicy);
  RngStream noise_rng = rng.derive(StreamRole::kPlantNoise);
  Episode ep;
  ep.states.reserve(horizon);
  ep.actions.reserve(horizon);
  ep.rewards.reserve(horizon);
  plant::PlantState state{x0, 0};
  for (int t = 0; t < horizon; ++t) {
    if (state_bound > 0.0 && !(state.x.cwiseAbs().maxCoeff() <= state_bound)) {
      // Absorbing exit: the rest of the horizon pays the uncontrolled cost here.
      const double r = reward(model, state.x, Vector::Zero(policy.action_dim()), objective);
      ep.rewards.resize(static_cast<std::size_t>(horizon), r);
      break;
    }
    Vector u = policy.mean(state.x);
    if (!deterministic) {
      u += policy.log_std.array().exp().matrix().cwiseProduct(policy_rng.normal_vector(u.size()));
    }
    const Vector applied = policy.clip(u);
    ep.states.push_back(state.x);
    ep.actions.push_back(u);
    ep.rewards.push_back(reward(model, state.x, applied, objective));
    state = plant::step(model, state, applied, noise_rng);
  }
  return ep;
}

std::vector<double> reward_to_go(const std::vector<double>& rewards, double discount) {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + discount * acc;
    g[i] = acc;
  }
  return g;
}

Vector policy_gradient(const GaussianPolicy& policy, const std::vector<Episode>& batch,
                       double discount, bool normalize) {
  Vector grad = Vector::Zero(policy.parameter_count());
  if (batch.empty()) return grad;

  std::vector<std::vector<double>> adv(batch.size());
  std::size_t horizon = 0;
  for (std::size_t e = 0; e < batch.size(); ++e) {
    adv[e] = reward_to_go(batch[e].rewards, discount);
    horizon = std::max(horizon, adv[e].size());
  }
  // Time-indexed baseline over the batch.
  for (std::size_t t = 0; t < horizon; ++t) {
    double sum = 0.0;
    int count = 0;
    for (const auto& a : adv) {
      if (t < a.size()) {
        sum += a[t];
        ++count;
      }
    }
    const double baseline = sum / count;
    for (auto& a : adv) {
      if (t < a.size()) a[t] -= baseline;
    }
  }
  if (normalize) {
    double sq = 0.0;
    std::size_t count = 0;
    for (const auto& a : adv) {
      for (double v : a) {
        sq += v * v;
        ++count;
      }
    }
    const double scale = count > 0 ? std::sqrt(sq / static_cast<double>(count)) : 0.0;
    if (scale > 0.0 && std::isfinite(scale)) {
      for (auto& a : adv) {
        for (double& v : a) v /= scale;
      }
    }
  }

  const Eigen::Index d = policy.state_dim();
  const Eigen::Index n = policy.action_dim();
  const Vector inv_var = (-2.0 * policy.log_std.array()).exp().matrix();
  Vector features(d + 1);
  for (std::size_t e = 0; e < batch.size(); ++e) {
    const Episode& ep = batch[e];
    for (std::size_t t = 0; t < ep.states.size(); ++t) {
      features.head(d) = ep.states[t];
      features[d] = 1.0;
      const Vector resid = ep.actions[t] - policy.mean(ep.states[t]);
      const double a = adv[e][t];
      Eigen::Index i = 0;
      for (Eigen::Index r = 0; r < n; ++r) {
        const double dmu = resid[r] * inv_var[r] * a;
        for (Eigen::Index c = 0; c <= d; ++c) grad[i++] += dmu * features[c];
      }
      for (Eigen::Index r = 0; r < n; ++r) {
        grad[i++] += (resid[r] * resid[r] * inv_var[r] - 1.0) * a;
      }
    }
  }
  return grad / static_cast<double>(batch.size());
}

namespace {

struct Adam {
  Vector m, v;
  int t = 0;
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  explicit Adam(Eigen::Index n) : m(Vector::Zero(n)), v(Vector::Zero(n)) {}

  Vector step(const Vector& grad, double lr) {
    ++t;
    m = kBeta1 * m + (1.0 - kBeta1) * grad;
    v = kBeta2 * v + (1.0 - kBeta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(kBeta1, t);
    const double c2 = 1.0 - std::pow(kBeta2, t);
    return lr * (m / c1).cwiseQuotient(((v / c2).cwiseSqrt().array() + kEps).matrix());
  }
};

}  // namespace

TrainResult train_policy(const plant::SystemModel& model, const TrainConfig& cfg) {
  cfg.validate();
  require_size(cfg.x0, model.state_dim(), "train_policy(x0)");
  GaussianPolicy policy = GaussianPolicy::zeros(model.state_dim(), model.action_dim(),
                                                cfg.action_low, cfg.action_high,
                                                cfg.initial_log_std);
  const RngStream root = RngStream(cfg.seed).derive(StreamRole::kTraining);
  Adam adam(policy.parameter_count());
  std::vector<CurvePoint> curve;
  std::vector<Episode> batch(static_cast<std::size_t>(cfg.episodes_per_epoch));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double sum = 0.0, sum_sq = 0.0;
    for (int e = 0; e < cfg.episodes_per_epoch; ++e) {
      RngStream rng = root.derive({static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(e)});
      Vector x0 = cfg.x0;
      for (Eigen::Index i = 0; i < x0.size(); ++i) x0[i] += rng.uniform(-cfg.x0_jitter, cfg.x0_jitter);
      batch[e] = rollout(model, policy, x0, cfg.horizon, cfg.objective, rng, false, cfg.state_bound);
      const double ret = batch[e].undiscounted_return();
      sum += ret;
      sum_sq += ret * ret;
    }
    const double count = cfg.episodes_per_epoch;
    const double mean = sum / count;
    const double var = count > 1 ? std::max(sum_sq / count - mean * mean, 0.0) * count / (count - 1) : 0.0;
    curve.push_back({epoch + 1, mean, std::sqrt(var)});

    if (!std::isfinite(mean) || (curve.size() > 1 && mean < 10.0 * curve.front().mean_return)) {
      throw TrainingDiverged("train_policy: mean return diverged at epoch " + std::to_string(epoch + 1),
                             curve);
    }

    Vector grad = policy_gradient(policy, batch, cfg.discount, /*normalize=*/true);
    const double norm = grad.norm();
    if (!std::isfinite(norm)) {
      throw TrainingDiverged("train_policy: non-finite gradient at epoch " + std::to_string(epoch + 1),
                             curve);
    }
    if (norm > cfg.grad_clip) grad *= cfg.grad_clip / norm;
    // Cosine-annealed step size over the run.
    const double lr = 0.5 * cfg.learning_rate * (1.0 + std::cos(std::numbers::pi * epoch / cfg.epochs));
    policy.set_parameters(policy.parameters() + adam.step(grad, lr));
  }
  return {policy, curve};
}

Vector LqrGain::act(const Vector& x) const {
  return (-K * x).cwiseMax(action_low).cwiseMin(action_high);
}

LqrGain lqr_policy(const plant::SystemModel& model, double action_low, double action_high) {
  const mathkit::DareSolution dare = mathkit::solve_dare(model.A, model.B, model.Q, model.Y);
  const Eigen::Index n = model.action_dim();
  return {dare.K, dare.P, Vector::Constant(n, action_low), Vector::Constant(n, action_high)};
}

PolicyGain feedback_gain(const std::vector<Vector>& states, const std::vector<Vector>& actions) {
  if (states.size() < 20) throw DomainError("feedback_gain: need at least 20 logged samples");
  return {mathkit::least_squares(states, actions, 1e-6)};
}

Vector ControlLaw::act(const Vector& x) const {
  return std::visit(
      [&](const auto& law) -> Vector {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, GaussianPolicy>) {
          return law.clip(law.mean(x));
        } else {
          return law.act(x);
        }
      },
      law_);
}

Eigen::Index ControlLaw::action_dim() const {
  return std::visit(
      [](const auto& law) -> Eigen::Index {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, GaussianPolicy>) {
          return law.action_dim();
        } else {
          return law.K.rows();
        }
      },
      law_);
}

}  // namespace wncs::controller
