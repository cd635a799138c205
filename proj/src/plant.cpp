#include "wncs/plant.hpp"

#include <cmath>
#include <numbers>

#include "wncs/mathkit.hpp"

namespace wncs::plant {

void SystemModel::validate() const {
  require_square(A, "SystemModel.A");
  const Eigen::Index d = A.rows();
  if (B.rows() != d || B.cols() < 1) throw DimensionError("SystemModel.B: wrong shape");
  const Eigen::Index n = B.cols();
  require_shape(W, d, d, "SystemModel.W");
  require_shape(Q, d, d, "SystemModel.Q");
  require_shape(Y, n, n, "SystemModel.Y");
  require_shape(Omega, d, d, "SystemModel.Omega");
  require_size(eta, d, "SystemModel.eta");
  require_size(equilibrium, d, "SystemModel.equilibrium");
  if (!mathkit::is_psd(Q)) throw DomainError("SystemModel.Q must be symmetric PSD");
  if (!mathkit::is_psd(W)) throw DomainError("SystemModel.W must be symmetric PSD");
  if (Eigen::LLT<Matrix>(Y).info() != Eigen::Success) {
    throw DomainError("SystemModel.Y must be positive definite");
  }
  if (!(zeta > 0.0 && zeta <= 1.0)) throw DomainError("SystemModel.zeta must lie in (0, 1]");
  if (!(eta.array() > 0.0).all()) throw DomainError("SystemModel.eta must be positive");
}

SystemModel mountain_car(double alpha, double b, const MountainCarOptions& options) {
  if (!(alpha >= 0.0) || !(b > 0.0)) {
    throw DomainError("mountain_car: need alpha >= 0 and b > 0");
  }
  SystemModel m;
  const double ab = alpha * b;
  m.A.resize(2, 2);
  m.A << 1.0 + ab, 1.0,
         ab, 1.0;
  m.B = Matrix::Ones(2, 1);
  m.W = options.plant_noise_var * Matrix::Identity(2, 2);
  m.Q = Matrix::Identity(2, 2);
  m.Y = Matrix::Constant(1, 1, options.action_weight);
  m.eta = options.eta;
  m.zeta = options.zeta;
  m.Omega = Matrix::Identity(2, 2);
  m.equilibrium = Vector(2);
  m.equilibrium << std::numbers::pi / (2.0 * b), 0.0;
  m.T = 0.01;
  m.tail_norm = options.tail_norm;
  m.validate();
  return m;
}

PlantState step(const SystemModel& model, const PlantState& state, const Vector& u,
                RngStream& rng) {
  require_size(state.x, model.state_dim(), "plant::step(x)");
  require_size(u, model.action_dim(), "plant::step(u)");
  const Vector w = mathkit::gaussian_draw(rng, Vector::Zero(model.state_dim()), model.W);
  return {model.A * state.x + model.B * u + w, state.k + 1};
}

int tail_indicator(const Vector& x, const Vector& eta, TailNorm norm) {
  require_size(eta, x.size(), "tail_indicator(eta)");
  const Vector ratio = x.cwiseAbs().cwiseQuotient(eta);
  if (norm == TailNorm::kTwo) return ratio.norm() > 1.0 ? 1 : 0;
  return (ratio.array() > 1.0).any() ? 1 : 0;
}

StageCost stage_cost_split(const SystemModel& model, const Vector& x, const Vector& u) {
  require_size(x, model.state_dim(), "stage_cost(x)");
  require_size(u, model.action_dim(), "stage_cost(u)");
  StageCost c;
  if (tail_indicator(x, model.eta, model.tail_norm) == 1) c.state = x.dot(model.Q * x);
  c.action = u.dot(model.Y * u);
  return c;
}

double stage_cost(const SystemModel& model, const Vector& x, const Vector& u) {
  return stage_cost_split(model, x, u).total();
}

}  // namespace wncs::plant
