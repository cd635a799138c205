#pragma once

#include <cstdint>

#include "wncs/linalg.hpp"
#include "wncs/rng.hpp"

namespace wncs::plant {

// How the tail indicator reduces the per-dimension ratios |x_d| / eta_d.
enum class TailNorm {
  kInfinity,  // any dimension outside its band
  kTwo,       // ‖x ./ eta‖₂ > 1
};

struct SystemModel {
  Matrix A;      // D x D
  Matrix B;      // D x N
  Matrix W;      // plant noise covariance
  Matrix Q;      // state cost weight
  Matrix Y;      // action cost weight, N x N
  Vector eta;    // per-dimension stability band half-widths
  double zeta = 0.1;
  Matrix Omega;  // observation matrix
  Vector equilibrium;
  double T = 0.01;
  TailNorm tail_norm = TailNorm::kInfinity;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index action_dim() const { return B.cols(); }

  // Throws DimensionError / DomainError on any violated invariant.
  void validate() const;
};

struct PlantState {
  Vector x;  // deviation from equilibrium
  std::int64_t k = 0;
};

// Fields of the mountain-car model that are not fixed by its dynamics.
struct MountainCarOptions {
  double plant_noise_var = 0.02;
  Vector eta = Vector::Constant(2, 0.1);
  double zeta = 0.1;
  double action_weight = 1.0;
  TailNorm tail_norm = TailNorm::kInfinity;
};

/// Linearised mountain car around ε = [π/(2b), 0] sampled at T = 0.01 s:
/// A = [[1+αb, 1], [αb, 1]], B = [1, 1]ᵀ, Q = I, Y = 1, Ω = I.
SystemModel mountain_car(double alpha, double b, const MountainCarOptions& options = {});

// x' = A x + B u + w with w ~ N(0, W) from rng; k advances by one.
PlantState step(const SystemModel& model, const PlantState& state, const Vector& u,
                RngStream& rng);

int tail_indicator(const Vector& x, const Vector& eta, TailNorm norm = TailNorm::kInfinity);

struct StageCost {
  double state = 0.0;   // xᵀQx·f
  double action = 0.0;  // uᵀYu
  double total() const { return state + action; }
};

StageCost stage_cost_split(const SystemModel& model, const Vector& x, const Vector& u);

// xᵀQx·f + uᵀYu
double stage_cost(const SystemModel& model, const Vector& x, const Vector& u);

}  // namespace wncs::plant
