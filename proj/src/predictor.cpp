#include "wncs/predictor.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace wncs::predictor {

ObservationWindow::ObservationWindow(Eigen::Index dim, std::size_t capacity)
    : dim_(dim), capacity_(capacity) {
  if (dim < 1) throw DimensionError("ObservationWindow: dimension must be positive");
  if (capacity < 1) throw DomainError("ObservationWindow: capacity must be positive");
}

void ObservationWindow::push(std::int64_t time, const Vector& value) {
  require_size(value, dim_, "ObservationWindow::push");
  if (!times_.empty() && time <= times_.back()) {
    throw DomainError("ObservationWindow::push: times must be strictly increasing");
  }
  times_.push_back(time);
  values_.push_back(value);
  while (times_.size() > capacity_) {
    times_.pop_front();
    values_.pop_front();
  }
}

void ObservationWindow::clear() {
  times_.clear();
  values_.clear();
}

Vector ObservationWindow::series(Eigen::Index d) const {
  Vector out(static_cast<Eigen::Index>(values_.size()));
  for (std::size_t i = 0; i < values_.size(); ++i) out[static_cast<Eigen::Index>(i)] = values_[i][d];
  return out;
}

void KernelParams::validate() const {
  if (!(h > 0.0) || !(l > 0.0) || !(s > 0.0) || !(noise >= 0.0)) {
    throw DomainError("KernelParams: h, l, s must be positive and noise nonnegative");
  }
}

const char* to_string(Source s) {
  switch (s) {
    case Source::kGpr: return "GPR";
    case Source::kArima: return "ARIMA";
    case Source::kNone: return "NONE";
    case Source::kDecoded: return "DECODED";
  }
  return "?";
}

double periodic_kernel(double k, double k_prime, const KernelParams& params) {
  const double sn = std::sin(std::numbers::pi * (k - k_prime) / params.s);
  return params.h * params.h * std::exp(-2.0 / (params.l * params.l) * sn * sn);
}

Matrix kernel_matrix(const std::vector<double>& times, const KernelParams& params) {
  const auto n = static_cast<Eigen::Index>(times.size());
  Matrix r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      r(i, j) = r(j, i) = periodic_kernel(times[i], times[j], params);
    }
  }
  return r;
}

namespace {

std::vector<double> window_times(const ObservationWindow& window) {
  return {window.times().begin(), window.times().end()};
}

bool factor_ok(const Eigen::LLT<Matrix>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const Vector diag = llt.matrixLLT().diagonal();
  if (!diag.allFinite() || diag.minCoeff() <= 0.0) return false;
  // Reject factors whose pivots collapsed to round-off.
  const double ratio = diag.minCoeff() / diag.maxCoeff();
  return ratio * ratio > 1e-13;
}

}  // namespace

GprModel gpr_fit(const ObservationWindow& window, const KernelParams& params) {
  params.validate();
  if (window.empty()) throw DomainError("gpr_fit: empty observation window");
  GprModel model;
  model.params = params;
  model.times = window_times(window);
  const auto n = static_cast<Eigen::Index>(model.times.size());
  const Matrix base =
      kernel_matrix(model.times, params) + params.noise * Matrix::Identity(n, n);

  model.factor.compute(base);
  if (factor_ok(model.factor)) return model;
  for (double jitter = 1e-10; jitter <= 1e-4 * (1.0 + 1e-9); jitter *= 10.0) {
    model.factor.compute(base + jitter * Matrix::Identity(n, n));
    if (factor_ok(model.factor)) {
      model.jitter = jitter;
      return model;
    }
  }
  throw SolverError("gpr_fit: kernel matrix not positive definite even with jitter 1e-4");
}

Prediction gpr_predict(const GprModel& model, const ObservationWindow& window, double k) {
  if (window.empty()) throw DomainError("gpr_predict: empty observation window");
  if (window.size() != model.times.size()) {
    throw DimensionError("gpr_predict: model was fit on a different window");
  }
  const auto n = static_cast<Eigen::Index>(model.times.size());
  Vector r(n);
  for (Eigen::Index i = 0; i < n; ++i) r[i] = periodic_kernel(k, model.times[i], model.params);
  const double prior = periodic_kernel(k, k, model.params);
  const Vector r_solved = model.factor.solve(r);
  const double variance = std::max(prior - r.dot(r_solved), 0.0);

  const Eigen::Index d = window.dim();
  Prediction out;
  out.x_hat.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) out.x_hat[j] = r_solved.dot(window.series(j));
  // The kernel is shared across dimensions, so every dimension gets the same variance.
  out.Psi = variance * Matrix::Identity(d, d);
  out.source = Source::kGpr;
  return out;
}

double log_marginal_likelihood(const GprModel& model, const ObservationWindow& window) {
  const auto n = static_cast<double>(model.times.size());
  const double log_det = 2.0 * model.factor.matrixLLT().diagonal().array().log().sum();
  double total = 0.0;
  for (Eigen::Index j = 0; j < window.dim(); ++j) {
    const Vector y = window.series(j);
    total += -0.5 * y.dot(model.factor.solve(y)) - 0.5 * log_det -
             0.5 * n * std::log(2.0 * std::numbers::pi);
  }
  return total;
}

KernelParams gpr_tune(const ObservationWindow& window, const std::vector<KernelParams>& grid) {
  if (grid.empty()) throw DomainError("gpr_tune: empty grid");
  if (window.empty()) throw DomainError("gpr_tune: empty observation window");
  const KernelParams* best = nullptr;
  double best_lml = -std::numeric_limits<double>::infinity();
  for (const auto& candidate : grid) {
    try {
      const GprModel model = gpr_fit(window, candidate);
      const double lml = log_marginal_likelihood(model, window);
      if (best == nullptr || lml > best_lml) {
        best = &candidate;
        best_lml = lml;
      }
    } catch (const SolverError&) {
      continue;
    }
  }
  if (best == nullptr) throw SolverError("gpr_tune: every candidate kernel was singular");
  return *best;
}

Prediction arima_predict(const ObservationWindow& window) {
  const Eigen::Index d = window.dim();
  Prediction out;
  out.source = Source::kArima;
  out.Psi = Matrix::Identity(d, d);
  if (window.empty()) {
    out.x_hat = Vector::Zero(d);
    return out;
  }
  out.x_hat = window.values().back();
  if (window.size() < 5) return out;

  constexpr Eigen::Index kOrder = 3;
  for (Eigen::Index j = 0; j < d; ++j) {
    const Vector x = window.series(j);
    const Eigen::Index n = x.size();
    const Vector diff = x.tail(n - 1) - x.head(n - 1);
    const Eigen::Index rows = diff.size() - kOrder;
    Matrix design(rows, kOrder);
    Vector target(rows);
    for (Eigen::Index t = 0; t < rows; ++t) {
      target[t] = diff[t + kOrder];
      for (Eigen::Index lag = 0; lag < kOrder; ++lag) design(t, lag) = diff[t + kOrder - 1 - lag];
    }
    const Vector coeffs = design.completeOrthogonalDecomposition().solve(target);
    Vector recent(kOrder);
    for (Eigen::Index lag = 0; lag < kOrder; ++lag) recent[lag] = diff[diff.size() - 1 - lag];
    out.x_hat[j] = x[n - 1] + coeffs.dot(recent);
    const Vector residual = target - design * coeffs;
    out.Psi(j, j) = std::max(residual.squaredNorm() / static_cast<double>(rows), 1e-8);
  }
  return out;
}

Prediction none_predict(Eigen::Index dim) {
  return {Vector::Zero(dim), Matrix::Identity(dim, dim), Source::kNone};
}

}  // namespace wncs::predictor
