#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "wncs/linalg.hpp"

namespace wncs::predictor {

/// Sliding window of decoded observations for one system. Times are slot
/// indices and strictly increasing; the oldest sample is evicted at capacity.
class ObservationWindow {
 public:
  ObservationWindow(Eigen::Index dim, std::size_t capacity = 10);

  void push(std::int64_t time, const Vector& value);
  void clear();

  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  std::size_t capacity() const { return capacity_; }
  Eigen::Index dim() const { return dim_; }
  const std::deque<std::int64_t>& times() const { return times_; }
  const std::deque<Vector>& values() const { return values_; }

  // Observations of dimension d, oldest first.
  Vector series(Eigen::Index d) const;

 private:
  Eigen::Index dim_;
  std::size_t capacity_;
  std::deque<std::int64_t> times_;
  std::deque<Vector> values_;
};

struct KernelParams {
  double h = 1.0;       // output scale
  double l = 1.0;       // time scale
  double s = 20.0;      // period in slots
  double noise = 1e-4;  // observation noise variance

  void validate() const;
};

enum class Source { kGpr, kArima, kNone, kDecoded };

const char* to_string(Source s);

struct Prediction {
  Vector x_hat;
  Matrix Psi;  // diagonal
  Source source = Source::kNone;
};

// h² exp(−(2/l²) sin²(π(k − k′)/s))
double periodic_kernel(double k, double k_prime, const KernelParams& params);

// Kernel matrix over the given times, without the noise term.
Matrix kernel_matrix(const std::vector<double>& times, const KernelParams& params);

/// Factorised covariance R + (noise + jitter) I over a window's times.
struct GprModel {
  KernelParams params;
  std::vector<double> times;
  Eigen::LLT<Matrix> factor;
  double jitter = 0.0;
};

/// Cholesky of the window covariance. A failed or numerically singular
/// factorisation is retried with diagonal jitter 1e-10, 1e-9, ... up to 1e-4
/// before throwing SolverError.
GprModel gpr_fit(const ObservationWindow& window, const KernelParams& params);

// Posterior mean and diagonal variance at query slot k, per dimension.
Prediction gpr_predict(const GprModel& model, const ObservationWindow& window, double k);

// Gaussian log marginal likelihood of the window, summed over dimensions.
double log_marginal_likelihood(const GprModel& model, const ObservationWindow& window);

/// Grid member with the highest log marginal likelihood; ties keep the
/// earlier entry. Candidates that cannot be factorised are skipped.
KernelParams gpr_tune(const ObservationWindow& window, const std::vector<KernelParams>& grid);

/// ARIMA(3,1,0) one-step forecast: difference, fit AR(3) by least squares
/// (minimum-norm when the lag design is rank deficient), forecast one
/// difference and integrate. Windows shorter than 5 fall back to holding
/// the last value with Psi = I.
Prediction arima_predict(const ObservationWindow& window);

// Zero state with identity covariance; the simulator applies no control.
Prediction none_predict(Eigen::Index dim);

}  // namespace wncs::predictor
