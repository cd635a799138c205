#pragma once

// Slow reference implementations used to cross-check the library.

#include <complex>
#include <vector>

#include "wncs/mathkit.hpp"
#include "wncs/predictor.hpp"
#include "wncs/rng.hpp"

namespace oracle {

// Largest root magnitude of λ² − tr·λ + det.
inline double quadratic_radius(const wncs::Matrix& m) {
  const double tr = m.trace();
  const double det = m.determinant();
  const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0 * det));
  return std::max(std::abs((tr + disc) / 2.0), std::abs((tr - disc) / 2.0));
}

inline wncs::Matrix random_matrix(wncs::RngStream& rng, Eigen::Index r, Eigen::Index c) {
  wncs::Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

// Random matrix with every eigenvalue real part at most -0.1.
inline wncs::Matrix random_hurwitz(wncs::RngStream& rng, Eigen::Index n) {
  wncs::Matrix a = random_matrix(rng, n, n);
  Eigen::EigenSolver<wncs::Matrix> es(a);
  const double shift = es.eigenvalues().real().maxCoeff() + 0.1 + rng.uniform();
  return a - shift * wncs::Matrix::Identity(n, n);
}

inline wncs::Matrix random_schur(wncs::RngStream& rng, Eigen::Index n) {
  wncs::Matrix a = random_matrix(rng, n, n);
  return a * ((0.2 + 0.7 * rng.uniform()) / wncs::mathkit::spectral_radius(a));
}

// Random symmetric positive definite matrix, minimum eigenvalue at least 1e-3.
inline wncs::Matrix random_spd(wncs::RngStream& rng, Eigen::Index n, double scale) {
  const wncs::Matrix l = random_matrix(rng, n, n);
  return scale * l * l.transpose() + 1e-3 * wncs::Matrix::Identity(n, n);
}

struct GprDense {
  wncs::Vector mean;
  double variance;
};

// Posterior by explicit inversion of R + (noise + jitter) I.
inline GprDense gpr_dense(const std::vector<double>& times, const std::vector<wncs::Vector>& values,
                          const wncs::predictor::KernelParams& p, double jitter, double k) {
  const auto n = static_cast<Eigen::Index>(times.size());
  wncs::Matrix r(n, n);
  wncs::Vector cross(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    cross[i] = wncs::predictor::periodic_kernel(k, times[i], p);
    for (Eigen::Index j = 0; j < n; ++j) r(i, j) = wncs::predictor::periodic_kernel(times[i], times[j], p);
  }
  r += (p.noise + jitter) * wncs::Matrix::Identity(n, n);
  const wncs::Matrix inv = r.fullPivLu().inverse();
  const Eigen::Index d = values.front().size();
  GprDense out;
  out.mean.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    wncs::Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = values[static_cast<std::size_t>(i)][j];
    out.mean[j] = cross.dot(inv * y);
  }
  out.variance = wncs::predictor::periodic_kernel(k, k, p) - cross.dot(inv * cross);
  return out;
}

}  // namespace oracle
