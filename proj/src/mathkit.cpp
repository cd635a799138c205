#include "wncs/mathkit.hpp"

#include <cmath>
#include <sstream>

namespace wncs::mathkit {

double spectral_radius(const Matrix& m) {
  require_square(m, "spectral_radius");
  if (!m.allFinite()) throw DomainError("spectral_radius: non-finite entries");
  if (m.rows() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw SolverError("spectral_radius: eigen solve failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix solve_lyapunov(const Matrix& ac, LyapunovForm form) {
  require_square(ac, "solve_lyapunov");
  const Eigen::Index n = ac.rows();
  const Matrix eye = Matrix::Identity(n, n);
  const Matrix act = ac.transpose();

  // Column-major vec: vec(X Z Y) = (Yᵀ ⊗ X) vec(Z).
  Matrix kron(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (form == LyapunovForm::kContinuous) {
        // Acᵀ Z + Z Ac  ->  (I ⊗ Acᵀ) + (Acᵀ ⊗ I)
        kron.block(i * n, j * n, n, n) = eye(i, j) * act + act(i, j) * eye;
      } else {
        // Acᵀ Z Ac - Z  ->  (Acᵀ ⊗ Acᵀ) - I
        kron.block(i * n, j * n, n, n) = act(i, j) * act - eye(i, j) * eye;
      }
    }
  }
  Vector rhs = -Eigen::Map<const Vector>(eye.data(), n * n);

  Eigen::FullPivLU<Matrix> lu(kron);
  const double rcond = lu.rcond();
  if (!lu.isInvertible() || !(rcond > 1e-13)) {
    std::ostringstream msg;
    msg << "solve_lyapunov: Kronecker system is singular or ill-conditioned (rcond estimate "
        << rcond << ")";
    throw SolverError(msg.str());
  }
  Vector z = lu.solve(rhs);
  Matrix zm = Eigen::Map<Matrix>(z.data(), n, n);
  return 0.5 * (zm + zm.transpose());
}

double lyapunov_residual(const Matrix& ac, const Matrix& z, LyapunovForm form) {
  const Matrix eye = Matrix::Identity(ac.rows(), ac.cols());
  if (form == LyapunovForm::kContinuous) {
    return (ac.transpose() * z + z * ac + eye).norm();
  }
  return (ac.transpose() * z * ac - z + eye).norm();
}

namespace {

Matrix dare_step(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& y,
                 const Matrix& p) {
  const Matrix btp = b.transpose() * p;
  const Matrix gain = (y + btp * b).ldlt().solve(btp * a);
  Matrix next = a.transpose() * p * a - a.transpose() * p * b * gain + q;
  return 0.5 * (next + next.transpose());
}

}  // namespace

double dare_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& y,
                     const Matrix& p) {
  return (dare_step(a, b, q, y, p) - p).norm();
}

DareSolution solve_dare(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& y) {
  require_square(a, "solve_dare(A)");
  const Eigen::Index n = a.rows();
  if (b.rows() != n) throw DimensionError("solve_dare: B must have as many rows as A");
  require_shape(q, n, n, "solve_dare(Q)");
  require_shape(y, b.cols(), b.cols(), "solve_dare(Y)");
  if (!is_psd(q)) throw DomainError("solve_dare: Q must be positive semi-definite");
  Eigen::LLT<Matrix> y_llt(y);
  if (y_llt.info() != Eigen::Success) throw DomainError("solve_dare: Y must be positive definite");

  constexpr int kMaxIterations = 10000;
  constexpr double kTolerance = 1e-12;
  Matrix p = q;
  for (int it = 1; it <= kMaxIterations; ++it) {
    Matrix next = dare_step(a, b, q, y, p);
    if (!next.allFinite()) break;
    const double delta = (next - p).norm();
    p = std::move(next);
    if (delta < kTolerance * std::max(1.0, p.norm())) {
      const Matrix btp = b.transpose() * p;
      Matrix k = (y + btp * b).ldlt().solve(btp * a);
      return {p, k, it};
    }
  }
  throw DivergenceError("solve_dare: fixed-point iteration did not converge within 10000 iterations");
}

Matrix least_squares(const std::vector<Vector>& states, const std::vector<Vector>& actions,
                     double ridge) {
  if (states.size() != actions.size()) {
    throw DimensionError("least_squares: state and action logs differ in length");
  }
  if (states.empty()) throw DimensionError("least_squares: empty logs");
  if (ridge < 0.0) throw DomainError("least_squares: ridge must be nonnegative");
  const Eigen::Index d = states.front().size();
  const Eigen::Index n = actions.front().size();
  if (static_cast<Eigen::Index>(states.size()) < d) {
    throw DimensionError("least_squares: need at least as many samples as state dimensions");
  }
  const auto samples = static_cast<Eigen::Index>(states.size());
  Matrix x(samples, d);
  Matrix u(samples, n);
  for (Eigen::Index k = 0; k < samples; ++k) {
    require_size(states[k], d, "least_squares(state)");
    require_size(actions[k], n, "least_squares(action)");
    x.row(k) = states[k].transpose();
    u.row(k) = actions[k].transpose();
  }
  if (ridge == 0.0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(x);
    if (qr.rank() < d) {
      throw RankError("least_squares: design matrix is rank deficient (rank " +
                      std::to_string(qr.rank()) + " < " + std::to_string(d) +
                      "); use ridge > 0");
    }
    return qr.solve(u).transpose();
  }
  const Matrix gram = x.transpose() * x + ridge * Matrix::Identity(d, d);
  return gram.ldlt().solve(x.transpose() * u).transpose();
}

bool is_psd(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  if (m.rows() == 0) return true;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

Matrix psd_sqrt(const Matrix& cov) {
  require_square(cov, "psd_sqrt");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()));
  if (es.info() != Eigen::Success) throw SolverError("psd_sqrt: eigen solve failed");
  if (es.eigenvalues().minCoeff() < -1e-10) {
    throw DomainError("psd_sqrt: covariance is indefinite (min eigenvalue " +
                      std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Vector gaussian_draw(RngStream& rng, const Vector& mean, const Matrix& cov) {
  require_shape(cov, mean.size(), mean.size(), "gaussian_draw(cov)");
  const Vector xi = rng.normal_vector(mean.size());
  if (cov.isZero(0.0)) return mean;
  return mean + psd_sqrt(cov) * xi;
}

}  // namespace wncs::mathkit
