#pragma once

#include <vector>

#include "wncs/linalg.hpp"
#include "wncs/rng.hpp"

namespace wncs::mathkit {

// Largest eigenvalue magnitude of a square matrix.
double spectral_radius(const Matrix& m);

enum class LyapunovForm {
  // Acᵀ Z + Z Ac = -I
  kContinuous,
  // Acᵀ Z Ac - Z = -I
  kDiscrete,
};

/// Solves the Lyapunov equation selected by `form` for a symmetric Z.
///
/// The n² x n² Kronecker system is solved directly; this is meant for the
/// small state dimensions used here (n <= 8). Throws SolverError when the
/// system is singular or its reciprocal condition estimate falls below 1e-13.
Matrix solve_lyapunov(const Matrix& ac, LyapunovForm form = LyapunovForm::kContinuous);

// Residual ‖·‖_F of the selected Lyapunov equation at Z.
double lyapunov_residual(const Matrix& ac, const Matrix& z, LyapunovForm form);

struct DareSolution {
  Matrix P;
  Matrix K;
  int iterations = 0;
};

/// Discrete algebraic Riccati equation by fixed-point iteration from P0 = Q.
/// Returns the cost-to-go P and the gain K = (Y + BᵀPB)⁻¹BᵀPA for u = -Kx.
/// Throws DivergenceError after 10 000 iterations without convergence.
DareSolution solve_dare(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& y);

double dare_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& y,
                     const Matrix& p);

/// Ridge least squares Φ = argmin Σ‖u_k − Φx_k‖² + ridge‖Φ‖²_F, shape N x D.
/// With ridge == 0 a rank-deficient design throws RankError.
Matrix least_squares(const std::vector<Vector>& states, const std::vector<Vector>& actions,
                     double ridge);

// Symmetric PSD square root V·diag(√λ)·Vᵀ. Throws DomainError if the minimum
// eigenvalue is below -1e-10.
Matrix psd_sqrt(const Matrix& cov);

bool is_psd(const Matrix& m, double tol = 1e-10);

// mean + L ξ with L the symmetric PSD square root of cov. Always consumes
// mean.size() normals from rng.
Vector gaussian_draw(RngStream& rng, const Vector& mean, const Matrix& cov);

}  // namespace wncs::mathkit
