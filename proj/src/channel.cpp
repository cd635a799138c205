#include "wncs/channel.hpp"

#include <cmath>
#include <limits>

#include "wncs/mathkit.hpp"

namespace wncs::channel {

void ChannelConfig::validate() const {
  if (!(n0 > 0.0) || !(omega > 0.0) || !(pmax > 0.0) || !(sigma2_h > 0.0)) {
    throw DomainError("ChannelConfig: n0, omega, pmax and sigma2_h must be positive");
  }
  if (!(gamma0 >= 0.0)) throw DomainError("ChannelConfig: gamma0 must be nonnegative");
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

Matrix draw_channel(RngStream& rng, Eigen::Index dim, double sigma2_h) {
  const double sd = std::sqrt(std::max(sigma2_h, 0.0));
  Matrix h(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) h(i, j) = sd * rng.normal();
  }
  return h;
}

double snr(double p, const Matrix& h, const ChannelConfig& cfg) {
  return p * h.squaredNorm() / cfg.noise_power();
}

std::optional<double> required_power(const Matrix& h, const ChannelConfig& cfg) {
  const double gain = h.squaredNorm();
  if (!(gain > 0.0) || !std::isfinite(gain)) return std::nullopt;
  double p = cfg.gamma0 * cfg.noise_power() / gain;
  while (snr(p, h, cfg) < cfg.gamma0) p = std::nextafter(p, std::numeric_limits<double>::infinity());
  if (p > cfg.pmax) return std::nullopt;
  return p;
}

MmseGain mmse_gain_factored(double p, const Matrix& h, const Matrix& omega, const Matrix& f,
                            const ChannelConfig& cfg) {
  const Eigen::Index d = h.rows();
  require_shape(h, d, d, "mmse_gain(H)");
  require_shape(omega, d, d, "mmse_gain(Omega)");
  if (f.rows() != d) throw DimensionError("mmse_gain: prior factor must have D rows");
  if (p < 0.0) throw DomainError("mmse_gain: power must be nonnegative");

  // With M = √p Ω H F = P Σ Rᵀ the innovation is P (Σ² + N0ω) Pᵀ, so
  //   G = F R Σ (Σ² + N0ω)⁻¹ Pᵀ,   V = F R diag(N0ω / (σ² + N0ω), 1, ...) Rᵀ Fᵀ.
  const Matrix c = std::sqrt(p) * omega * h;
  const Matrix m = c * f;
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sigma = svd.singularValues();
  const Matrix& left = svd.matrixU();
  const Matrix& right = svd.matrixV();
  double noise = cfg.noise_power();

  MmseGain out;
  if (!(noise > 0.0) && sigma.minCoeff() <= 0.0) {
    noise = 1e-10;
    out.regularized = true;
  }
  const Eigen::Index rank_dims = sigma.size();
  Vector gain_diag(rank_dims);
  Vector keep = Vector::Ones(right.cols());
  for (Eigen::Index i = 0; i < rank_dims; ++i) {
    const double s2 = sigma[i] * sigma[i] + noise;
    gain_diag[i] = sigma[i] / s2;
    keep[i] = noise / s2;
  }
  out.G = f * right.leftCols(rank_dims) * gain_diag.asDiagonal() * left.leftCols(rank_dims).transpose();
  const Matrix fr = f * right;
  Matrix v = fr * keep.asDiagonal() * fr.transpose();
  out.V_cov = 0.5 * (v + v.transpose());
  return out;
}

MmseGain mmse_gain(double p, const Matrix& h, const Matrix& omega, const Matrix& s,
                   const ChannelConfig& cfg) {
  require_shape(s, h.rows(), h.rows(), "mmse_gain(S)");
  if (!mathkit::is_psd(s, 1e-10 * std::max(1.0, s.cwiseAbs().maxCoeff()))) {
    throw DomainError("mmse_gain: prior covariance S must be symmetric PSD");
  }
  return mmse_gain_factored(p, h, omega, mathkit::psd_sqrt(s), cfg);
}

Matrix second_moment_factor(const Matrix& psi, const Vector& x_hat) {
  require_shape(psi, x_hat.size(), x_hat.size(), "second_moment_factor(Psi)");
  Matrix f(x_hat.size(), x_hat.size() + 1);
  f.leftCols(x_hat.size()) = mathkit::psd_sqrt(psi);
  f.rightCols(1) = x_hat;
  return f;
}

UplinkResult transmit_ul_factored(const Vector& x, double p, const Matrix& h, const Matrix& omega,
                                  const Matrix& f, const ChannelConfig& cfg, RngStream& rng) {
  require_size(x, h.rows(), "transmit_ul(x)");
  if (p > cfg.pmax * (1.0 + 1e-12)) throw DomainError("transmit_ul: power exceeds Pmax");
  const MmseGain gain = mmse_gain_factored(p, h, omega, f, cfg);
  const Vector noise = std::sqrt(cfg.noise_power()) * rng.normal_vector(x.size());
  const Vector y = std::sqrt(p) * omega * h * x + noise;

  UplinkResult r;
  r.x_tilde = gain.G * y;
  r.V_cov = gain.V_cov;
  r.gamma = snr(p, h, cfg);
  r.success = r.gamma >= cfg.gamma0;
  r.p_used = p;
  r.regularized = gain.regularized;
  return r;
}

UplinkResult transmit_ul(const Vector& x, double p, const Matrix& h, const Matrix& omega,
                         const Matrix& s, const ChannelConfig& cfg, RngStream& rng) {
  require_shape(s, h.rows(), h.rows(), "transmit_ul(S)");
  if (!mathkit::is_psd(s, 1e-10 * std::max(1.0, s.cwiseAbs().maxCoeff()))) {
    throw DomainError("transmit_ul: prior covariance S must be symmetric PSD");
  }
  return transmit_ul_factored(x, p, h, omega, mathkit::psd_sqrt(s), cfg, rng);
}

}  // namespace wncs::channel
