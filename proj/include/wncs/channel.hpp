#pragma once

#include <optional>

#include "wncs/linalg.hpp"
#include "wncs/rng.hpp"

namespace wncs::channel {

// Powers are linear in the same normalised units as N0 (x dBm -> 10^(x/10)).
struct ChannelConfig {
  double n0 = 1.0;
  double omega = 1.0;
  double gamma0 = 100.0;  // linear
  double pmax = 1000.0;   // linear
  double sigma2_h = 0.02;

  double noise_power() const { return n0 * omega; }
  void validate() const;
};

double db_to_linear(double db);
double linear_to_db(double linear);

struct UplinkResult {
  Vector x_tilde;
  Matrix V_cov;
  double gamma = 0.0;
  bool success = false;
  double p_used = 0.0;
  // Innovation matrix needed diagonal jitter to invert.
  bool regularized = false;
};

// D x D block-fading channel with i.i.d. N(0, sigma2_h) entries.
Matrix draw_channel(RngStream& rng, Eigen::Index dim, double sigma2_h);

// γ = p ‖H‖²_F / (N0 ω)
double snr(double p, const Matrix& h, const ChannelConfig& cfg);

/// Smallest power with snr(p, H) >= γ0, or nullopt when that exceeds Pmax
/// or H vanishes. The returned power is rounded up so that the SNR test
/// holds exactly in floating point.
std::optional<double> required_power(const Matrix& h, const ChannelConfig& cfg);

struct MmseGain {
  Matrix G;
  Matrix V_cov;
  bool regularized = false;
};

// MMSE gain and error covariance for prior second moment S. Noise free.
MmseGain mmse_gain(double p, const Matrix& h, const Matrix& omega, const Matrix& s,
                   const ChannelConfig& cfg);

/// Same as mmse_gain for S = F Fᵀ, with F any D x r factor. Working on the
/// factor keeps the small directions of S when it is dominated by a large
/// rank-one term, e.g. S = Ψ + x̂x̂ᵀ with ‖x̂‖ ≫ 1.
MmseGain mmse_gain_factored(double p, const Matrix& h, const Matrix& omega, const Matrix& f,
                            const ChannelConfig& cfg);

// Factor [Ψ^{1/2}, x̂] of the prior second moment Ψ + x̂x̂ᵀ.
Matrix second_moment_factor(const Matrix& psi, const Vector& x_hat);

/// Sends x over the uplink: y = √p Ω H x + n, n ~ N(0, N0 ω I), then decodes
/// x̃ = G y with the linear MMSE gain for prior S.
UplinkResult transmit_ul(const Vector& x, double p, const Matrix& h, const Matrix& omega,
                         const Matrix& s, const ChannelConfig& cfg, RngStream& rng);

// transmit_ul with the prior given as a factor F, S = F Fᵀ.
UplinkResult transmit_ul_factored(const Vector& x, double p, const Matrix& h, const Matrix& omega,
                                  const Matrix& f, const ChannelConfig& cfg, RngStream& rng);

}  // namespace wncs::channel
