#pragma once

#include "fbmimo/core.hpp"
#include "fbmimo/quantizer.hpp"

namespace fbmimo {

/// Bussgang linearization artifacts for one scenario (training or data phase).
struct BussgangModel {
  Vec V;            // diagonal of the Bussgang gain matrix
  Mat Sigma_r;      // covariance of the unquantized signal (per real dimension)
  Mat Sigma_y;      // covariance of the quantized signal (paper scaling)
  Mat Sigma_n;      // covariance of the effective noise (detection phase)
  Mat A;            // effective channel, V * P or V * H
  double eta = 0.0;
};

/// V_ii = (delta/sqrt(pi)) * sigma_i^{-1} * sum_{l=1}^{2^b-1}
///        exp(-delta^2 (l - 2^{b-1})^2 / sigma_i^2).
///
/// The variances follow the complex-domain convention of the source formula:
/// to obtain the per-real-dimension Bussgang gain, pass twice the diagonal of
/// the real-domain covariance of the quantizer input.
Vec bussgang_gain(const Vec& sigma_r_diag, const QuantizerSpec& spec);

/// Training phase: Sigma_r = P Sigma_h P^T + (N0/2) I with Sigma_h = sigma_h2 I.
Mat sigma_r_training(const Mat& P, double sigma_h2, double N0);
/// Data phase: Sigma_r = (H H^T + N0 I) / 2 for the real-stacked channel.
Mat sigma_r_detection(const Mat& H, double N0);

/// One-bit arcsine law, (delta^2/pi) * arcsin(corr(Sigma_r)) elementwise.
Mat sigma_y_onebit(const Mat& Sigma_r, double delta);
/// Few-bit approximation V Sigma_r V^T + eta * diag(Sigma_r).
Mat sigma_y_fewbit(const Vec& V, const Mat& Sigma_r, double eta);

Mat sigma_n_onebit(const Mat& Sigma_r, double delta, double N0);
Mat sigma_n_fewbit(const Vec& V, const Mat& Sigma_r, double eta, double N0);

/// Symmetrize and add eps*I with eps = 1e-9 * trace/dim, for safe inversion.
void regularize_spd(Mat& S);

/// Quantized-signal covariance in the scaling that matches bmmse_estimate:
/// one-bit uses the arcsine law, few-bit doubles the real-domain covariance.
Mat sigma_y_for_bmmse(const Vec& V, const Mat& Sigma_r, const QuantizerSpec& spec);

/// Effective-noise covariance: exact arcsine-law expression for one bit,
/// the stated approximation otherwise. Regularized.
Mat sigma_n_for_detection(const Vec& V, const Mat& Sigma_r, const QuantizerSpec& spec, double N0);

/// h_hat = A_t^T Sigma_y^{-1} y_t.
Vec bmmse_estimate(const Vec& y, const Mat& A, const Mat& Sigma_y);

/// Precomputed BMMSE filter A^T Sigma_y^{-1} (Sigma_y fixed per config).
Mat bmmse_filter(const Mat& A, Mat Sigma_y);

/// h_hat = (A^T diag(w) A)^{-1} A^T diag(w) y.
Vec bwzf_estimate(const Vec& y, const Mat& A, const Vec& weights);

/// w_i = 1 / (N0/2 + E[d_i^2 | y_i]) with the conditional second moment of the
/// distortion computed from truncated-Gaussian moments of r_i over the
/// observed bin.
Vec bwzf_weights(const Vec& y, const Vec& V, const Mat& Sigma_r,
                 const QuantizerSpec& spec, double N0);

/// Data-phase linearization: effective channel A = V H and noise covariance.
BussgangModel linearize_detection(const Mat& H, double N0, const QuantizerSpec& spec);

/// Training-phase linearization for a pilot expansion P.
BussgangModel linearize_training(const Mat& P, double N0, const QuantizerSpec& spec);

}  // namespace fbmimo
