#pragma once

#include "fbmimo/bussgang.hpp"
#include "fbmimo/core.hpp"

namespace fbmimo {

// Standard-normal kernels and the logistic approximation Phi(t) ~ sigmoid(c*t).
inline constexpr double kSigmoidCdfConst = 1.702;

double normal_cdf(double t);
double normal_pdf(double t);
double sigmoid(double t);
/// 1/(1 + exp(-1.702 t)); sentinel inputs +-inf evaluate to exactly 1/0.
double sigmoid_cdf(double t);
/// log(1 + e^t), overflow safe.
double softplus(double t);

/// Inputs of the quantized-observation likelihood: the design matrix is the
/// pilot expansion P for channel estimation or the real-stacked channel H for
/// data detection.
struct LikelihoodContext {
  Mat design;    // M x D
  Vec q_up;      // M, +inf at top saturation bins
  Vec q_low;     // M, -inf at bottom saturation bins
  double rho;    // SNR (1/N0)
};

/// sum_i log[Phi(s_up_i) - Phi(s_low_i)] with s = sqrt(2 rho)(q - design*v).
/// Returns -inf when a bracket underflows to a nonpositive value.
double ml_objective_exact(const Vec& v, const LikelihoodContext& ctx);

/// Sigmoid-reformulated objective, evaluated in shifted form so large |s|
/// never overflows.
double ml_objective_reformulated(const Vec& v, const LikelihoodContext& ctx);

/// c*sqrt(2 rho) * D^T [1 - sig(c sqrt(2 rho)(Dv - q_up)) - sig(c sqrt(2 rho)(Dv - q_low))].
Vec ml_gradient_reformulated(const Vec& v, const LikelihoodContext& ctx);

/// Gradient ascent on the reformulated objective, h^(0) = 0.
Vec gradient_ascent_channel(const LikelihoodContext& ctx, const Vec& step_sizes, int L);

/// Per-dimension constellation projector parameters: QPSK {1, 2/sqrt(2)},
/// 16QAM {2, 2/sqrt(10)}.
struct ConstellationProjectorSpec {
  int b_prime;
  double delta_prime;
  int B_prime() const { return (1 << (b_prime - 1)) - 1; }
  double bound() const { return ((1 << b_prime) - 1) * delta_prime / 2.0; }
};

ConstellationProjectorSpec projector_for(ConstellationKind kind);

/// ReLU-built soft projection onto the per-dimension constellation levels,
/// sharpness controlled by t > 0.
double projector_psi(double x, double t, const ConstellationProjectorSpec& spec);
Vec projector_psi(const Vec& x, double t, const ConstellationProjectorSpec& spec);
/// Partials of psi with respect to its input and to t.
void projector_psi_grad(double x, double t, const ConstellationProjectorSpec& spec,
                        double& dpsi_dx, double& dpsi_dt);

enum class DetectMode { BML, ML };

struct DetectParams {
  Vec alpha;   // L step sizes
  Vec t;       // L projector scales
};

/// Projected gradient detection, x^(0) = 0.
/// BML iterates x <- psi_t(x + alpha * 2 A^T Sigma_n^{-1} (y - A x));
/// ML iterates x <- psi_t(x + alpha * grad of the reformulated likelihood).
Vec projected_gradient_detect_bml(const Vec& y, const Mat& A, const Mat& Sigma_n_inv,
                                  const DetectParams& params,
                                  const ConstellationProjectorSpec& proj);
Vec projected_gradient_detect_ml(const LikelihoodContext& ctx, const DetectParams& params,
                                 const ConstellationProjectorSpec& proj);

/// Brute-force argmax of the exact likelihood over the K-fold constellation
/// product; ties break toward the lowest lexicographic candidate index.
/// Guarded to |alphabet|^K <= 10^6.
CVec exhaustive_ml_detect(const LikelihoodContext& ctx, const Constellation& cons, int K);

}  // namespace fbmimo
