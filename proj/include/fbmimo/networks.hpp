#pragma once

#include "fbmimo/bussgang.hpp"
#include "fbmimo/likelihood.hpp"
#include "fbmimo/quantizer.hpp"

#include <string>

namespace fbmimo {

/// Unfolded gradient-ascent channel estimator. The pilot expansion is the
/// weight matrix; the observed bin edges are the biases.
struct CENetParams {
  int L = 8;
  Vec alpha;            // L step sizes
  double beta = 1.0;    // sigmoid scale
  CMat Xt;              // K x Tt pilot, trainable when trainable_pilot is set
  bool trainable_pilot = false;

  /// alpha = 1/(2N), beta = c*sqrt(2 rho): the untrained network is plain
  /// gradient ascent on the reformulated likelihood.
  static CENetParams initialized(const SystemConfig& cfg, int L, const CMat& Xt,
                                 bool trainable_pilot);
};

struct DetNetParams {
  int L = 8;
  Vec alpha;            // L step sizes
  Vec t;                // L projector scales, all > 0
  double beta = 1.0;    // sigmoid scale (FBM-DetNet only)

  static DetNetParams initialized(const SystemConfig& cfg, int L);
};

/// One FBM-CENet pass: per layer u = P h, g = 1 - sig(beta(u - q_up)) -
/// sig(beta(u - q_low)), h <- h + alpha_l P^T g, starting from h = 0.
Vec fbm_cenet_forward(const Mat& P, const Vec& q_up, const Vec& q_low, const CENetParams& params);
/// Column-batched variant; Q_up/Q_low are M x B.
Mat fbm_cenet_forward_batch(const Mat& P, const Mat& Q_up, const Mat& Q_low,
                            const CENetParams& params);

/// One B-DetNet pass on the linearized model: x <- psi_t(x + alpha W (y - A x))
/// with W = 2 A^T Sigma_n^{-1} cached per channel realization.
struct BDetNetOperator {
  Mat A;
  Mat W;   // 2 A^T Sigma_n^{-1}
  static BDetNetOperator from_model(const BussgangModel& model);
};
Vec b_detnet_forward(const Vec& y, const BDetNetOperator& op, const DetNetParams& params,
                     const ConstellationProjectorSpec& proj);

/// One FBM-DetNet pass on the exact quantized likelihood with the channel as
/// the weight matrix.
Vec fbm_detnet_forward(const Mat& H, const Vec& q_up, const Vec& q_low,
                       const DetNetParams& params, const ConstellationProjectorSpec& proj);

/// Sigmoid difference activation with exact 0/1 at sentinel bin edges.
void sigmoid_gate(const Vec& u, const Vec& q_up, const Vec& q_low, double beta, Vec& g);

// --- checkpoints -------------------------------------------------------------

enum class NetKind { FBM_CENET, B_DETNET, FBM_DETNET };
NetKind parse_net_kind(const std::string& name);
std::string to_string(NetKind kind);

void save_cenet_checkpoint(const std::string& path, const CENetParams& p);
CENetParams load_cenet_checkpoint(const std::string& path);
void save_detnet_checkpoint(const std::string& path, const DetNetParams& p, NetKind kind);
DetNetParams load_detnet_checkpoint(const std::string& path, NetKind expected_kind);

}  // namespace fbmimo
