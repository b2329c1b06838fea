#pragma once

#include "fbmimo/networks.hpp"

#include <vector>

namespace fbmimo {

struct TrainConfig {
  double lr0 = 0.002;
  double decay = 0.97;        // per 100 epochs
  int decay_every = 100;
  int batch = 1000;
  int epochs = 2000;
  double c1 = 0.01;           // soft-quantizer ramp sharpness
  double c2 = 1000.0;         // soft-quantizer saturation ramp
  bool trainable_pilot = false;
  double divergence_factor = 10.0;
  int divergence_patience = 100;
};

double lr_schedule(int epoch, const TrainConfig& tcfg);

/// Standard Adam with bias correction (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
struct AdamState {
  Vec m, v;
  long step = 0;
  explicit AdamState(Eigen::Index n) : m(Vec::Zero(n)), v(Vec::Zero(n)) {}
};
void adam_step(Vec& params, const Vec& grads, AdamState& state, double lr);

struct LossTracePoint {
  int epoch;
  double lr;
  double loss;
};

struct CENetGradients {
  Vec d_alpha;
  double d_beta = 0.0;
  CMat d_Xt;    // zero unless trainable_pilot
};

/// Squared-error loss of a CENet batch and its adjoints, computed by an
/// explicit reverse pass through the unfolded layers. H_true is 2NK x B
/// (stacked channels), Z is 2NTt x B (stacked real noise). When the pilot is
/// trainable the bin edges come from the soft quantizer so adjoints reach Xt.
double cenet_loss_and_grads(const SystemConfig& cfg, const CENetParams& params,
                            const QuantizerSpec& spec, const TrainConfig& tcfg,
                            const Mat& H_true, const Mat& Z, CENetGradients& grads);

struct DetNetGradients {
  Vec d_alpha;
  Vec d_t;
  double d_beta = 0.0;
};

struct DetNetSample {
  Mat H;       // real-stacked channel 2N x 2K
  Vec x;       // real-stacked transmitted symbols 2K
  Vec q_up;    // observed bin edges 2N
  Vec q_low;
};

double b_detnet_loss_and_grads(const DetNetSample& s, const Vec& y, const BDetNetOperator& op,
                               const DetNetParams& params, const ConstellationProjectorSpec& proj,
                               DetNetGradients& grads);
double fbm_detnet_loss_and_grads(const DetNetSample& s, const DetNetParams& params,
                                 const ConstellationProjectorSpec& proj, DetNetGradients& grads);

struct CENetTrainResult {
  CENetParams params;
  std::vector<LossTracePoint> trace;
  bool diverged = false;
};

struct DetNetTrainResult {
  DetNetParams params;
  std::vector<LossTracePoint> trace;
  bool diverged = false;
};

/// Minimizes E||h_hat - h||^2 over fresh (h, z) batches. Evaluation always
/// uses the hard quantizer; a trainable pilot switches the training-time bin
/// edges to the soft quantizer and projects pilot rows back to unit power
/// after every update.
CENetTrainResult train_cenet(const SystemConfig& cfg, const TrainConfig& tcfg, CENetParams params);

DetNetTrainResult train_detnet(const SystemConfig& cfg, const TrainConfig& tcfg,
                               DetNetParams params, NetKind kind);

void write_loss_trace_csv(const std::string& path, const std::vector<LossTracePoint>& trace);

}  // namespace fbmimo
