#pragma once

#include "fbmimo/core.hpp"

#include <optional>

namespace fbmimo {

inline double relu(double r) { return r > 0.0 ? r : 0.0; }

/// b-bit uniform mid-rise quantizer. Thresholds are tau_l = (-2^{b-1}+l)*delta
/// for l = 1..2^b-1; output levels are the bin midpoints plus the two
/// saturation levels +-(2^b-1)*delta/2.
struct QuantizerSpec {
  int bits;
  double delta;     // step size
  double eta;       // distortion factor (Gaussian input, Table of optimum steps)
  double scale;     // input RMS the step was matched to
  int levels() const { return 1 << bits; }
  int num_thresholds() const { return (1 << bits) - 1; }
  double threshold(int l) const { return (-(1 << (bits - 1)) + l) * delta; }   // l = 1..2^b-1
  double top_threshold() const { return threshold(num_thresholds()); }
  double bottom_threshold() const { return threshold(1); }
  double max_level() const { return (levels() - 1) * delta / 2.0; }
  int B() const { return (1 << (bits - 1)) - 1; }
};

/// Step size and distortion factor of the MSE-optimal uniform quantizer for a
/// unit-variance Gaussian input, scaled to the declared input RMS.
QuantizerSpec make_quantizer(int bits, double scale = 1.0,
                             std::optional<double> delta_override = std::nullopt);

/// Quantizer step matched to the per-real-dimension receive variance (K+N0)/2.
QuantizerSpec make_receiver_quantizer(const SystemConfig& cfg);

double quantize_hard(double r, const QuantizerSpec& spec);
Vec quantize_hard(const Vec& r, const QuantizerSpec& spec);
Mat quantize_hard(const Mat& r, const QuantizerSpec& spec);

/// Upper/lower edges of the bin that produced output level y; saturation bins
/// return IEEE +-infinity.
void bin_bounds(double y, const QuantizerSpec& spec, double& q_low, double& q_up);
void bin_bounds(const Vec& y, const QuantizerSpec& spec, Vec& q_low, Vec& q_up);

/// ReLU-built continuous surrogate of the hard quantizer and its bin edges.
/// c1 controls ramp sharpness (c1 < delta/2), c2 replaces the +-infinity
/// sentinels with a steep outer ramp.
struct SoftQuantized {
  double q, q_up, q_low;
};
SoftQuantized soft_quantize(double r, const QuantizerSpec& spec, double c1, double c2);
void soft_quantize(const Vec& r, const QuantizerSpec& spec, double c1, double c2,
                   Vec& q_up, Vec& q_low);

/// d(q_up)/dr and d(q_low)/dr; subgradient 0 at exact kinks.
void soft_quantize_grad(double r, const QuantizerSpec& spec, double c1, double c2,
                        double& dqup_dr, double& dqlow_dr);

}  // namespace fbmimo
