#include "fbmimo/quantizer.hpp"

#include <cmath>
#include <limits>

namespace fbmimo {

QuantizerSpec make_quantizer(int bits, double scale, std::optional<double> delta_override) {
  if (bits < 1 || bits > 4) throw std::invalid_argument("make_quantizer: bits must be 1..4");
  if (scale <= 0.0) throw std::invalid_argument("make_quantizer: scale must be > 0");
  static const double kStep[] = {0.0, 0.0, 0.996, 0.586, 0.335};
  static const double kEta[] = {0.0, 0.0, 0.1188, 0.0374, 0.0115};
  QuantizerSpec s;
  s.bits = bits;
  s.scale = scale;
  if (bits == 1) {
    s.delta = std::sqrt(8.0 / M_PI) * scale;
    s.eta = 1.0 - 2.0 / M_PI;
  } else {
    s.delta = kStep[bits] * scale;
    s.eta = kEta[bits];
  }
  if (delta_override) s.delta = *delta_override;
  return s;
}

QuantizerSpec make_receiver_quantizer(const SystemConfig& cfg) {
  return make_quantizer(cfg.bits, std::sqrt((cfg.K + cfg.noise_power()) / 2.0));
}

double quantize_hard(double r, const QuantizerSpec& spec) {
  if (r > spec.top_threshold()) return spec.max_level();
  // bins are left-open / right-closed: r == tau_l maps to level tau_l - delta/2
  double t = r / spec.delta + (1 << (spec.bits - 1));
  int l = static_cast<int>(std::ceil(t));
  if (l < 1) l = 1;
  if (l > spec.num_thresholds()) l = spec.num_thresholds();
  // single rounding so mirrored bins produce exactly opposite levels
  return (static_cast<double>(l - (1 << (spec.bits - 1))) - 0.5) * spec.delta;
}

Vec quantize_hard(const Vec& r, const QuantizerSpec& spec) {
  Vec y(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) y(i) = quantize_hard(r(i), spec);
  return y;
}

Mat quantize_hard(const Mat& r, const QuantizerSpec& spec) {
  Mat y(r.rows(), r.cols());
  for (Eigen::Index j = 0; j < r.cols(); ++j)
    for (Eigen::Index i = 0; i < r.rows(); ++i) y(i, j) = quantize_hard(r(i, j), spec);
  return y;
}

void bin_bounds(double y, const QuantizerSpec& spec, double& q_low, double& q_up) {
  const double inf = std::numeric_limits<double>::infinity();
  const double tol = 1e-9 * spec.delta;
  // validate y against the level grid
  double rel = (y + spec.max_level()) / spec.delta;
  if (std::abs(rel - std::round(rel)) > tol || y < -spec.max_level() - tol ||
      y > spec.max_level() + tol)
    throw std::invalid_argument("bin_bounds: y is not an output level of this quantizer");
  q_up = (y < spec.top_threshold()) ? y + spec.delta / 2.0 : inf;
  q_low = (y > spec.bottom_threshold()) ? y - spec.delta / 2.0 : -inf;
}

void bin_bounds(const Vec& y, const QuantizerSpec& spec, Vec& q_low, Vec& q_up) {
  q_low.resize(y.size());
  q_up.resize(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) bin_bounds(y(i), spec, q_low(i), q_up(i));
}

SoftQuantized soft_quantize(double r, const QuantizerSpec& spec, double c1, double c2) {
  const double d = spec.delta;
  const int B = spec.B();
  double q = -(spec.levels() - 1) * d / 2.0;
  const double slope = d / (2.0 * c1);
  for (int i = -B; i <= B; ++i) q += slope * (relu(r + i * d + c1) - relu(r + i * d - c1));
  SoftQuantized out;
  out.q = q;
  out.q_up = q + d / 2.0 + c2 * (relu(r - B * d + c1) - relu(r - B * d - c1));
  out.q_low = q - d / 2.0 - c2 * (relu(-r - B * d + c1) - relu(-r - B * d - c1));
  return out;
}

void soft_quantize(const Vec& r, const QuantizerSpec& spec, double c1, double c2,
                   Vec& q_up, Vec& q_low) {
  q_up.resize(r.size());
  q_low.resize(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    SoftQuantized s = soft_quantize(r(i), spec, c1, c2);
    q_up(i) = s.q_up;
    q_low(i) = s.q_low;
  }
}

void soft_quantize_grad(double r, const QuantizerSpec& spec, double c1, double c2,
                        double& dqup_dr, double& dqlow_dr) {
  const double d = spec.delta;
  const int B = spec.B();
  const double slope = d / (2.0 * c1);
  double dq = 0.0;
  for (int i = -B; i <= B; ++i) {
    dq += slope * ((r + i * d + c1 > 0.0 ? 1.0 : 0.0) - (r + i * d - c1 > 0.0 ? 1.0 : 0.0));
  }
  double up_ramp = (r - B * d + c1 > 0.0 ? 1.0 : 0.0) - (r - B * d - c1 > 0.0 ? 1.0 : 0.0);
  double low_ramp = (-r - B * d + c1 > 0.0 ? 1.0 : 0.0) - (-r - B * d - c1 > 0.0 ? 1.0 : 0.0);
  dqup_dr = dq + c2 * up_ramp;
  dqlow_dr = dq + c2 * low_ramp;
}

}  // namespace fbmimo
