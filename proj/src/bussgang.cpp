#include "fbmimo/bussgang.hpp"

#include <cmath>

namespace fbmimo {

Vec bussgang_gain(const Vec& sigma_r_diag, const QuantizerSpec& spec) {
  Vec V(sigma_r_diag.size());
  const double d = spec.delta;
  const int half = 1 << (spec.bits - 1);
  for (Eigen::Index i = 0; i < V.size(); ++i) {
    const double var = sigma_r_diag(i);
    if (!(var > 0.0)) throw std::invalid_argument("bussgang_gain: nonpositive variance");
    double sum = 0.0;
    for (int l = 1; l <= spec.num_thresholds(); ++l) {
      double k = static_cast<double>(l - half);
      sum += std::exp(-d * d * k * k / var);
    }
    V(i) = d / std::sqrt(M_PI * var) * sum;
  }
  return V;
}

Mat sigma_r_training(const Mat& P, double sigma_h2, double N0) {
  Mat S = sigma_h2 * (P * P.transpose());
  S.diagonal().array() += N0 / 2.0;
  return S;
}

Mat sigma_r_detection(const Mat& H, double N0) {
  Mat S = 0.5 * (H * H.transpose());
  S.diagonal().array() += N0 / 2.0;
  return S;
}

namespace {
Mat correlation_of(const Mat& Sigma_r) {
  Vec dinv = Sigma_r.diagonal().array().sqrt().inverse();
  Mat C = dinv.asDiagonal() * Sigma_r * dinv.asDiagonal();
  // clamp to [-1, 1] to absorb rounding before arcsin
  return C.array().min(1.0).max(-1.0);
}
}  // namespace

Mat sigma_y_onebit(const Mat& Sigma_r, double delta) {
  Mat C = correlation_of(Sigma_r);
  return (delta * delta / M_PI) * C.array().asin().matrix();
}

Mat sigma_y_fewbit(const Vec& V, const Mat& Sigma_r, double eta) {
  Mat S = V.asDiagonal() * Sigma_r * V.asDiagonal();
  S.diagonal() += eta * Sigma_r.diagonal();
  return S;
}

Mat sigma_n_onebit(const Mat& Sigma_r, double delta, double N0) {
  Mat C = correlation_of(Sigma_r);
  Mat S = C.array().asin().matrix() - C;
  S.diagonal() += (N0 / 2.0) * Sigma_r.diagonal().array().inverse().matrix();
  return (delta * delta / M_PI) * S;
}

Mat sigma_n_fewbit(const Vec& V, const Mat& Sigma_r, double eta, double N0) {
  // V is diagonal, so V V^T contributes (N0/2) V_i^2 on the diagonal
  Mat S = Mat::Zero(V.size(), V.size());
  S.diagonal() = (N0 / 2.0) * V.array().square().matrix() + eta * Sigma_r.diagonal();
  return S;
}

void regularize_spd(Mat& S) {
  S = 0.5 * (S + S.transpose()).eval();
  double eps = 1e-9 * S.trace() / static_cast<double>(S.rows());
  S.diagonal().array() += eps;
}

Mat sigma_y_for_bmmse(const Vec& V, const Mat& Sigma_r, const QuantizerSpec& spec) {
  Mat S;
  if (spec.bits == 1) {
    S = sigma_y_onebit(Sigma_r, spec.delta);
  } else {
    // doubled so that A^T Sigma_y^{-1} absorbs the channel prior Sigma_h = I/2,
    // matching the scaling the one-bit arcsine expression carries implicitly
    S = 2.0 * sigma_y_fewbit(V, Sigma_r, spec.eta);
  }
  regularize_spd(S);
  return S;
}

Mat sigma_n_for_detection(const Vec& V, const Mat& Sigma_r, const QuantizerSpec& spec, double N0) {
  Mat S;
  if (spec.bits == 1) {
    S = sigma_n_onebit(Sigma_r, spec.delta, N0);
  } else {
    S = sigma_n_fewbit(V, Sigma_r, spec.eta, N0);
  }
  regularize_spd(S);
  return S;
}

Vec bmmse_estimate(const Vec& y, const Mat& A, const Mat& Sigma_y) {
  Eigen::LDLT<Mat> ldlt(Sigma_y);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("bmmse_estimate: Sigma_y factorization failed");
  return A.transpose() * ldlt.solve(y);
}

Mat bmmse_filter(const Mat& A, Mat Sigma_y) {
  regularize_spd(Sigma_y);
  Eigen::LDLT<Mat> ldlt(Sigma_y);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("bmmse_filter: Sigma_y factorization failed");
  return ldlt.solve(A).transpose();
}

Vec bwzf_estimate(const Vec& y, const Mat& A, const Vec& weights) {
  Mat Aw = weights.asDiagonal() * A;
  Mat M = A.transpose() * Aw;
  Vec rhs = Aw.transpose() * y;
  Eigen::LDLT<Mat> ldlt(M);
  Vec h = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !h.allFinite()) {
    regularize_spd(M);
    Eigen::LDLT<Mat> retry(M);
    h = retry.solve(rhs);
    if (retry.info() != Eigen::Success || !h.allFinite())
      throw std::runtime_error("bwzf_estimate: normal matrix is singular");
  }
  return h;
}

namespace {
inline double normal_pdf_raw(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); }
inline double normal_cdf_raw(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }
}  // namespace

Vec bwzf_weights(const Vec& y, const Vec& V, const Mat& Sigma_r,
                 const QuantizerSpec& spec, double N0) {
  Vec w(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double ql, qu;
    bin_bounds(y(i), spec, ql, qu);
    const double s2 = Sigma_r(i, i);
    const double s = std::sqrt(s2);
    const double a = std::isinf(ql) ? -40.0 : ql / s;
    const double b = std::isinf(qu) ? 40.0 : qu / s;
    const double Z = normal_cdf_raw(b) - normal_cdf_raw(a);
    const double pa = normal_pdf_raw(a), pb = normal_pdf_raw(b);
    // truncated-Gaussian moments of r over the observed bin
    const double m1 = s * (pa - pb) / Z;
    const double m2 = s2 * (1.0 + (a * pa - b * pb) / Z);
    const double v = V(i);
    const double ed2 = y(i) * y(i) - 2.0 * y(i) * v * m1 + v * v * m2;
    w(i) = 1.0 / (N0 / 2.0 + std::max(ed2, 0.0));
  }
  return w;
}

BussgangModel linearize_detection(const Mat& H, double N0, const QuantizerSpec& spec) {
  BussgangModel m;
  m.eta = spec.eta;
  m.Sigma_r = sigma_r_detection(H, N0);
  // complex-domain variance convention for the gain formula
  m.V = bussgang_gain(2.0 * m.Sigma_r.diagonal(), spec);
  m.A = m.V.asDiagonal() * H;
  m.Sigma_n = sigma_n_for_detection(m.V, m.Sigma_r, spec, N0);
  m.Sigma_y = sigma_y_for_bmmse(m.V, m.Sigma_r, spec);
  return m;
}

BussgangModel linearize_training(const Mat& P, double N0, const QuantizerSpec& spec) {
  BussgangModel m;
  m.eta = spec.eta;
  m.Sigma_r = sigma_r_training(P, 0.5, N0);
  m.V = bussgang_gain(2.0 * m.Sigma_r.diagonal(), spec);
  m.A = m.V.asDiagonal() * P;
  m.Sigma_y = sigma_y_for_bmmse(m.V, m.Sigma_r, spec);
  return m;
}

}  // namespace fbmimo
