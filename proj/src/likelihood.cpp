#include "fbmimo/likelihood.hpp"

#include <cmath>
#include <limits>

namespace fbmimo {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }
double normal_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

double sigmoid_cdf(double t) {
  if (t == kInf) return 1.0;
  if (t == -kInf) return 0.0;
  return sigmoid(kSigmoidCdfConst * t);
}

double softplus(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double ml_objective_exact(const Vec& v, const LikelihoodContext& ctx) {
  Vec u = ctx.design * v;
  const double s = std::sqrt(2.0 * ctx.rho);
  double total = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    double cu = std::isinf(ctx.q_up(i)) ? 1.0 : normal_cdf(s * (ctx.q_up(i) - u(i)));
    double cl = std::isinf(ctx.q_low(i)) ? 0.0 : normal_cdf(s * (ctx.q_low(i) - u(i)));
    double p = cu - cl;
    if (!(p > 0.0)) return -kInf;
    total += std::log(p);
  }
  return total;
}

double ml_objective_reformulated(const Vec& v, const LikelihoodContext& ctx) {
  Vec u = ctx.design * v;
  const double c = kSigmoidCdfConst;
  const double s = std::sqrt(2.0 * ctx.rho);
  double total = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const bool up_inf = std::isinf(ctx.q_up(i));
    const bool low_inf = std::isinf(ctx.q_low(i));
    const double sup = up_inf ? kInf : s * (ctx.q_up(i) - u(i));
    const double slow = low_inf ? -kInf : s * (ctx.q_low(i) - u(i));
    if (up_inf && low_inf) continue;  // degenerate full-line bin
    if (up_inf) {
      // log(1 - sigmoid(c slow)) = -softplus(c slow)
      total += -softplus(c * slow);
    } else if (low_inf) {
      // log sigmoid(c sup)
      total += -softplus(-c * sup);
    } else {
      // log(e^{-c slow} - e^{-c sup}) - log(1+e^{-c sup}) - log(1+e^{-c slow}),
      // with the dominating exponent factored out of the difference
      const double d = c * (sup - slow);  // > 0
      total += -c * slow + std::log1p(-std::exp(-d)) - softplus(-c * sup) - softplus(-c * slow);
    }
  }
  return total;
}

Vec ml_gradient_reformulated(const Vec& v, const LikelihoodContext& ctx) {
  Vec u = ctx.design * v;
  const double c = kSigmoidCdfConst;
  const double s = std::sqrt(2.0 * ctx.rho);
  Vec g(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    double sig_up = std::isinf(ctx.q_up(i)) ? 0.0 : sigmoid(c * s * (u(i) - ctx.q_up(i)));
    double sig_low = std::isinf(ctx.q_low(i)) ? 1.0 : sigmoid(c * s * (u(i) - ctx.q_low(i)));
    g(i) = 1.0 - sig_up - sig_low;
  }
  return c * s * (ctx.design.transpose() * g);
}

Vec gradient_ascent_channel(const LikelihoodContext& ctx, const Vec& step_sizes, int L) {
  if (L < 1 || step_sizes.size() < L)
    throw std::invalid_argument("gradient_ascent_channel: need L >= 1 step sizes");
  Vec h = Vec::Zero(ctx.design.cols());
  for (int l = 0; l < L; ++l) h += step_sizes(l) * ml_gradient_reformulated(h, ctx);
  return h;
}

ConstellationProjectorSpec projector_for(ConstellationKind kind) {
  if (kind == ConstellationKind::QPSK) return {1, 2.0 / std::sqrt(2.0)};
  return {2, 2.0 / std::sqrt(10.0)};
}

double projector_psi(double x, double t, const ConstellationProjectorSpec& spec) {
  const double d = spec.delta_prime;
  const int B = spec.B_prime();
  double v = -spec.bound();
  const double slope = d / (2.0 * t);
  for (int i = -B; i <= B; ++i) v += slope * (relu(x + i * d + t) - relu(x + i * d - t));
  return v;
}

Vec projector_psi(const Vec& x, double t, const ConstellationProjectorSpec& spec) {
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = projector_psi(x(i), t, spec);
  return out;
}

void projector_psi_grad(double x, double t, const ConstellationProjectorSpec& spec,
                        double& dpsi_dx, double& dpsi_dt) {
  const double d = spec.delta_prime;
  const int B = spec.B_prime();
  const double slope = d / (2.0 * t);
  double sum = 0.0, dsum_dx = 0.0, dsum_dt = 0.0;
  for (int i = -B; i <= B; ++i) {
    const double hi = x + i * d + t;
    const double lo = x + i * d - t;
    sum += relu(hi) - relu(lo);
    dsum_dx += (hi > 0.0 ? 1.0 : 0.0) - (lo > 0.0 ? 1.0 : 0.0);
    dsum_dt += (hi > 0.0 ? 1.0 : 0.0) + (lo > 0.0 ? 1.0 : 0.0);
  }
  dpsi_dx = slope * dsum_dx;
  dpsi_dt = -d / (2.0 * t * t) * sum + slope * dsum_dt;
}

Vec projected_gradient_detect_bml(const Vec& y, const Mat& A, const Mat& Sigma_n_inv,
                                  const DetectParams& params,
                                  const ConstellationProjectorSpec& proj) {
  const int L = static_cast<int>(params.alpha.size());
  Mat W = 2.0 * A.transpose() * Sigma_n_inv;
  Vec x = Vec::Zero(A.cols());
  for (int l = 0; l < L; ++l) {
    Vec step = x + params.alpha(l) * (W * (y - A * x));
    x = projector_psi(step, params.t(l), proj);
  }
  return x;
}

Vec projected_gradient_detect_ml(const LikelihoodContext& ctx, const DetectParams& params,
                                 const ConstellationProjectorSpec& proj) {
  const int L = static_cast<int>(params.alpha.size());
  Vec x = Vec::Zero(ctx.design.cols());
  for (int l = 0; l < L; ++l) {
    Vec step = x + params.alpha(l) * ml_gradient_reformulated(x, ctx);
    x = projector_psi(step, params.t(l), proj);
  }
  return x;
}

CVec exhaustive_ml_detect(const LikelihoodContext& ctx, const Constellation& cons, int K) {
  const std::vector<cplx> pts = cons.complex_points();
  const std::size_t m = pts.size();
  double space = std::pow(static_cast<double>(m), K);
  if (space > 1e6) throw std::invalid_argument("exhaustive_ml_detect: search space too large");
  const std::size_t total = static_cast<std::size_t>(space);

  CVec best(K), cand(K);
  Vec x_real(2 * K);
  double best_val = -kInf;
  std::vector<std::size_t> idx(K, 0);
  for (std::size_t n = 0; n < total; ++n) {
    std::size_t r = n;
    for (int k = 0; k < K; ++k) {
      idx[k] = r % m;
      r /= m;
      cand(k) = pts[idx[k]];
      x_real(k) = cand(k).real();
      x_real(K + k) = cand(k).imag();
    }
    double val = ml_objective_exact(x_real, ctx);
    if (val > best_val) {  // strict: first (lowest index) candidate wins ties
      best_val = val;
      best = cand;
    }
  }
  return best;
}

}  // namespace fbmimo
