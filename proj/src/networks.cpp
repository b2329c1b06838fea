#include "fbmimo/networks.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace fbmimo {

CENetParams CENetParams::initialized(const SystemConfig& cfg, int L, const CMat& Xt,
                                     bool trainable_pilot) {
  CENetParams p;
  p.L = L;
  p.alpha = Vec::Constant(L, 1.0 / (2.0 * cfg.N));
  p.beta = kSigmoidCdfConst * std::sqrt(2.0 * cfg.rho);
  p.Xt = Xt;
  p.trainable_pilot = trainable_pilot;
  return p;
}

DetNetParams DetNetParams::initialized(const SystemConfig& cfg, int L) {
  DetNetParams p;
  p.L = L;
  p.alpha = Vec::Constant(L, 1.0 / (2.0 * cfg.N));
  ConstellationProjectorSpec proj = projector_for(cfg.constellation);
  p.t = Vec::Constant(L, proj.delta_prime / 2.0);
  p.beta = kSigmoidCdfConst * std::sqrt(2.0 * cfg.rho);
  return p;
}

void sigmoid_gate(const Vec& u, const Vec& q_up, const Vec& q_low, double beta, Vec& g) {
  g.resize(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    double sup = std::isinf(q_up(i)) ? 0.0 : sigmoid(beta * (u(i) - q_up(i)));
    double slow = std::isinf(q_low(i)) ? 1.0 : sigmoid(beta * (u(i) - q_low(i)));
    g(i) = 1.0 - sup - slow;
  }
}

Vec fbm_cenet_forward(const Mat& P, const Vec& q_up, const Vec& q_low, const CENetParams& params) {
  Vec h = Vec::Zero(P.cols());
  Vec u, g;
  for (int l = 0; l < params.L; ++l) {
    u.noalias() = P * h;
    sigmoid_gate(u, q_up, q_low, params.beta, g);
    h.noalias() += params.alpha(l) * (P.transpose() * g);
  }
  return h;
}

Mat fbm_cenet_forward_batch(const Mat& P, const Mat& Q_up, const Mat& Q_low,
                            const CENetParams& params) {
  Mat H = Mat::Zero(P.cols(), Q_up.cols());
  Mat U, G(Q_up.rows(), Q_up.cols());
  for (int l = 0; l < params.L; ++l) {
    U.noalias() = P * H;
    for (Eigen::Index j = 0; j < U.cols(); ++j)
      for (Eigen::Index i = 0; i < U.rows(); ++i) {
        double sup = std::isinf(Q_up(i, j)) ? 0.0 : sigmoid(params.beta * (U(i, j) - Q_up(i, j)));
        double slow = std::isinf(Q_low(i, j)) ? 1.0 : sigmoid(params.beta * (U(i, j) - Q_low(i, j)));
        G(i, j) = 1.0 - sup - slow;
      }
    H.noalias() += params.alpha(l) * (P.transpose() * G);
  }
  return H;
}

BDetNetOperator BDetNetOperator::from_model(const BussgangModel& model) {
  BDetNetOperator op;
  op.A = model.A;
  Eigen::LDLT<Mat> ldlt(model.Sigma_n);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("BDetNetOperator: Sigma_n factorization failed");
  op.W = 2.0 * ldlt.solve(model.A).transpose();
  return op;
}

Vec b_detnet_forward(const Vec& y, const BDetNetOperator& op, const DetNetParams& params,
                     const ConstellationProjectorSpec& proj) {
  Vec x = Vec::Zero(op.A.cols());
  for (int l = 0; l < params.L; ++l) {
    Vec step = x + params.alpha(l) * (op.W * (y - op.A * x));
    x = projector_psi(step, params.t(l), proj);
  }
  return x;
}

Vec fbm_detnet_forward(const Mat& H, const Vec& q_up, const Vec& q_low,
                       const DetNetParams& params, const ConstellationProjectorSpec& proj) {
  Vec x = Vec::Zero(H.cols());
  Vec u, g;
  for (int l = 0; l < params.L; ++l) {
    u.noalias() = H * x;
    sigmoid_gate(u, q_up, q_low, params.beta, g);
    Vec step = x + params.alpha(l) * (H.transpose() * g);
    x = projector_psi(step, params.t(l), proj);
  }
  return x;
}

// --- checkpoints -------------------------------------------------------------

NetKind parse_net_kind(const std::string& name) {
  if (name == "fbm-cenet") return NetKind::FBM_CENET;
  if (name == "b-detnet") return NetKind::B_DETNET;
  if (name == "fbm-detnet") return NetKind::FBM_DETNET;
  throw std::invalid_argument("unknown network kind: " + name);
}

std::string to_string(NetKind kind) {
  switch (kind) {
    case NetKind::FBM_CENET: return "fbm-cenet";
    case NetKind::B_DETNET: return "b-detnet";
    default: return "fbm-detnet";
  }
}

namespace {

constexpr const char* kMagic = "fbmimo-checkpoint";
constexpr int kVersion = 1;

void write_header(std::ofstream& f, NetKind kind) {
  f << kMagic << " " << kVersion << "\n";
  f << "kind " << to_string(kind) << "\n";
  f.precision(17);
}

std::ifstream open_checkpoint(const std::string& path, NetKind expected) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string magic, kind_key, kind_val;
  int version = 0;
  f >> magic >> version >> kind_key >> kind_val;
  if (magic != kMagic || version != kVersion || kind_key != "kind")
    throw std::runtime_error("bad checkpoint header: " + path);
  if (kind_val != to_string(expected))
    throw std::runtime_error("checkpoint kind mismatch: " + path + " holds " + kind_val);
  return f;
}

}  // namespace

void save_cenet_checkpoint(const std::string& path, const CENetParams& p) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  write_header(f, NetKind::FBM_CENET);
  f << "L " << p.L << "\n";
  for (int l = 0; l < p.L; ++l) f << "alpha " << l << " " << p.alpha(l) << "\n";
  f << "beta " << p.beta << "\n";
  f << "trainable_pilot " << (p.trainable_pilot ? 1 : 0) << "\n";
  f << "pilot " << p.Xt.rows() << " " << p.Xt.cols() << "\n";
  for (Eigen::Index k = 0; k < p.Xt.rows(); ++k)
    for (Eigen::Index t = 0; t < p.Xt.cols(); ++t)
      f << p.Xt(k, t).real() << " " << p.Xt(k, t).imag() << "\n";
}

CENetParams load_cenet_checkpoint(const std::string& path) {
  std::ifstream f = open_checkpoint(path, NetKind::FBM_CENET);
  CENetParams p;
  std::string key;
  f >> key >> p.L;
  p.alpha.resize(p.L);
  for (int l = 0; l < p.L; ++l) {
    int idx;
    f >> key >> idx >> p.alpha(l);
  }
  f >> key >> p.beta;
  int tp;
  f >> key >> tp;
  p.trainable_pilot = tp != 0;
  Eigen::Index K, Tt;
  f >> key >> K >> Tt;
  p.Xt.resize(K, Tt);
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index t = 0; t < Tt; ++t) {
      double re, im;
      f >> re >> im;
      p.Xt(k, t) = cplx(re, im);
    }
  if (!f) throw std::runtime_error("truncated checkpoint: " + path);
  return p;
}

void save_detnet_checkpoint(const std::string& path, const DetNetParams& p, NetKind kind) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  write_header(f, kind);
  f << "L " << p.L << "\n";
  for (int l = 0; l < p.L; ++l) f << "alpha " << l << " " << p.alpha(l) << "\n";
  for (int l = 0; l < p.L; ++l) f << "t " << l << " " << p.t(l) << "\n";
  f << "beta " << p.beta << "\n";
}

DetNetParams load_detnet_checkpoint(const std::string& path, NetKind expected_kind) {
  std::ifstream f = open_checkpoint(path, expected_kind);
  DetNetParams p;
  std::string key;
  f >> key >> p.L;
  p.alpha.resize(p.L);
  p.t.resize(p.L);
  int idx;
  for (int l = 0; l < p.L; ++l) f >> key >> idx >> p.alpha(l);
  for (int l = 0; l < p.L; ++l) f >> key >> idx >> p.t(l);
  f >> key >> p.beta;
  if (!f) throw std::runtime_error("truncated checkpoint: " + path);
  return p;
}

}  // namespace fbmimo
