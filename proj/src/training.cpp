#include "fbmimo/training.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace fbmimo {

double lr_schedule(int epoch, const TrainConfig& tcfg) {
  return tcfg.lr0 * std::pow(tcfg.decay, epoch / tcfg.decay_every);
}

void adam_step(Vec& params, const Vec& grads, AdamState& state, double lr) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: size mismatch");
  ++state.step;
  state.m = b1 * state.m + (1.0 - b1) * grads;
  state.v = b2 * state.v.array() + (1.0 - b2) * grads.array().square();
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + eps);
}

namespace {

// Derivatives of the gate g = 1 - sig(beta(u - q_up)) - sig(beta(u - q_low))
// at one entry; sentinel edges contribute exactly nothing.
struct GateDerivs {
  double dg_du;     // -beta (s_up' + s_low')
  double dg_dbeta;  // -(s_up'(u - q_up) + s_low'(u - q_low))
  double dg_dqup;   //  beta s_up'
  double dg_dqlow;  //  beta s_low'
};

GateDerivs gate_derivs(double u, double q_up, double q_low, double beta) {
  GateDerivs d{0.0, 0.0, 0.0, 0.0};
  if (!std::isinf(q_up)) {
    const double s = sigmoid(beta * (u - q_up));
    const double sp = s * (1.0 - s);
    d.dg_du -= beta * sp;
    d.dg_dbeta -= sp * (u - q_up);
    d.dg_dqup = beta * sp;
  }
  if (!std::isinf(q_low)) {
    const double s = sigmoid(beta * (u - q_low));
    const double sp = s * (1.0 - s);
    d.dg_du -= beta * sp;
    d.dg_dbeta -= sp * (u - q_low);
    d.dg_dqlow = beta * sp;
  }
  return d;
}

}  // namespace

double cenet_loss_and_grads(const SystemConfig& cfg, const CENetParams& params,
                            const QuantizerSpec& spec, const TrainConfig& tcfg,
                            const Mat& H_true, const Mat& Z, CENetGradients& grads) {
  const PilotSet pilot = expand_pilot(params.Xt, cfg.N);
  const Mat& P = pilot.P;
  const Eigen::Index M = P.rows(), Dh = P.cols(), B = H_true.cols();
  if (Z.rows() != M || Z.cols() != B || H_true.rows() != Dh)
    throw std::invalid_argument("cenet_loss_and_grads: shape mismatch");

  Mat R = P * H_true + Z;
  Mat Q_up(M, B), Q_low(M, B);
  if (params.trainable_pilot) {
    for (Eigen::Index j = 0; j < B; ++j)
      for (Eigen::Index i = 0; i < M; ++i) {
        SoftQuantized sq = soft_quantize(R(i, j), spec, tcfg.c1, tcfg.c2);
        Q_up(i, j) = sq.q_up;
        Q_low(i, j) = sq.q_low;
      }
  } else {
    for (Eigen::Index j = 0; j < B; ++j)
      for (Eigen::Index i = 0; i < M; ++i) {
        double y = quantize_hard(R(i, j), spec), ql, qu;
        bin_bounds(y, spec, ql, qu);
        Q_up(i, j) = qu;
        Q_low(i, j) = ql;
      }
  }

  // Forward with tapes: layer pre-activations U_l, descent directions P^T G_l,
  // and (pilot path only) layer inputs H_{l-1}.
  const int L = params.L;
  std::vector<Mat> U_tape(L), PtG_tape(L), H_tape;
  if (params.trainable_pilot) H_tape.resize(L);
  Mat H = Mat::Zero(Dh, B), G(M, B);
  for (int l = 0; l < L; ++l) {
    if (params.trainable_pilot) H_tape[l] = H;
    U_tape[l].noalias() = P * H;
    const Mat& U = U_tape[l];
    for (Eigen::Index j = 0; j < B; ++j)
      for (Eigen::Index i = 0; i < M; ++i) {
        double sup = std::isinf(Q_up(i, j)) ? 0.0 : sigmoid(params.beta * (U(i, j) - Q_up(i, j)));
        double slo = std::isinf(Q_low(i, j)) ? 1.0 : sigmoid(params.beta * (U(i, j) - Q_low(i, j)));
        G(i, j) = 1.0 - sup - slo;
      }
    PtG_tape[l].noalias() = P.transpose() * G;
    H.noalias() += params.alpha(l) * PtG_tape[l];
  }

  const double inv_b = 1.0 / static_cast<double>(B);
  Mat Gh = (2.0 * inv_b) * (H - H_true);  // dL/dh_L
  const double loss = inv_b * (H - H_true).squaredNorm();

  grads.d_alpha = Vec::Zero(L);
  grads.d_beta = 0.0;
  Mat dP, gQ_up, gQ_low;
  if (params.trainable_pilot) {
    dP = Mat::Zero(M, Dh);
    gQ_up = Mat::Zero(M, B);
    gQ_low = Mat::Zero(M, B);
  }

  Mat Gg(M, B), Gu(M, B);
  for (int l = L - 1; l >= 0; --l) {
    const Mat& U = U_tape[l];
    grads.d_alpha(l) = (PtG_tape[l].array() * Gh.array()).sum();
    Gg.noalias() = params.alpha(l) * (P * Gh);
    for (Eigen::Index j = 0; j < B; ++j)
      for (Eigen::Index i = 0; i < M; ++i) {
        const GateDerivs d = gate_derivs(U(i, j), Q_up(i, j), Q_low(i, j), params.beta);
        Gu(i, j) = Gg(i, j) * d.dg_du;
        grads.d_beta += Gg(i, j) * d.dg_dbeta;
        if (params.trainable_pilot) {
          gQ_up(i, j) += Gg(i, j) * d.dg_dqup;
          gQ_low(i, j) += Gg(i, j) * d.dg_dqlow;
        }
      }
    if (params.trainable_pilot) {
      // Recompute G for this layer (cheap, avoids an L-deep tape of M x B).
      // g enters h_l through alpha P^T g; u_l = P h_{l-1}.
      for (Eigen::Index j = 0; j < B; ++j)
        for (Eigen::Index i = 0; i < M; ++i) {
          double sup = std::isinf(Q_up(i, j)) ? 0.0
                                              : sigmoid(params.beta * (U(i, j) - Q_up(i, j)));
          double slo = std::isinf(Q_low(i, j)) ? 1.0
                                               : sigmoid(params.beta * (U(i, j) - Q_low(i, j)));
          G(i, j) = 1.0 - sup - slo;
        }
      dP.noalias() += params.alpha(l) * (G * Gh.transpose());
      dP.noalias() += Gu * H_tape[l].transpose();
    }
    Gh.noalias() += P.transpose() * Gu;
  }

  grads.d_Xt = CMat::Zero(params.Xt.rows(), params.Xt.cols());
  if (params.trainable_pilot) {
    // Bin edges depend on the pilot through r = P h + z.
    Mat Gr(M, B);
    for (Eigen::Index j = 0; j < B; ++j)
      for (Eigen::Index i = 0; i < M; ++i) {
        double dqup_dr, dqlow_dr;
        soft_quantize_grad(R(i, j), spec, tcfg.c1, tcfg.c2, dqup_dr, dqlow_dr);
        Gr(i, j) = gQ_up(i, j) * dqup_dr + gQ_low(i, j) * dqlow_dr;
      }
    dP.noalias() += Gr * H_true.transpose();

    // Reduce the adjoint of the expanded pilot back to Xt. The expansion puts
    // Xt(k,t) at Pbar(t*N+n, k*N+n) for every antenna n, and the real stacking
    // places [Re, -Im; Im, Re] blocks.
    const int N = cfg.N;
    const Eigen::Index half_r = M / 2, half_c = Dh / 2;
    for (Eigen::Index t = 0; t < params.Xt.cols(); ++t)
      for (Eigen::Index k = 0; k < params.Xt.rows(); ++k) {
        double dre = 0.0, dim = 0.0;
        for (int n = 0; n < N; ++n) {
          const Eigen::Index r0 = t * N + n, c0 = k * N + n;
          dre += dP(r0, c0) + dP(half_r + r0, half_c + c0);
          dim += -dP(r0, half_c + c0) + dP(half_r + r0, c0);
        }
        grads.d_Xt(k, t) = cplx(dre, dim);
      }
  }
  return loss;
}

double b_detnet_loss_and_grads(const DetNetSample& s, const Vec& y, const BDetNetOperator& op,
                               const DetNetParams& params, const ConstellationProjectorSpec& proj,
                               DetNetGradients& grads) {
  const int L = params.L;
  const Eigen::Index D = op.A.cols();
  std::vector<Vec> x_tape(L), w_tape(L), step_tape(L);
  Vec x = Vec::Zero(D);
  for (int l = 0; l < L; ++l) {
    x_tape[l] = x;
    w_tape[l].noalias() = op.W * (y - op.A * x);
    step_tape[l] = x + params.alpha(l) * w_tape[l];
    x = projector_psi(step_tape[l], params.t(l), proj);
  }
  const double loss = (x - s.x).squaredNorm();

  grads.d_alpha = Vec::Zero(L);
  grads.d_t = Vec::Zero(L);
  grads.d_beta = 0.0;
  Vec gx = 2.0 * (x - s.x), gstep(D);
  for (int l = L - 1; l >= 0; --l) {
    for (Eigen::Index i = 0; i < D; ++i) {
      double dpx, dpt;
      projector_psi_grad(step_tape[l](i), params.t(l), proj, dpx, dpt);
      gstep(i) = gx(i) * dpx;
      grads.d_t(l) += gx(i) * dpt;
    }
    grads.d_alpha(l) = gstep.dot(w_tape[l]);
    gx = gstep - params.alpha(l) * (op.A.transpose() * (op.W.transpose() * gstep));
  }
  return loss;
}

double fbm_detnet_loss_and_grads(const DetNetSample& s, const DetNetParams& params,
                                 const ConstellationProjectorSpec& proj, DetNetGradients& grads) {
  const int L = params.L;
  const Eigen::Index D = s.H.cols(), M = s.H.rows();
  std::vector<Vec> u_tape(L), hg_tape(L), step_tape(L);
  Vec x = Vec::Zero(D), g(M);
  for (int l = 0; l < L; ++l) {
    u_tape[l].noalias() = s.H * x;
    sigmoid_gate(u_tape[l], s.q_up, s.q_low, params.beta, g);
    hg_tape[l].noalias() = s.H.transpose() * g;
    step_tape[l] = x + params.alpha(l) * hg_tape[l];
    x = projector_psi(step_tape[l], params.t(l), proj);
  }
  const double loss = (x - s.x).squaredNorm();

  grads.d_alpha = Vec::Zero(L);
  grads.d_t = Vec::Zero(L);
  grads.d_beta = 0.0;
  Vec gx = 2.0 * (x - s.x), gstep(D), gg(M), gu(M);
  for (int l = L - 1; l >= 0; --l) {
    for (Eigen::Index i = 0; i < D; ++i) {
      double dpx, dpt;
      projector_psi_grad(step_tape[l](i), params.t(l), proj, dpx, dpt);
      gstep(i) = gx(i) * dpx;
      grads.d_t(l) += gx(i) * dpt;
    }
    grads.d_alpha(l) = gstep.dot(hg_tape[l]);
    gg.noalias() = params.alpha(l) * (s.H * gstep);
    for (Eigen::Index i = 0; i < M; ++i) {
      const GateDerivs d = gate_derivs(u_tape[l](i), s.q_up(i), s.q_low(i), params.beta);
      gu(i) = gg(i) * d.dg_du;
      grads.d_beta += gg(i) * d.dg_dbeta;
    }
    gx = gstep + s.H.transpose() * gu;
  }
  return loss;
}

namespace {

double softplus_inverse(double t) {
  if (t <= 0.0) throw std::invalid_argument("softplus_inverse: t must be > 0");
  // log(e^t - 1), stable for large t.
  return t > 30.0 ? t : std::log(std::expm1(t));
}

// Stacked channel samples: column b is the real stacking of vec(H_b).
Mat sample_channel_batch(const SystemConfig& cfg, int batch, Rng& rng) {
  Mat H(2 * cfg.N * cfg.K, batch);
  for (int b = 0; b < batch; ++b) {
    CMat Hc = sample_channel(cfg, rng);
    CVec h = Eigen::Map<CVec>(Hc.data(), Hc.size());
    H.col(b) = complex_to_real_stack(h);
  }
  return H;
}

void normalize_pilot_rows(CMat& Xt) {
  for (Eigen::Index k = 0; k < Xt.rows(); ++k) {
    const double ms = Xt.row(k).squaredNorm() / static_cast<double>(Xt.cols());
    if (ms > 0.0) Xt.row(k) /= std::sqrt(ms);
  }
}

bool diverged_check(double loss, double initial_loss, const TrainConfig& tcfg, int& bad_streak) {
  if (!std::isfinite(loss) || loss > tcfg.divergence_factor * initial_loss)
    ++bad_streak;
  else
    bad_streak = 0;
  return bad_streak >= tcfg.divergence_patience || !std::isfinite(loss);
}

}  // namespace

CENetTrainResult train_cenet(const SystemConfig& cfg, const TrainConfig& tcfg,
                             CENetParams params) {
  cfg.validate();
  const QuantizerSpec spec = make_receiver_quantizer(cfg);
  const int L = params.L;
  const Eigen::Index npilot = params.trainable_pilot ? 2 * params.Xt.size() : 0;
  const Eigen::Index nparams = L + 1 + npilot;

  Vec theta(nparams);
  theta.head(L) = params.alpha;
  theta(L) = params.beta;
  if (params.trainable_pilot) {
    const Mat re = params.Xt.real(), im = params.Xt.imag();
    theta.segment(L + 1, params.Xt.size()) = re.reshaped();
    theta.tail(params.Xt.size()) = im.reshaped();
  }

  AdamState adam(nparams);
  CENetTrainResult out;
  out.trace.reserve(tcfg.epochs);
  CENetGradients grads;
  double initial_loss = 0.0;
  int bad_streak = 0;

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(epoch) + 1);
    Mat H_true = sample_channel_batch(cfg, tcfg.batch, rng);
    Mat Z(2 * cfg.N * cfg.Tt, tcfg.batch);
    const double z_std = std::sqrt(cfg.noise_power() / 2.0);
    for (Eigen::Index j = 0; j < Z.cols(); ++j)
      for (Eigen::Index i = 0; i < Z.rows(); ++i) Z(i, j) = z_std * rng.gaussian();

    const double loss = cenet_loss_and_grads(cfg, params, spec, tcfg, H_true, Z, grads);
    const double lr = lr_schedule(epoch, tcfg);
    out.trace.push_back({epoch, lr, loss});
    if (epoch == 0) initial_loss = loss;
    if (diverged_check(loss, initial_loss, tcfg, bad_streak)) {
      out.diverged = true;
      break;
    }

    Vec g(nparams);
    g.head(L) = grads.d_alpha;
    g(L) = grads.d_beta;
    if (params.trainable_pilot) {
      const Mat dre = grads.d_Xt.real(), dim = grads.d_Xt.imag();
      g.segment(L + 1, params.Xt.size()) = dre.reshaped();
      g.tail(params.Xt.size()) = dim.reshaped();
    }
    adam_step(theta, g, adam, lr);

    params.alpha = theta.head(L);
    params.beta = theta(L);
    if (params.trainable_pilot) {
      const Mat re =
          theta.segment(L + 1, params.Xt.size()).reshaped(params.Xt.rows(), params.Xt.cols());
      const Mat im = theta.tail(params.Xt.size()).reshaped(params.Xt.rows(), params.Xt.cols());
      params.Xt = re.cast<cplx>() + cplx(0.0, 1.0) * im.cast<cplx>();
      normalize_pilot_rows(params.Xt);
      const Mat re2 = params.Xt.real(), im2 = params.Xt.imag();
      theta.segment(L + 1, params.Xt.size()) = re2.reshaped();
      theta.tail(params.Xt.size()) = im2.reshaped();
    }
  }
  out.params = std::move(params);
  return out;
}

DetNetTrainResult train_detnet(const SystemConfig& cfg, const TrainConfig& tcfg,
                               DetNetParams params, NetKind kind) {
  cfg.validate();
  if (kind == NetKind::FBM_CENET)
    throw std::invalid_argument("train_detnet: expected a detection network kind");
  const bool fbm = (kind == NetKind::FBM_DETNET);
  const QuantizerSpec spec = make_receiver_quantizer(cfg);
  const ConstellationProjectorSpec proj = projector_for(cfg.constellation);
  const Constellation cons = make_constellation(cfg.constellation);
  const double N0 = cfg.noise_power();
  const int L = params.L;
  const Eigen::Index nparams = 2 * L + (fbm ? 1 : 0);

  // The projector scales must stay positive; optimize their softplus preimage.
  Vec theta(nparams);
  theta.head(L) = params.alpha;
  for (int l = 0; l < L; ++l) theta(L + l) = softplus_inverse(params.t(l));
  if (fbm) theta(2 * L) = params.beta;

  AdamState adam(nparams);
  DetNetTrainResult out;
  out.trace.reserve(tcfg.epochs);
  double initial_loss = 0.0;
  int bad_streak = 0;

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(epoch) + 1);
    Vec g_acc = Vec::Zero(nparams);
    double loss_acc = 0.0;
    DetNetGradients grads;
    for (int b = 0; b < tcfg.batch; ++b) {
      CMat Hc = sample_channel(cfg, rng);
      DetNetSample s;
      s.H = complex_to_real_stack(Hc);
      SymbolDraw draw = sample_symbols(cfg, 1, rng);
      s.x = complex_to_real_stack(CVec(draw.symbols.col(0)));
      CMat zc = sample_noise(cfg.N, 1, N0, rng);
      Vec z = complex_to_real_stack(CVec(zc.col(0)));
      Vec r = s.H * s.x + z;
      Vec y = quantize_hard(r, spec);
      bin_bounds(y, spec, s.q_low, s.q_up);

      double loss;
      if (fbm) {
        loss = fbm_detnet_loss_and_grads(s, params, proj, grads);
      } else {
        BussgangModel model = linearize_detection(s.H, N0, spec);
        BDetNetOperator op = BDetNetOperator::from_model(model);
        loss = b_detnet_loss_and_grads(s, y, op, params, proj, grads);
      }
      loss_acc += loss;
      g_acc.head(L) += grads.d_alpha;
      for (int l = 0; l < L; ++l)
        g_acc(L + l) += grads.d_t(l) * sigmoid(theta(L + l));  // chain through softplus
      if (fbm) g_acc(2 * L) += grads.d_beta;
    }
    const double inv_b = 1.0 / static_cast<double>(tcfg.batch);
    const double loss = loss_acc * inv_b;
    g_acc *= inv_b;

    const double lr = lr_schedule(epoch, tcfg);
    out.trace.push_back({epoch, lr, loss});
    if (epoch == 0) initial_loss = loss;
    if (diverged_check(loss, initial_loss, tcfg, bad_streak)) {
      out.diverged = true;
      break;
    }

    adam_step(theta, g_acc, adam, lr);
    params.alpha = theta.head(L);
    for (int l = 0; l < L; ++l) params.t(l) = softplus(theta(L + l));
    if (fbm) params.beta = theta(2 * L);
  }
  out.params = std::move(params);
  return out;
}

void write_loss_trace_csv(const std::string& path, const std::vector<LossTracePoint>& trace) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_loss_trace_csv: cannot open " + path);
  f << "epoch,lr,loss\n";
  char buf[128];
  for (const auto& p : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", p.epoch, p.lr, p.loss);
    f << buf;
  }
}

}  // namespace fbmimo
