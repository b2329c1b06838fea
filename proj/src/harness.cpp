#include "fbmimo/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fbmimo {

double nmse(const std::vector<Vec>& h_hat, const std::vector<Vec>& h, int K, int N) {
  if (h_hat.size() != h.size()) throw std::invalid_argument("nmse: mismatched sample counts");
  if (h.empty()) throw std::invalid_argument("nmse: empty sample set");
  double acc = 0.0;
  for (size_t i = 0; i < h.size(); ++i) acc += (h_hat[i] - h[i]).squaredNorm();
  return acc / (static_cast<double>(h.size()) * K * N);
}

double ber(const std::vector<uint8_t>& bits_hat, const std::vector<uint8_t>& bits) {
  if (bits_hat.size() != bits.size()) throw std::invalid_argument("ber: length mismatch");
  if (bits.empty()) throw std::invalid_argument("ber: empty bit vectors");
  long errors = 0;
  for (size_t i = 0; i < bits.size(); ++i) errors += (bits_hat[i] != bits[i]) ? 1 : 0;
  return static_cast<double>(errors) / static_cast<double>(bits.size());
}

NmseMethod parse_nmse_method(const std::string& name) {
  if (name == "bmmse") return NmseMethod::BMMSE;
  if (name == "bwzf") return NmseMethod::BWZF;
  if (name == "ml") return NmseMethod::ML_GRADIENT;
  if (name == "fbm-cenet") return NmseMethod::FBM_CENET;
  throw std::invalid_argument("unknown NMSE method: " + name);
}

std::string to_string(NmseMethod m) {
  switch (m) {
    case NmseMethod::BMMSE: return "bmmse";
    case NmseMethod::BWZF: return "bwzf";
    case NmseMethod::ML_GRADIENT: return "ml";
    case NmseMethod::FBM_CENET: return "fbm-cenet";
  }
  throw std::logic_error("unreachable");
}

BerMethod parse_ber_method(const std::string& name) {
  if (name == "bmmse") return BerMethod::BMMSE_LINEAR;
  if (name == "b-detnet") return BerMethod::B_DETNET;
  if (name == "fbm-detnet") return BerMethod::FBM_DETNET;
  if (name == "exhaustive-ml") return BerMethod::EXHAUSTIVE_ML;
  throw std::invalid_argument("unknown BER method: " + name);
}

std::string to_string(BerMethod m) {
  switch (m) {
    case BerMethod::BMMSE_LINEAR: return "bmmse";
    case BerMethod::B_DETNET: return "b-detnet";
    case BerMethod::FBM_DETNET: return "fbm-detnet";
    case BerMethod::EXHAUSTIVE_ML: return "exhaustive-ml";
  }
  throw std::logic_error("unreachable");
}

CsiMode parse_csi_mode(const std::string& name) {
  if (name == "perfect") return CsiMode::PERFECT;
  if (name == "estimated") return CsiMode::ESTIMATED;
  throw std::invalid_argument("unknown CSI mode: " + name);
}

namespace {

// Sum / sum-of-squares accumulator. Addition is associative, so trial
// partitions can be merged in any order.
struct RunningStat {
  long n = 0;
  double sum = 0.0, sumsq = 0.0;
  void add(double x) {
    ++n;
    sum += x;
    sumsq += x * x;
  }
  double mean() const { return sum / static_cast<double>(n); }
  double std_error() const {
    if (n < 2) return 0.0;
    const double m = mean();
    double var = (sumsq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    if (var < 0.0) var = 0.0;
    return std::sqrt(var / static_cast<double>(n));
  }
};

std::uint64_t trial_stream(std::size_t point, std::uint64_t trial) {
  return (static_cast<std::uint64_t>(point) << 40) | trial;
}
std::uint64_t channel_stream(std::size_t point, std::uint64_t block) {
  return (static_cast<std::uint64_t>(point) << 40) | (1ull << 39) | block;
}

SystemConfig at_snr(const SystemConfig& base, double snr_db) {
  SystemConfig cfg = base;
  cfg.rho = snr_db_to_rho(snr_db);
  cfg.validate();
  return cfg;
}

}  // namespace

SweepResult run_nmse_sweep(const NmseSweepSpec& sweep) {
  SweepResult out;
  for (NmseMethod m : sweep.methods)
    if (m == NmseMethod::FBM_CENET && !sweep.cenet_provider)
      throw std::runtime_error("run_nmse_sweep: fbm-cenet requested without a trained checkpoint");
  if (sweep.trials < 1) throw std::invalid_argument("run_nmse_sweep: trials >= 1 required");

  for (std::size_t pi = 0; pi < sweep.snr_db.size(); ++pi) {
    const double snr = sweep.snr_db[pi];
    const SystemConfig cfg = at_snr(sweep.base, snr);
    const QuantizerSpec spec = make_receiver_quantizer(cfg);
    const double N0 = cfg.noise_power();
    const double kn = static_cast<double>(cfg.K) * cfg.N;

    const PilotSet dft = build_dft_pilot(cfg);
    const BussgangModel model = linearize_training(dft.P, N0, spec);
    const Mat bmmse_F = bmmse_filter(model.A, sigma_y_for_bmmse(model.V, model.Sigma_r, spec));

    bool want_net = false;
    CENetParams net;
    PilotSet net_pilot;
    for (NmseMethod m : sweep.methods) want_net |= (m == NmseMethod::FBM_CENET);
    if (want_net) {
      net = sweep.cenet_provider(snr);
      net_pilot = expand_pilot(net.Xt, cfg.N);
    }
    // The likelihood gradient carries a c*sqrt(2 rho) factor; divide it out so
    // the effective step matches the 1/(2N) used by the unfolded networks.
    const double gscale = kSigmoidCdfConst * std::sqrt(2.0 * cfg.rho);
    const Vec ml_steps = Vec::Constant(sweep.ml_iterations, 1.0 / (2.0 * cfg.N * gscale));

    std::vector<RunningStat> stats(sweep.methods.size());
    Vec q_up, q_low, net_q_up, net_q_low;
    for (int t = 0; t < sweep.trials; ++t) {
      Rng rng = Rng::substream(cfg.seed, trial_stream(pi, static_cast<std::uint64_t>(t)));
      CMat Hc = sample_channel(cfg, rng);
      Vec h = complex_to_real_stack(CVec(Eigen::Map<CVec>(Hc.data(), Hc.size())));
      Vec z(dft.P.rows());
      const double z_std = std::sqrt(N0 / 2.0);
      for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = z_std * rng.gaussian();

      Vec y = quantize_hard(Vec(dft.P * h + z), spec);
      bin_bounds(y, spec, q_low, q_up);
      if (want_net) {
        Vec ynet = quantize_hard(Vec(net_pilot.P * h + z), spec);
        bin_bounds(ynet, spec, net_q_low, net_q_up);
      }

      for (std::size_t mi = 0; mi < sweep.methods.size(); ++mi) {
        Vec h_hat;
        switch (sweep.methods[mi]) {
          case NmseMethod::BMMSE:
            h_hat.noalias() = bmmse_F * y;
            break;
          case NmseMethod::BWZF: {
            Vec w = bwzf_weights(y, model.V, model.Sigma_r, spec, N0);
            h_hat = bwzf_estimate(y, model.A, w);
            break;
          }
          case NmseMethod::ML_GRADIENT: {
            LikelihoodContext ctx{dft.P, q_up, q_low, cfg.rho};
            h_hat = gradient_ascent_channel(ctx, ml_steps, sweep.ml_iterations);
            break;
          }
          case NmseMethod::FBM_CENET:
            h_hat = fbm_cenet_forward(net_pilot.P, net_q_up, net_q_low, net);
            break;
        }
        stats[mi].add((h_hat - h).squaredNorm() / kn);
      }
    }
    for (std::size_t mi = 0; mi < sweep.methods.size(); ++mi)
      out.rows.push_back({snr, to_string(sweep.methods[mi]), "nmse", stats[mi].mean(),
                          stats[mi].n, stats[mi].std_error()});
  }
  return out;
}

SweepResult run_ber_sweep(const BerSweepSpec& sweep) {
  SweepResult out;
  for (BerMethod m : sweep.methods)
    if ((m == BerMethod::B_DETNET || m == BerMethod::FBM_DETNET) && !sweep.detnet_provider)
      throw std::runtime_error("run_ber_sweep: detection network requested without a checkpoint");
  if (sweep.csi == CsiMode::ESTIMATED && !sweep.cenet_provider)
    throw std::runtime_error("run_ber_sweep: estimated CSI requested without an estimator");
  if (sweep.trials < 1 || sweep.vectors_per_channel < 1)
    throw std::invalid_argument("run_ber_sweep: trials and vectors_per_channel must be >= 1");

  for (std::size_t pi = 0; pi < sweep.snr_db.size(); ++pi) {
    const double snr = sweep.snr_db[pi];
    const SystemConfig cfg = at_snr(sweep.base, snr);
    const QuantizerSpec spec = make_receiver_quantizer(cfg);
    const ConstellationProjectorSpec proj = projector_for(cfg.constellation);
    const Constellation cons = make_constellation(cfg.constellation);
    const double N0 = cfg.noise_power();

    bool want_b = false, want_f = false, want_bmmse = false, want_ex = false;
    for (BerMethod m : sweep.methods) {
      want_b |= (m == BerMethod::B_DETNET);
      want_f |= (m == BerMethod::FBM_DETNET);
      want_bmmse |= (m == BerMethod::BMMSE_LINEAR);
      want_ex |= (m == BerMethod::EXHAUSTIVE_ML);
    }
    DetNetParams bdet, fdet;
    if (want_b) bdet = sweep.detnet_provider(snr, NetKind::B_DETNET);
    if (want_f) fdet = sweep.detnet_provider(snr, NetKind::FBM_DETNET);

    CENetParams est;
    PilotSet est_pilot;
    if (sweep.csi == CsiMode::ESTIMATED) {
      est = sweep.cenet_provider(snr);
      est_pilot = expand_pilot(est.Xt, cfg.N);
    }

    std::vector<RunningStat> stats(sweep.methods.size());
    Mat H_true, H_csi;
    BDetNetOperator bdet_op;
    Mat bmmse_F;
    Vec q_up, q_low, sym_out;
    std::vector<uint8_t> bits_out;
    std::uint64_t block = 0;

    for (int t = 0; t < sweep.trials; ++t) {
      if (t % sweep.vectors_per_channel == 0) {
        Rng crng = Rng::substream(cfg.seed, channel_stream(pi, block++));
        CMat Hc = sample_channel(cfg, crng);
        H_true = complex_to_real_stack(Hc);
        if (sweep.csi == CsiMode::ESTIMATED) {
          Vec h = complex_to_real_stack(CVec(Eigen::Map<CVec>(Hc.data(), Hc.size())));
          Vec z(est_pilot.P.rows());
          const double z_std = std::sqrt(N0 / 2.0);
          for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = z_std * crng.gaussian();
          Vec yt = quantize_hard(Vec(est_pilot.P * h + z), spec);
          Vec ql, qu;
          bin_bounds(yt, spec, ql, qu);
          Vec h_hat = fbm_cenet_forward(est_pilot.P, qu, ql, est);
          CVec hc_hat = real_to_complex_stack_vec(h_hat);
          CMat Hc_hat = Eigen::Map<CMat>(hc_hat.data(), cfg.N, cfg.K);
          H_csi = complex_to_real_stack(Hc_hat);
        } else {
          H_csi = H_true;
        }
        // Detectors see only H_csi from here on.
        if (want_b || want_bmmse) {
          BussgangModel model = linearize_detection(H_csi, N0, spec);
          if (want_b) bdet_op = BDetNetOperator::from_model(model);
          if (want_bmmse)
            bmmse_F = bmmse_filter(model.A, sigma_y_for_bmmse(model.V, model.Sigma_r, spec));
        }
      }

      Rng rng = Rng::substream(cfg.seed, trial_stream(pi, static_cast<std::uint64_t>(t)));
      SymbolDraw draw = sample_symbols(cfg, 1, rng);
      Vec x = complex_to_real_stack(CVec(draw.symbols.col(0)));
      CMat zc = sample_noise(cfg.N, 1, N0, rng);
      Vec z = complex_to_real_stack(CVec(zc.col(0)));
      Vec y = quantize_hard(Vec(H_true * x + z), spec);
      bin_bounds(y, spec, q_low, q_up);

      for (std::size_t mi = 0; mi < sweep.methods.size(); ++mi) {
        Vec x_hat;
        switch (sweep.methods[mi]) {
          case BerMethod::BMMSE_LINEAR:
            x_hat.noalias() = bmmse_F * y;
            break;
          case BerMethod::B_DETNET:
            x_hat = b_detnet_forward(y, bdet_op, bdet, proj);
            break;
          case BerMethod::FBM_DETNET:
            x_hat = fbm_detnet_forward(H_csi, q_up, q_low, fdet, proj);
            break;
          case BerMethod::EXHAUSTIVE_ML: {
            LikelihoodContext ctx{H_csi, q_up, q_low, cfg.rho};
            CVec xc = exhaustive_ml_detect(ctx, cons, cfg.K);
            x_hat = complex_to_real_stack(xc);
            break;
          }
        }
        hard_decision(x_hat, cons, sym_out, bits_out);
        stats[mi].add(ber(bits_out, draw.bits));
      }
    }
    for (std::size_t mi = 0; mi < sweep.methods.size(); ++mi)
      out.rows.push_back({snr, to_string(sweep.methods[mi]), "ber", stats[mi].mean(),
                          stats[mi].n, stats[mi].std_error()});
  }
  return out;
}

std::string to_csv(const SweepResult& result) {
  std::string s = "snr_db,method,metric,value,trials,std_error\n";
  char buf[256];
  for (const auto& r : result.rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%s,%s,%.17g,%ld,%.17g\n", r.snr_db, r.method.c_str(),
                  r.metric.c_str(), r.value, r.trials, r.std_error);
    s += buf;
  }
  return s;
}

void export_csv(const SweepResult& result, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("export_csv: cannot open " + path);
  f << to_csv(result);
}

}  // namespace fbmimo
