// Command-line front end: `train` fits a network and writes a checkpoint,
// `sweep` runs Monte-Carlo NMSE/BER grids to CSV, `verify` runs the built-in
// invariant checks. Exit codes: 0 ok, 1 config error, 2 training divergence,
// 3 verification failure.
#include <CLI11.hpp>

#include "fbmimo/harness.hpp"
#include "fbmimo/training.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fbmimo;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct KeyValueConfig {
  std::string path;
  std::map<std::string, std::string> values;
  std::map<std::string, int> lines;

  bool has(const std::string& key) const { return values.count(key) != 0; }

  const std::string& require(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end())
      throw ConfigError(path + ": missing required key `" + key + "`");
    return it->second;
  }

  std::string anchored(const std::string& key) const {
    auto it = lines.find(key);
    return path + ":" + (it == lines.end() ? "?" : std::to_string(it->second));
  }

  int get_int(const std::string& key) const {
    try {
      size_t pos = 0;
      int v = std::stoi(require(key), &pos);
      if (pos != require(key).size()) throw std::invalid_argument("trailing junk");
      return v;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(anchored(key) + ": `" + key + "` must be an integer");
    }
  }

  double get_double(const std::string& key) const {
    try {
      size_t pos = 0;
      double v = std::stod(require(key), &pos);
      if (pos != require(key).size()) throw std::invalid_argument("trailing junk");
      return v;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(anchored(key) + ": `" + key + "` must be a number");
    }
  }

  bool get_bool(const std::string& key) const {
    const std::string& s = require(key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError(anchored(key) + ": `" + key + "` must be true/false");
  }

  int get_int_or(const std::string& key, int def) const { return has(key) ? get_int(key) : def; }
  double get_double_or(const std::string& key, double def) const {
    return has(key) ? get_double(key) : def;
  }
  bool get_bool_or(const std::string& key, bool def) const {
    return has(key) ? get_bool(key) : def;
  }
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

KeyValueConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  KeyValueConfig cfg;
  cfg.path = path;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value, got `" +
                        line + "`");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key or value");
    cfg.values[key] = value;
    cfg.lines[key] = lineno;
  }
  return cfg;
}

SystemConfig system_from_config(const KeyValueConfig& kv, double* snr_db_out = nullptr) {
  SystemConfig cfg;
  cfg.N = kv.get_int("system.N");
  cfg.K = kv.get_int("system.K");
  cfg.Tt = kv.get_int("system.Tt");
  cfg.bits = kv.get_int("system.bits");
  const double snr_db = kv.get_double("system.snr_db");
  cfg.rho = snr_db_to_rho(snr_db);
  try {
    cfg.constellation = parse_constellation(kv.require("system.constellation"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(kv.anchored("system.constellation") + ": " + e.what());
  }
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed"));
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(kv.path + ": " + e.what());
  }
  if (snr_db_out) *snr_db_out = snr_db;
  return cfg;
}

TrainConfig train_from_config(const KeyValueConfig& kv) {
  TrainConfig t;
  t.epochs = kv.get_int_or("train.epochs", t.epochs);
  t.batch = kv.get_int_or("train.batch", t.batch);
  t.lr0 = kv.get_double_or("train.lr0", t.lr0);
  t.decay = kv.get_double_or("train.decay", t.decay);
  t.c1 = kv.get_double_or("train.c1", t.c1);
  t.c2 = kv.get_double_or("train.c2", t.c2);
  t.trainable_pilot = kv.get_bool_or("train.trainable_pilot", false);
  return t;
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_snr(double snr_db) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", snr_db);
  return buf;
}

std::string substitute_snr(std::string path, double snr_db) {
  const std::string token = "{snr}";
  const auto pos = path.find(token);
  if (pos != std::string::npos) path.replace(pos, token.size(), format_snr(snr_db));
  return path;
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw ConfigError("missing " + what + ": " + path);
}

void write_manifest(const std::string& path, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write manifest: " + path);
  f << "command = " << command << "\n";
  for (const auto& [k, v] : entries) f << k << " = " << v << "\n";
}

// --- train -------------------------------------------------------------------

int cmd_train(const std::string& config_path, std::string net_override,
              const std::string& out_dir, int epochs_override) {
  const KeyValueConfig kv = load_config(config_path);
  double snr_db = 0.0;
  const SystemConfig cfg = system_from_config(kv, &snr_db);
  TrainConfig tcfg = train_from_config(kv);
  if (epochs_override >= 0) tcfg.epochs = epochs_override;

  std::string kind_name = net_override.empty() ? kv.require("net.kind") : net_override;
  NetKind kind;
  try {
    kind = parse_net_kind(kind_name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(e.what()));
  }
  const int layers = kv.get_int("net.layers");
  if (layers < 1) throw ConfigError(kv.anchored("net.layers") + ": net.layers must be >= 1");

  fs::create_directories(out_dir.empty() ? "." : out_dir);
  const std::string stem =
      (fs::path(out_dir.empty() ? "." : out_dir) / fs::path(config_path).stem()).string();
  const std::string ckpt = stem + ".ckpt";
  const std::string loss_csv = stem + "_loss.csv";

  bool diverged = false;
  if (kind == NetKind::FBM_CENET) {
    PilotSet pilot = build_dft_pilot(cfg);
    CENetParams params = CENetParams::initialized(cfg, layers, pilot.Xt, tcfg.trainable_pilot);
    CENetTrainResult r = train_cenet(cfg, tcfg, params);
    save_cenet_checkpoint(ckpt, r.params);
    write_loss_trace_csv(loss_csv, r.trace);
    diverged = r.diverged;
  } else {
    DetNetParams params = DetNetParams::initialized(cfg, layers);
    DetNetTrainResult r = train_detnet(cfg, tcfg, params, kind);
    save_detnet_checkpoint(ckpt, r.params, kind);
    write_loss_trace_csv(loss_csv, r.trace);
    diverged = r.diverged;
  }

  std::vector<std::pair<std::string, std::string>> manifest = {
      {"config", config_path},
      {"checkpoint", ckpt},
      {"loss_csv", loss_csv},
      {"net.kind", to_string(kind)},
      {"net.layers", std::to_string(layers)},
      {"system.N", std::to_string(cfg.N)},
      {"system.K", std::to_string(cfg.K)},
      {"system.Tt", std::to_string(cfg.Tt)},
      {"system.bits", std::to_string(cfg.bits)},
      {"system.snr_db", format_snr(snr_db)},
      {"system.constellation", to_string(cfg.constellation)},
      {"seed", std::to_string(cfg.seed)},
      {"train.epochs", std::to_string(tcfg.epochs)},
      {"train.batch", std::to_string(tcfg.batch)},
      {"train.lr0", std::to_string(tcfg.lr0)},
      {"train.decay", std::to_string(tcfg.decay)},
      {"train.c1", std::to_string(tcfg.c1)},
      {"train.c2", std::to_string(tcfg.c2)},
      {"train.trainable_pilot", tcfg.trainable_pilot ? "true" : "false"},
      {"diverged", diverged ? "true" : "false"},
  };
  write_manifest(stem + "_manifest.txt", "train", manifest);

  if (diverged) {
    std::cerr << "training diverged; partial checkpoint written to " << ckpt << "\n";
    return 2;
  }
  std::cout << "checkpoint: " << ckpt << "\nloss trace: " << loss_csv << "\n";
  return 0;
}

// --- sweep -------------------------------------------------------------------

int cmd_sweep(const std::string& metric, const std::string& config_path,
              const std::string& methods_arg, const std::string& snrs_arg, int trials,
              int ml_iters, int vectors_per_channel, const std::string& csi_arg,
              const std::string& ckpt_cenet, const std::string& ckpt_bdetnet,
              const std::string& ckpt_fbmdetnet, const std::string& out_path) {
  const KeyValueConfig kv = load_config(config_path);
  double cfg_snr_db = 0.0;
  const SystemConfig base = system_from_config(kv, &cfg_snr_db);

  std::vector<double> snrs;
  if (snrs_arg.empty()) {
    snrs.push_back(cfg_snr_db);
  } else {
    for (const std::string& s : split_csv_list(snrs_arg)) {
      try {
        snrs.push_back(std::stod(s));
      } catch (const std::exception&) {
        throw ConfigError("invalid --snrs entry: " + s);
      }
    }
  }
  if (snrs.empty()) throw ConfigError("--snrs produced an empty grid");

  auto cenet_provider = [&](double snr_db) {
    const std::string path = substitute_snr(ckpt_cenet, snr_db);
    require_file(path, "fbm-cenet checkpoint");
    return load_cenet_checkpoint(path);
  };

  SweepResult result;
  if (metric == "nmse") {
    NmseSweepSpec spec;
    spec.base = base;
    spec.snr_db = snrs;
    spec.trials = trials;
    spec.ml_iterations = ml_iters;
    for (const std::string& m : split_csv_list(methods_arg)) {
      try {
        spec.methods.push_back(parse_nmse_method(m));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(e.what()));
      }
    }
    if (spec.methods.empty()) throw ConfigError("--methods is required and must be non-empty");
    for (NmseMethod m : spec.methods)
      if (m == NmseMethod::FBM_CENET && ckpt_cenet.empty())
        throw ConfigError("method fbm-cenet requires --ckpt-cenet");
    if (!ckpt_cenet.empty()) spec.cenet_provider = cenet_provider;
    result = run_nmse_sweep(spec);
  } else if (metric == "ber") {
    BerSweepSpec spec;
    spec.base = base;
    spec.snr_db = snrs;
    spec.trials = trials;
    spec.vectors_per_channel = vectors_per_channel;
    try {
      spec.csi = parse_csi_mode(csi_arg);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(e.what()));
    }
    for (const std::string& m : split_csv_list(methods_arg)) {
      try {
        spec.methods.push_back(parse_ber_method(m));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(e.what()));
      }
    }
    if (spec.methods.empty()) throw ConfigError("--methods is required and must be non-empty");
    for (BerMethod m : spec.methods) {
      if (m == BerMethod::B_DETNET && ckpt_bdetnet.empty())
        throw ConfigError("method b-detnet requires --ckpt-bdetnet");
      if (m == BerMethod::FBM_DETNET && ckpt_fbmdetnet.empty())
        throw ConfigError("method fbm-detnet requires --ckpt-fbmdetnet");
    }
    if (spec.csi == CsiMode::ESTIMATED && ckpt_cenet.empty())
      throw ConfigError("--csi estimated requires --ckpt-cenet");
    if (!ckpt_bdetnet.empty() || !ckpt_fbmdetnet.empty())
      spec.detnet_provider = [&](double snr_db, NetKind kind) {
        const std::string& tpl = (kind == NetKind::B_DETNET) ? ckpt_bdetnet : ckpt_fbmdetnet;
        const std::string path = substitute_snr(tpl, snr_db);
        require_file(path, to_string(kind) + " checkpoint");
        return load_detnet_checkpoint(path, kind);
      };
    if (!ckpt_cenet.empty()) spec.cenet_provider = cenet_provider;
    result = run_ber_sweep(spec);
  } else {
    throw ConfigError("sweep metric must be `nmse` or `ber`, got `" + metric + "`");
  }

  export_csv(result, out_path);
  std::string snr_list;
  for (size_t i = 0; i < snrs.size(); ++i)
    snr_list += (i ? "," : "") + format_snr(snrs[i]);
  std::vector<std::pair<std::string, std::string>> manifest = {
      {"config", config_path},
      {"metric", metric},
      {"methods", methods_arg},
      {"snrs_db", snr_list},
      {"trials", std::to_string(trials)},
      {"seed", std::to_string(base.seed)},
      {"out", out_path},
  };
  if (metric == "ber") {
    manifest.push_back({"csi", csi_arg});
    manifest.push_back({"vectors_per_channel", std::to_string(vectors_per_channel)});
  } else {
    manifest.push_back({"ml_iterations", std::to_string(ml_iters)});
  }
  if (!ckpt_cenet.empty()) manifest.push_back({"ckpt_cenet", ckpt_cenet});
  if (!ckpt_bdetnet.empty()) manifest.push_back({"ckpt_bdetnet", ckpt_bdetnet});
  if (!ckpt_fbmdetnet.empty()) manifest.push_back({"ckpt_fbmdetnet", ckpt_fbmdetnet});
  write_manifest(out_path + ".manifest", "sweep", manifest);

  std::cout << "wrote " << result.rows.size() << " rows to " << out_path << "\n";
  return 0;
}

// --- verify ------------------------------------------------------------------

struct Check {
  std::string name;
  std::function<bool(double, std::string&)> run;  // (tol_scale, detail) -> pass
};

std::vector<Check> build_checks() {
  std::vector<Check> checks;

  checks.push_back({"sigmoid-cdf-bound", [](double ts, std::string& d) {
    double worst = 0.0;
    for (double t = -10.0; t <= 10.0; t += 1e-3)
      worst = std::max(worst, std::abs(normal_cdf(t) - sigmoid_cdf(t)));
    d = "max |Phi - sigmoid| = " + std::to_string(worst);
    return worst <= 0.0095 * ts;
  }});

  checks.push_back({"likelihood-gradient-fd", [](double ts, std::string& d) {
    double worst = 0.0;
    for (int inst = 0; inst < 25; ++inst) {
      Rng rng(1000 + inst);
      SystemConfig cfg;
      cfg.N = 2 + rng.uniform_int(3);
      cfg.K = 1 + rng.uniform_int(2);
      cfg.Tt = cfg.K + 1 + rng.uniform_int(3);
      cfg.bits = 1 + rng.uniform_int(3);
      cfg.rho = snr_db_to_rho(-5.0 + 20.0 * rng.uniform());
      const QuantizerSpec spec = make_quantizer(cfg.bits, std::sqrt((cfg.K + cfg.noise_power()) / 2.0));
      PilotSet pilot = build_dft_pilot(cfg);
      Vec h(2 * cfg.N * cfg.K);
      for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = rng.gaussian() / std::sqrt(2.0);
      Vec z(pilot.P.rows());
      for (Eigen::Index i = 0; i < z.size(); ++i)
        z(i) = std::sqrt(cfg.noise_power() / 2.0) * rng.gaussian();
      Vec y = quantize_hard(Vec(pilot.P * h + z), spec), ql, qu;
      bin_bounds(y, spec, ql, qu);
      LikelihoodContext ctx{pilot.P, qu, ql, cfg.rho};
      Vec v(h.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 0.5 * rng.gaussian();
      Vec g = ml_gradient_reformulated(v, ctx);
      const double eps = 1e-6;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        Vec up = v, dn = v;
        up(i) += eps;
        dn(i) -= eps;
        const double fd =
            (ml_objective_reformulated(up, ctx) - ml_objective_reformulated(dn, ctx)) / (2 * eps);
        const double scale = std::max({std::abs(g(i)), std::abs(fd), 1.0});
        worst = std::max(worst, std::abs(g(i) - fd) / scale);
      }
    }
    d = "worst relative error = " + std::to_string(worst);
    return worst < 1e-5 * ts;
  }});

  checks.push_back({"backprop-cenet-fd", [](double ts, std::string& d) {
    SystemConfig cfg;
    cfg.N = 2; cfg.K = 1; cfg.Tt = 2; cfg.bits = 2;
    cfg.rho = snr_db_to_rho(5.0);
    const QuantizerSpec spec = make_receiver_quantizer(cfg);
    PilotSet pilot = build_dft_pilot(cfg);
    TrainConfig tcfg;
    CENetParams p = CENetParams::initialized(cfg, 2, pilot.Xt, true);
    Rng rng(77);
    Mat H_true(2 * cfg.N * cfg.K, 2), Z(2 * cfg.N * cfg.Tt, 2);
    for (Eigen::Index j = 0; j < 2; ++j) {
      for (Eigen::Index i = 0; i < H_true.rows(); ++i) H_true(i, j) = rng.gaussian() / std::sqrt(2.0);
      for (Eigen::Index i = 0; i < Z.rows(); ++i)
        Z(i, j) = std::sqrt(cfg.noise_power() / 2.0) * rng.gaussian();
    }
    CENetGradients grads;
    cenet_loss_and_grads(cfg, p, spec, tcfg, H_true, Z, grads);
    auto loss_at = [&](const CENetParams& q) {
      CENetGradients dummy;
      return cenet_loss_and_grads(cfg, q, spec, tcfg, H_true, Z, dummy);
    };
    const double eps = 1e-6;
    double worst = 0.0;
    auto fd_check = [&](double analytic, CENetParams up, CENetParams dn) {
      const double fd = (loss_at(up) - loss_at(dn)) / (2 * eps);
      const double scale = std::max({std::abs(analytic), std::abs(fd), 1e-6});
      worst = std::max(worst, std::abs(analytic - fd) / scale);
    };
    for (int l = 0; l < 2; ++l) {
      CENetParams up = p, dn = p;
      up.alpha(l) += eps;
      dn.alpha(l) -= eps;
      fd_check(grads.d_alpha(l), up, dn);
    }
    {
      CENetParams up = p, dn = p;
      up.beta += eps;
      dn.beta -= eps;
      fd_check(grads.d_beta, up, dn);
    }
    for (Eigen::Index t = 0; t < p.Xt.cols(); ++t)
      for (Eigen::Index k = 0; k < p.Xt.rows(); ++k) {
        CENetParams up = p, dn = p;
        up.Xt(k, t) += cplx(eps, 0);
        dn.Xt(k, t) -= cplx(eps, 0);
        fd_check(grads.d_Xt(k, t).real(), up, dn);
        up = p; dn = p;
        up.Xt(k, t) += cplx(0, eps);
        dn.Xt(k, t) -= cplx(0, eps);
        fd_check(grads.d_Xt(k, t).imag(), up, dn);
      }
    d = "worst relative error = " + std::to_string(worst);
    return worst < 1e-4 * ts;
  }});

  auto detnet_fd = [](NetKind kind, double ts, std::string& d) {
    SystemConfig cfg;
    cfg.N = 2; cfg.K = 1; cfg.Tt = 2; cfg.bits = 2;
    cfg.rho = snr_db_to_rho(5.0);
    const QuantizerSpec spec = make_receiver_quantizer(cfg);
    const ConstellationProjectorSpec proj = projector_for(cfg.constellation);
    Rng rng(kind == NetKind::B_DETNET ? 91 : 88);
    DetNetSample s;
    CMat Hc = sample_channel(cfg, rng);
    s.H = complex_to_real_stack(Hc);
    SymbolDraw draw = sample_symbols(cfg, 1, rng);
    s.x = complex_to_real_stack(CVec(draw.symbols.col(0)));
    CMat zc = sample_noise(cfg.N, 1, cfg.noise_power(), rng);
    Vec y = quantize_hard(Vec(s.H * s.x + complex_to_real_stack(CVec(zc.col(0)))), spec);
    bin_bounds(y, spec, s.q_low, s.q_up);
    DetNetParams p = DetNetParams::initialized(cfg, 2);
    BussgangModel model = linearize_detection(s.H, cfg.noise_power(), spec);
    BDetNetOperator op = BDetNetOperator::from_model(model);
    auto loss_at = [&](const DetNetParams& q) {
      DetNetGradients dummy;
      return kind == NetKind::B_DETNET ? b_detnet_loss_and_grads(s, y, op, q, proj, dummy)
                                       : fbm_detnet_loss_and_grads(s, q, proj, dummy);
    };
    DetNetGradients grads;
    if (kind == NetKind::B_DETNET)
      b_detnet_loss_and_grads(s, y, op, p, proj, grads);
    else
      fbm_detnet_loss_and_grads(s, p, proj, grads);
    const double eps = 1e-6;
    double worst = 0.0;
    auto fd_check = [&](double analytic, const DetNetParams& up, const DetNetParams& dn) {
      const double fd = (loss_at(up) - loss_at(dn)) / (2 * eps);
      const double scale = std::max({std::abs(analytic), std::abs(fd), 1e-6});
      worst = std::max(worst, std::abs(analytic - fd) / scale);
    };
    for (int l = 0; l < 2; ++l) {
      DetNetParams up = p, dn = p;
      up.alpha(l) += eps;
      dn.alpha(l) -= eps;
      fd_check(grads.d_alpha(l), up, dn);
      up = p; dn = p;
      up.t(l) += eps;
      dn.t(l) -= eps;
      fd_check(grads.d_t(l), up, dn);
    }
    if (kind == NetKind::FBM_DETNET) {
      DetNetParams up = p, dn = p;
      up.beta += eps;
      dn.beta -= eps;
      fd_check(grads.d_beta, up, dn);
    }
    d = "worst relative error = " + std::to_string(worst);
    return worst < 1e-4 * ts;
  };
  checks.push_back({"backprop-bdetnet-fd",
                    [detnet_fd](double ts, std::string& d) { return detnet_fd(NetKind::B_DETNET, ts, d); }});
  checks.push_back({"backprop-fbmdetnet-fd", [detnet_fd](double ts, std::string& d) {
    return detnet_fd(NetKind::FBM_DETNET, ts, d);
  }});

  checks.push_back({"unfold-cenet", [](double ts, std::string& d) {
    SystemConfig cfg;
    cfg.N = 4; cfg.K = 2; cfg.Tt = 6; cfg.bits = 2;
    cfg.rho = snr_db_to_rho(8.0);
    const QuantizerSpec spec = make_receiver_quantizer(cfg);
    PilotSet pilot = build_dft_pilot(cfg);
    Rng rng(55);
    CMat Hc = sample_channel(cfg, rng);
    Vec h = complex_to_real_stack(CVec(Eigen::Map<CVec>(Hc.data(), Hc.size())));
    Vec z(pilot.P.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i)
      z(i) = std::sqrt(cfg.noise_power() / 2.0) * rng.gaussian();
    Vec y = quantize_hard(Vec(pilot.P * h + z), spec), ql, qu;
    bin_bounds(y, spec, ql, qu);
    const int L = 6;
    CENetParams p = CENetParams::initialized(cfg, L, pilot.Xt, false);
    LikelihoodContext ctx{pilot.P, qu, ql, cfg.rho};
    const double gscale = kSigmoidCdfConst * std::sqrt(2.0 * cfg.rho);
    Vec ref = gradient_ascent_channel(ctx, Vec(p.alpha / gscale), L);
    Vec net = fbm_cenet_forward(pilot.P, qu, ql, p);
    const double dev = (net - ref).cwiseAbs().maxCoeff();
    d = "max deviation = " + std::to_string(dev);
    return dev < 1e-10 * ts;
  }});

  auto unfold_detnet = [](NetKind kind, double ts, std::string& d) {
    SystemConfig cfg;
    cfg.N = 4; cfg.K = 2; cfg.bits = 2;
    cfg.rho = snr_db_to_rho(8.0);
    const QuantizerSpec spec = make_receiver_quantizer(cfg);
    const ConstellationProjectorSpec proj = projector_for(cfg.constellation);
    Rng rng(56);
    CMat Hc = sample_channel(cfg, rng);
    Mat H = complex_to_real_stack(Hc);
    SymbolDraw draw = sample_symbols(cfg, 1, rng);
    Vec x = complex_to_real_stack(CVec(draw.symbols.col(0)));
    CMat zc = sample_noise(cfg.N, 1, cfg.noise_power(), rng);
    Vec y = quantize_hard(Vec(H * x + complex_to_real_stack(CVec(zc.col(0)))), spec);
    Vec ql, qu;
    bin_bounds(y, spec, ql, qu);
    const int L = 5;
    DetNetParams p = DetNetParams::initialized(cfg, L);
    double dev;
    if (kind == NetKind::B_DETNET) {
      BussgangModel model = linearize_detection(H, cfg.noise_power(), spec);
      BDetNetOperator op = BDetNetOperator::from_model(model);
      Mat Sni = model.Sigma_n.ldlt().solve(Mat::Identity(model.Sigma_n.rows(), model.Sigma_n.cols()));
      Vec ref = projected_gradient_detect_bml(y, model.A, Sni, DetectParams{p.alpha, p.t}, proj);
      dev = (b_detnet_forward(y, op, p, proj) - ref).cwiseAbs().maxCoeff();
    } else {
      LikelihoodContext ctx{H, qu, ql, cfg.rho};
      const double gscale = kSigmoidCdfConst * std::sqrt(2.0 * cfg.rho);
      DetNetParams pf = p;
      pf.beta = gscale;
      Vec ref = projected_gradient_detect_ml(ctx, DetectParams{Vec(p.alpha / gscale), p.t}, proj);
      dev = (fbm_detnet_forward(H, qu, ql, pf, proj) - ref).cwiseAbs().maxCoeff();
    }
    d = "max deviation = " + std::to_string(dev);
    return dev < 1e-10 * ts;
  };
  checks.push_back({"unfold-bdetnet", [unfold_detnet](double ts, std::string& d) {
    return unfold_detnet(NetKind::B_DETNET, ts, d);
  }});
  checks.push_back({"unfold-fbmdetnet", [unfold_detnet](double ts, std::string& d) {
    return unfold_detnet(NetKind::FBM_DETNET, ts, d);
  }});

  checks.push_back({"arcsine-law-mc", [](double ts, std::string& d) {
    const QuantizerSpec spec = make_quantizer(1, 1.0);
    const int n = 200000;
    double worst_z = 0.0;
    for (double corr : {0.0, 0.5, 0.9}) {
      Rng rng(2024 + static_cast<int>(corr * 10));
      double sum = 0.0, sumsq = 0.0;
      for (int i = 0; i < n; ++i) {
        const double a = rng.gaussian(), b = rng.gaussian();
        const double u = a / std::sqrt(2.0);
        const double v = (corr * a + std::sqrt(1.0 - corr * corr) * b) / std::sqrt(2.0);
        const double prod = quantize_hard(u, spec) * quantize_hard(v, spec);
        sum += prod;
        sumsq += prod * prod;
      }
      const double mean = sum / n;
      const double var = (sumsq - n * mean * mean) / (n - 1);
      const double se = std::sqrt(var / n);
      const double law = (spec.delta * spec.delta / M_PI) * std::asin(corr);
      // the law is a complex-domain covariance: twice the per-dimension moment
      worst_z = std::max(worst_z, std::abs(2.0 * mean - law) / (2.0 * se));
    }
    d = "worst |z| = " + std::to_string(worst_z) + " standard errors";
    return worst_z < 3.0 * ts;
  }});

  checks.push_back({"bussgang-orthogonality", [](double ts, std::string& d) {
    const QuantizerSpec spec = make_quantizer(2, 1.0);
    Rng rng(3030);
    const int n = 200000;
    const double sigma2 = 1.3;
    const double v = bussgang_gain(Vec::Constant(1, sigma2), spec)(0);
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = std::sqrt(sigma2 / 2.0) * rng.gaussian();
      const double e = (quantize_hard(r, spec) - v * r) * r;
      sum += e;
      sumsq += e * e;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sumsq - n * mean * mean) / (n - 1.0) / n);
    d = "E[(q - Vr) r] = " + std::to_string(mean) + " (se " + std::to_string(se) + ")";
    return std::abs(mean) < 4.0 * se * ts;
  }});

  checks.push_back({"quantizer-symmetry", [](double ts, std::string& d) {
    double worst = 0.0;
    for (int b = 1; b <= 4; ++b) {
      const QuantizerSpec spec = make_quantizer(b, 1.0);
      for (double x = -4.0; x <= 4.0; x += 0.0137) {
        worst = std::max(worst, std::abs(quantize_hard(x, spec) + quantize_hard(-x, spec)));
        worst = std::max(worst,
                         std::abs(quantize_hard(quantize_hard(x, spec), spec) -
                                  quantize_hard(x, spec)));
      }
    }
    d = "worst symmetry/idempotence deviation = " + std::to_string(worst);
    return worst < 1e-12 * ts;
  }});

  checks.push_back({"sweep-determinism", [](double ts, std::string& d) {
    (void)ts;
    NmseSweepSpec spec;
    spec.base.N = 4; spec.base.K = 2; spec.base.Tt = 4; spec.base.bits = 2;
    spec.base.seed = 11;
    spec.snr_db = {0.0, 10.0};
    spec.methods = {NmseMethod::BMMSE, NmseMethod::BWZF};
    spec.trials = 50;
    const std::string a = to_csv(run_nmse_sweep(spec));
    const std::string b = to_csv(run_nmse_sweep(spec));
    d = a == b ? "two runs byte-identical" : "runs differ";
    return a == b;
  }});

  return checks;
}

int cmd_verify(const std::string& only, double tol_scale) {
  std::vector<Check> checks = build_checks();
  std::cout << "verification report (tol-scale = " << tol_scale << ")\n";
  int ran = 0, failed = 0;
  for (Check& c : checks) {
    if (!only.empty() && c.name.find(only) == std::string::npos) continue;
    ++ran;
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(tol_scale, detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (!ok) ++failed;
    std::cout << (ok ? "[pass] " : "[FAIL] ") << c.name << ": " << detail << "\n";
  }
  if (ran == 0) {
    std::cerr << "no checks match --only " << only << "\n";
    return 1;
  }
  std::cout << ran - failed << "/" << ran << " checks passed\n";
  return failed == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"few-bit massive MIMO estimation/detection toolkit"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train a network and write a checkpoint");
  std::string tr_config, tr_net, tr_out_dir = ".";
  int tr_epochs = -1;
  train->add_option("--config", tr_config, "key = value config file")->required();
  train->add_option("--net", tr_net, "network kind (overrides net.kind)");
  train->add_option("--out-dir", tr_out_dir, "output directory");
  train->add_option("--epochs", tr_epochs, "override train.epochs");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo NMSE/BER sweep to CSV");
  std::string sw_metric, sw_config, sw_methods, sw_snrs, sw_csi = "perfect";
  std::string sw_ckpt_cenet, sw_ckpt_bdetnet, sw_ckpt_fbmdetnet, sw_out = "sweep.csv";
  int sw_trials = 10000, sw_ml_iters = 50, sw_vpc = 100;
  sweep->add_option("metric", sw_metric, "nmse or ber")->required();
  sweep->add_option("--config", sw_config, "system config file")->required();
  sweep->add_option("--methods", sw_methods, "comma-separated method list")->required();
  sweep->add_option("--snrs", sw_snrs, "comma-separated SNR grid in dB");
  sweep->add_option("--trials", sw_trials, "Monte-Carlo trials per point");
  sweep->add_option("--ml-iters", sw_ml_iters, "gradient-ascent iterations for the ml method");
  sweep->add_option("--vectors-per-channel", sw_vpc, "symbol vectors per channel block (ber)");
  sweep->add_option("--csi", sw_csi, "perfect or estimated (ber)");
  sweep->add_option("--ckpt-cenet", sw_ckpt_cenet, "fbm-cenet checkpoint, {snr} expands");
  sweep->add_option("--ckpt-bdetnet", sw_ckpt_bdetnet, "b-detnet checkpoint, {snr} expands");
  sweep->add_option("--ckpt-fbmdetnet", sw_ckpt_fbmdetnet, "fbm-detnet checkpoint, {snr} expands");
  sweep->add_option("--out", sw_out, "output CSV path");

  // verify
  auto* verify = app.add_subcommand("verify", "run built-in invariant checks");
  std::string vf_only;
  double vf_tol_scale = 1.0;
  verify->add_option("--only", vf_only, "run only checks whose name contains this substring");
  verify->add_option("--tol-scale", vf_tol_scale, "multiply every tolerance by this factor");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(tr_config, tr_net, tr_out_dir, tr_epochs);
    if (*sweep)
      return cmd_sweep(sw_metric, sw_config, sw_methods, sw_snrs, sw_trials, sw_ml_iters, sw_vpc,
                       sw_csi, sw_ckpt_cenet, sw_ckpt_bdetnet, sw_ckpt_fbmdetnet, sw_out);
    if (*verify) return cmd_verify(vf_only, vf_tol_scale);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
