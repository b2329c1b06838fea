#pragma once

#include "fbmimo/networks.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fbmimo {

struct SweepRow {
  double snr_db;
  std::string method;
  std::string metric;
  double value;
  long trials;
  double std_error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

/// Mean of ||h_hat - h||^2 / (K N) over matched sample sets (real-stacked
/// vectors; the stacked squared norm equals the complex Frobenius norm).
double nmse(const std::vector<Vec>& h_hat, const std::vector<Vec>& h, int K, int N);

/// Fraction of differing bits.
double ber(const std::vector<uint8_t>& bits_hat, const std::vector<uint8_t>& bits);

enum class NmseMethod { BMMSE, BWZF, ML_GRADIENT, FBM_CENET };
enum class BerMethod { BMMSE_LINEAR, B_DETNET, FBM_DETNET, EXHAUSTIVE_ML };
enum class CsiMode { PERFECT, ESTIMATED };

NmseMethod parse_nmse_method(const std::string& name);
std::string to_string(NmseMethod m);
BerMethod parse_ber_method(const std::string& name);
std::string to_string(BerMethod m);
CsiMode parse_csi_mode(const std::string& name);

struct NmseSweepSpec {
  SystemConfig base;             // rho replaced per grid point
  std::vector<double> snr_db;
  std::vector<NmseMethod> methods;
  int trials = 10000;
  int ml_iterations = 50;        // plain gradient-ascent iteration count
  /// Trained estimator per grid SNR; required when FBM_CENET is requested.
  std::function<CENetParams(double snr_db)> cenet_provider;
};

SweepResult run_nmse_sweep(const NmseSweepSpec& spec);

struct BerSweepSpec {
  SystemConfig base;
  std::vector<double> snr_db;
  std::vector<BerMethod> methods;
  CsiMode csi = CsiMode::PERFECT;
  int trials = 100000;           // symbol vectors
  int vectors_per_channel = 100; // coherence-block length of the data phase
  std::function<DetNetParams(double snr_db, NetKind kind)> detnet_provider;
  std::function<CENetParams(double snr_db)> cenet_provider;  // estimated-CSI mode
};

SweepResult run_ber_sweep(const BerSweepSpec& spec);

/// Header `snr_db,method,metric,value,trials,std_error`, %.17g floats, LF.
void export_csv(const SweepResult& result, const std::string& path);
std::string to_csv(const SweepResult& result);

}  // namespace fbmimo
