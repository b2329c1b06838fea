#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbmimo {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

enum class ConstellationKind { QPSK, QAM16 };

ConstellationKind parse_constellation(const std::string& name);
std::string to_string(ConstellationKind kind);

/// System dimensions and operating point. N0 is derived from rho so that
/// rho * N0 == 1 holds exactly as stored.
struct SystemConfig {
  int N = 32;           // base-station antennas
  int K = 4;            // single-antenna users
  int Tt = 20;          // pilot length
  int bits = 2;         // ADC resolution b
  double rho = 1.0;     // SNR, linear
  ConstellationKind constellation = ConstellationKind::QPSK;
  std::uint64_t seed = 1;

  double noise_power() const { return 1.0 / rho; }

  void validate() const {
    if (N < 1 || K < 1 || K > N) throw std::invalid_argument("SystemConfig: require 1 <= K <= N");
    if (Tt < K) throw std::invalid_argument("SystemConfig: require Tt >= K");
    if (bits < 1 || bits > 4) throw std::invalid_argument("SystemConfig: bits must be 1..4");
    if (rho <= 0.0) throw std::invalid_argument("SystemConfig: rho must be > 0");
  }
};

inline double snr_db_to_rho(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

/// Deterministic stream RNG. Substreams are derived from (seed, stream id)
/// through splitmix64 so parallel Monte-Carlo partitions stay reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  static Rng substream(std::uint64_t seed, std::uint64_t stream);

  double uniform();             // (0, 1]
  double gaussian();            // N(0, 1), Box-Muller
  std::uint64_t next_u64();
  int uniform_int(int n);       // 0..n-1

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// --- complex <-> real stacking -------------------------------------------

/// [[Re M, -Im M], [Im M, Re M]]
Mat complex_to_real_stack(const CMat& m);
/// [Re v; Im v]
Vec complex_to_real_stack(const CVec& v);
CMat real_to_complex_stack(const Mat& s);
CVec real_to_complex_stack_vec(const Vec& s);

// --- pilots ----------------------------------------------------------------

struct PilotSet {
  CMat Xt;      // K x Tt
  CMat Pbar;    // (N*Tt) x (N*K), Xt^T kron I_N
  Mat P;        // real stacking of Pbar, 2NTt x 2NK
  double per_symbol_power = 1.0;
};

/// Row k of the pilot matrix is DFT column k+1 (0-indexed) of the Tt-point
/// DFT matrix; all entries have unit modulus.
CMat dft_pilot_matrix(int K, int Tt);
PilotSet build_dft_pilot(const SystemConfig& cfg);
PilotSet expand_pilot(const CMat& Xt, int N);

// --- sampling ---------------------------------------------------------------

/// N x K, entries i.i.d. CN(0,1).
CMat sample_channel(const SystemConfig& cfg, Rng& rng);
CMat sample_noise(int rows, int cols, double N0, Rng& rng);

// --- constellations ----------------------------------------------------------

/// Per-real-dimension levels with Gray bit labelling; symbols have unit
/// average power by construction.
struct Constellation {
  ConstellationKind kind;
  int bits_per_dim;                 // 1 for QPSK, 2 for 16QAM
  std::vector<double> levels;       // indexed by Gray label value
  double level_for_bits(unsigned label) const { return levels[label]; }
  unsigned bits_for_level(double x) const;   // nearest level, lower on ties
  double project_nearest(double x) const;
  int order() const { return 1 << (2 * bits_per_dim); }   // complex alphabet size
  std::vector<cplx> complex_points() const;
};

Constellation make_constellation(ConstellationKind kind);

struct SymbolDraw {
  CMat symbols;                 // K x count
  std::vector<uint8_t> bits;    // Gray bits, per symbol: dim-major (Re bits then Im bits)
};

SymbolDraw sample_symbols(const SystemConfig& cfg, int count, Rng& rng);

/// Nearest constellation level per real dimension of the stacked vector;
/// midpoint ties resolve to the lower level.
void hard_decision(const Vec& x_stacked, const Constellation& cons,
                   Vec& symbols_out, std::vector<uint8_t>& bits_out);

}  // namespace fbmimo
