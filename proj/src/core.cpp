#include "fbmimo/core.hpp"

#include <algorithm>
#include <cmath>

namespace fbmimo {

ConstellationKind parse_constellation(const std::string& name) {
  if (name == "qpsk" || name == "QPSK") return ConstellationKind::QPSK;
  if (name == "16qam" || name == "QAM16" || name == "qam16") return ConstellationKind::QAM16;
  throw std::invalid_argument("unknown constellation: " + name);
}

std::string to_string(ConstellationKind kind) {
  return kind == ConstellationKind::QPSK ? "qpsk" : "16qam";
}

// --- Rng ---------------------------------------------------------------------

namespace {
std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

Rng::Rng(std::uint64_t seed) : state_(seed) {
  // warm up so nearby seeds decorrelate
  next_u64();
  next_u64();
}

Rng Rng::substream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  std::uint64_t t = a ^ (0xd1b54a32d192ed03ULL * (stream + 1));
  return Rng(t);
}

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
  // 53-bit mantissa, in (0, 1]
  return static_cast<double>((next_u64() >> 11) + 1) * (1.0 / 9007199254740992.0);
}

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

int Rng::uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

// --- stacking ----------------------------------------------------------------

Mat complex_to_real_stack(const CMat& m) {
  const Eigen::Index r = m.rows(), c = m.cols();
  Mat s(2 * r, 2 * c);
  s.topLeftCorner(r, c) = m.real();
  s.topRightCorner(r, c) = -m.imag();
  s.bottomLeftCorner(r, c) = m.imag();
  s.bottomRightCorner(r, c) = m.real();
  return s;
}

Vec complex_to_real_stack(const CVec& v) {
  const Eigen::Index n = v.size();
  Vec s(2 * n);
  s.head(n) = v.real();
  s.tail(n) = v.imag();
  return s;
}

CMat real_to_complex_stack(const Mat& s) {
  const Eigen::Index r = s.rows() / 2, c = s.cols() / 2;
  return s.topLeftCorner(r, c) + cplx(0, 1) * s.bottomLeftCorner(r, c);
}

CVec real_to_complex_stack_vec(const Vec& s) {
  const Eigen::Index n = s.size() / 2;
  return s.head(n) + cplx(0, 1) * s.tail(n);
}

// --- pilots --------------------------------------------------------------------

CMat dft_pilot_matrix(int K, int Tt) {
  if (K + 1 > Tt) throw std::invalid_argument("dft_pilot_matrix: require K+1 <= Tt");
  CMat Xt(K, Tt);
  for (int k = 0; k < K; ++k) {
    for (int t = 0; t < Tt; ++t) {
      double ang = -2.0 * M_PI * static_cast<double>(t) * static_cast<double>(k + 1) / Tt;
      Xt(k, t) = cplx(std::cos(ang), std::sin(ang));
    }
  }
  return Xt;
}

PilotSet build_dft_pilot(const SystemConfig& cfg) {
  cfg.validate();
  return expand_pilot(dft_pilot_matrix(cfg.K, cfg.Tt), cfg.N);
}

PilotSet expand_pilot(const CMat& Xt, int N) {
  const int K = static_cast<int>(Xt.rows());
  const int Tt = static_cast<int>(Xt.cols());
  PilotSet ps;
  ps.Xt = Xt;
  ps.Pbar = CMat::Zero(static_cast<Eigen::Index>(N) * Tt, static_cast<Eigen::Index>(N) * K);
  for (int t = 0; t < Tt; ++t)
    for (int k = 0; k < K; ++k)
      for (int n = 0; n < N; ++n)
        ps.Pbar(static_cast<Eigen::Index>(t) * N + n, static_cast<Eigen::Index>(k) * N + n) = Xt(k, t);
  ps.P = complex_to_real_stack(ps.Pbar);
  ps.per_symbol_power = Xt.cwiseAbs2().mean();
  return ps;
}

// --- sampling --------------------------------------------------------------------

CMat sample_channel(const SystemConfig& cfg, Rng& rng) {
  CMat H(cfg.N, cfg.K);
  const double s = 1.0 / std::sqrt(2.0);
  for (Eigen::Index j = 0; j < H.cols(); ++j)
    for (Eigen::Index i = 0; i < H.rows(); ++i)
      H(i, j) = cplx(rng.gaussian() * s, rng.gaussian() * s);
  return H;
}

CMat sample_noise(int rows, int cols, double N0, Rng& rng) {
  CMat Z(rows, cols);
  const double s = std::sqrt(N0 / 2.0);
  for (Eigen::Index j = 0; j < Z.cols(); ++j)
    for (Eigen::Index i = 0; i < Z.rows(); ++i)
      Z(i, j) = cplx(rng.gaussian() * s, rng.gaussian() * s);
  return Z;
}

// --- constellations -----------------------------------------------------------------

Constellation make_constellation(ConstellationKind kind) {
  Constellation c;
  c.kind = kind;
  if (kind == ConstellationKind::QPSK) {
    c.bits_per_dim = 1;
    const double a = 1.0 / std::sqrt(2.0);
    c.levels = {-a, a};  // bit 0 -> -a, bit 1 -> +a
  } else {
    c.bits_per_dim = 2;
    const double a = 1.0 / std::sqrt(10.0);
    // Gray labels: 00 -> -3a, 01 -> -a, 11 -> +a, 10 -> +3a
    c.levels.assign(4, 0.0);
    c.levels[0b00] = -3 * a;
    c.levels[0b01] = -a;
    c.levels[0b11] = a;
    c.levels[0b10] = 3 * a;
  }
  return c;
}

double Constellation::project_nearest(double x) const {
  double best = levels[0];
  double bd = std::abs(x - levels[0]);
  for (double v : levels) {
    double d = std::abs(x - v);
    if (d < bd - 1e-15 || (std::abs(d - bd) <= 1e-15 && v < best)) {
      bd = d;
      best = v;
    }
  }
  return best;
}

unsigned Constellation::bits_for_level(double x) const {
  double p = project_nearest(x);
  for (unsigned lbl = 0; lbl < levels.size(); ++lbl)
    if (levels[lbl] == p) return lbl;
  return 0;  // unreachable
}

std::vector<cplx> Constellation::complex_points() const {
  std::vector<cplx> pts;
  for (double re : levels)
    for (double im : levels) pts.emplace_back(re, im);
  std::sort(pts.begin(), pts.end(), [](const cplx& a, const cplx& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return pts;
}

SymbolDraw sample_symbols(const SystemConfig& cfg, int count, Rng& rng) {
  Constellation c = make_constellation(cfg.constellation);
  SymbolDraw d;
  d.symbols.resize(cfg.K, count);
  d.bits.reserve(static_cast<size_t>(cfg.K) * count * 2 * c.bits_per_dim);
  const unsigned nlab = static_cast<unsigned>(c.levels.size());
  for (int j = 0; j < count; ++j) {
    for (int k = 0; k < cfg.K; ++k) {
      unsigned lre = static_cast<unsigned>(rng.uniform_int(static_cast<int>(nlab)));
      unsigned lim = static_cast<unsigned>(rng.uniform_int(static_cast<int>(nlab)));
      d.symbols(k, j) = cplx(c.levels[lre], c.levels[lim]);
      for (int b = c.bits_per_dim - 1; b >= 0; --b) d.bits.push_back((lre >> b) & 1u);
      for (int b = c.bits_per_dim - 1; b >= 0; --b) d.bits.push_back((lim >> b) & 1u);
    }
  }
  return d;
}

void hard_decision(const Vec& x_stacked, const Constellation& cons,
                   Vec& symbols_out, std::vector<uint8_t>& bits_out) {
  symbols_out.resize(x_stacked.size());
  bits_out.clear();
  const Eigen::Index K = x_stacked.size() / 2;
  // bits emitted symbol-major (Re bits then Im bits), matching sample_symbols
  for (Eigen::Index k = 0; k < K; ++k) {
    for (int half = 0; half < 2; ++half) {
      Eigen::Index i = k + half * K;
      double p = cons.project_nearest(x_stacked(i));
      symbols_out(i) = p;
      unsigned lbl = cons.bits_for_level(x_stacked(i));
      for (int b = cons.bits_per_dim - 1; b >= 0; --b) bits_out.push_back((lbl >> b) & 1u);
    }
  }
}

}  // namespace fbmimo
