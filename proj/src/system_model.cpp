#include "msgpass/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "msgpass/errors.hpp"
#include "msgpass/rng.hpp"

namespace msgpass {

PowerDelayProfile PowerDelayProfile::from_db(std::span<const double> delays_ns, std::span<const double> powers_db) {
  if (delays_ns.size() != powers_db.size() || delays_ns.empty())
    throw Error(ErrorCode::InvalidArgument, "profile needs matching nonempty delay and power lists");
  PowerDelayProfile pdp;
  double total = 0.0;
  for (std::size_t t = 0; t < delays_ns.size(); ++t) {
    pdp.delays_s.push_back(delays_ns[t] * 1e-9);
    pdp.powers.push_back(std::pow(10.0, powers_db[t] / 10.0));
    total += pdp.powers.back();
  }
  for (double& p : pdp.powers) p /= total;
  pdp.validate();
  return pdp;
}

PowerDelayProfile PowerDelayProfile::etu() {
  static constexpr double delays[] = {0, 50, 120, 200, 230, 500, 1600, 2300, 5000};
  static constexpr double powers[] = {-1, -1, -1, 0, 0, 0, -3, -5, -7};
  return from_db(delays, powers);
}

void PowerDelayProfile::validate() const {
  if (delays_s.empty() || delays_s.size() != powers.size())
    throw Error(ErrorCode::InvalidArgument, "profile needs matching nonempty delay and power lists");
  for (std::size_t t = 0; t < delays_s.size(); ++t) {
    if (!(delays_s[t] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tap delays must be nonnegative");
    if (t > 0 && !(delays_s[t] > delays_s[t - 1]))
      throw Error(ErrorCode::InvalidArgument, "tap delays must be strictly increasing");
    if (!(powers[t] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tap powers must be nonnegative");
  }
  const double total = std::accumulate(powers.begin(), powers.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorCode::InvalidArgument, "tap powers must sum to 1");
}

double rms_delay_spread(const PowerDelayProfile& pdp) {
  pdp.validate();
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t t = 0; t < pdp.powers.size(); ++t) {
    m1 += pdp.powers[t] * pdp.delays_s[t];
    m2 += pdp.powers[t] * pdp.delays_s[t] * pdp.delays_s[t];
  }
  return std::sqrt(std::max(0.0, m2 - m1 * m1));
}

double coherence_bandwidth(const PowerDelayProfile& pdp) { return 1.0 / (5.0 * rms_delay_spread(pdp)); }

PowerDelayProfile read_pdp(std::istream& is) {
  std::vector<double> delays, powers;
  std::string line;
  while (std::getline(is, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double d = 0.0, p = 0.0;
    if (!(ss >> d)) continue;
    if (!(ss >> p)) throw Error(ErrorCode::Io, "malformed profile line: " + line);
    delays.push_back(d);
    powers.push_back(p);
  }
  return PowerDelayProfile::from_db(delays, powers);
}

PowerDelayProfile read_pdp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open profile " + path.string());
  return read_pdp(in);
}

JointGaussian covariance_from_pdp(const PowerDelayProfile& pdp, double subcarrier_spacing_hz, std::size_t n) {
  pdp.validate();
  const auto rows = static_cast<Eigen::Index>(n);
  const auto taps = static_cast<Eigen::Index>(pdp.powers.size());
  Eigen::MatrixXcd factor(rows, taps);
  for (Eigen::Index t = 0; t < taps; ++t) {
    const double amp = std::sqrt(pdp.powers[static_cast<std::size_t>(t)]);
    const double w = -2.0 * std::numbers::pi * subcarrier_spacing_hz * pdp.delays_s[static_cast<std::size_t>(t)];
    for (Eigen::Index k = 0; k < rows; ++k) factor(k, t) = std::polar(amp, w * static_cast<double>(k));
  }
  return JointGaussian::from_factor(Eigen::VectorXcd::Zero(rows), std::move(factor));
}

std::vector<bool> FrameLayout::pilot_mask() const {
  std::vector<bool> mask(total_symbols, false);
  for (auto j : pilot_indices) mask[j] = true;
  return mask;
}

std::vector<std::size_t> pilot_positions(std::size_t total, std::size_t pilots) {
  if (pilots > total) throw Error(ErrorCode::InvalidArgument, "more pilots than symbols");
  std::vector<std::size_t> out;
  for (std::size_t k = 1; k <= pilots; ++k) {
    const std::size_t num = (2 * k - 1) * total;
    const std::size_t den = 2 * pilots;
    out.push_back((num + den - 1) / den - 1);  // ceil, then to 0-based
  }
  return out;
}

FrameLayout build_frame(const FrameParams& params, std::uint64_t pilot_seed, std::uint64_t interleaver_seed) {
  params.code.validate();
  if (params.total_symbols == 0 || params.pilots >= params.total_symbols)
    throw Error(ErrorCode::InvalidArgument, "need at least one data symbol");
  FrameLayout layout;
  layout.total_symbols = params.total_symbols;
  layout.constellation = Constellation::for_bits(params.bits_per_symbol);
  layout.code = params.code;
  layout.pilot_indices = pilot_positions(params.total_symbols, params.pilots);

  const auto mask = layout.pilot_mask();
  for (std::size_t i = 0; i < params.total_symbols; ++i)
    if (!mask[i]) layout.data_indices.push_back(i);

  const std::size_t capacity = layout.interleaved_length();
  if (capacity < params.code.coded_length())
    throw Error(ErrorCode::InvalidArgument, "codeword of " + std::to_string(params.code.coded_length()) +
                                                " bits does not fit " + std::to_string(capacity) + " data bits");
  layout.filler_bits = capacity - params.code.coded_length();

  const Constellation pilots = Constellation::qpsk();
  CounterRng rng(pilot_seed);
  for (std::size_t k = 0; k < layout.pilot_indices.size(); ++k)
    layout.pilot_symbols.push_back(pilots.point(rng.uniform_index(pilots.size())));
  layout.interleaver = Interleaver::from_seed(capacity, interleaver_seed);
  return layout;
}

ChannelRealization draw_channel(const JointGaussian& prior, std::uint64_t seed) {
  CounterRng rng(seed);
  const Eigen::MatrixXcd& u = prior.factor();
  Eigen::VectorXcd z(u.cols());
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.complex_normal();
  return {prior.mean() + u * z};
}

std::vector<cplx> transmit(std::span<const cplx> x, std::span<const cplx> h, double gamma, std::uint64_t seed) {
  if (x.size() != h.size()) throw Error(ErrorCode::LengthMismatch, "symbol and channel lengths differ");
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "noise precision must be positive");
  std::vector<cplx> y(x.size());
  CounterRng rng(seed);
  const double sigma = std::isinf(gamma) ? 0.0 : 1.0 / std::sqrt(gamma);
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = h[i] * x[i];
    if (sigma > 0.0) y[i] += sigma * rng.complex_normal();
  }
  return y;
}

Transmission make_transmission(const FrameLayout& layout, std::uint64_t seed) {
  Transmission tx;
  CounterRng rng(seed);
  tx.info_bits.resize(layout.code.info_bits);
  for (auto& b : tx.info_bits) b = rng.bit() ? 1 : 0;
  tx.codeword = encode(tx.info_bits, layout.code);
  tx.codeword.resize(tx.codeword.size() + layout.filler_bits, 0);
  const BitVector interleaved = layout.interleaver.interleave<std::uint8_t>(tx.codeword);

  const auto nbits = static_cast<std::size_t>(layout.constellation.bits_per_symbol());
  tx.symbols.assign(layout.total_symbols, cplx{});
  for (std::size_t k = 0; k < layout.pilot_indices.size(); ++k) tx.symbols[layout.pilot_indices[k]] = layout.pilot_symbols[k];
  for (std::size_t n = 0; n < layout.data_indices.size(); ++n)
    tx.symbols[layout.data_indices[n]] =
        map_bits(std::span<const std::uint8_t>(interleaved).subspan(n * nbits, nbits), layout.constellation);
  return tx;
}

}  // namespace msgpass
