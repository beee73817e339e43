#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "msgpass/channel_code.hpp"
#include "msgpass/gaussian_algebra.hpp"
#include "msgpass/mapping.hpp"

namespace msgpass {

struct PowerDelayProfile {
  std::vector<double> delays_s;
  std::vector<double> powers;  // linear, sum to 1

  /// Builds a profile from nanosecond delays and dB powers, normalizing to unit sum.
  static PowerDelayProfile from_db(std::span<const double> delays_ns, std::span<const double> powers_db);
  /// 3GPP Extended Typical Urban.
  static PowerDelayProfile etu();

  void validate() const;
};

/// Power-weighted standard deviation of the tap delays, seconds.
double rms_delay_spread(const PowerDelayProfile& pdp);
/// Rule-of-thumb coherence bandwidth 1 / (5 rms delay spread), Hz.
double coherence_bandwidth(const PowerDelayProfile& pdp);

/// Text format: one tap per line, "delay_ns power_dB"; '#' starts a comment.
PowerDelayProfile read_pdp(std::istream& is);
PowerDelayProfile read_pdp(const std::filesystem::path& path);

/// WSSUS frequency correlation over `n` subcarriers: zero mean and
/// [C]_{k,l} = sum_t p_t exp(-2 pi i (k - l) spacing tau_t), with the exact
/// per-tap factor kept for the joint Gaussian.
JointGaussian covariance_from_pdp(const PowerDelayProfile& pdp, double subcarrier_spacing_hz, std::size_t n);

struct FrameParams {
  std::size_t total_symbols = 300;
  std::size_t pilots = 10;
  int bits_per_symbol = 4;
  CodeConfig code{};

  std::size_t data_symbols() const { return total_symbols - pilots; }
};

/// Everything the receiver knows about one frame apart from the
/// observations: index sets, pilot values, alphabet, code and interleaver.
struct FrameLayout {
  std::size_t total_symbols = 0;
  std::vector<std::size_t> pilot_indices;  // 0-based, ascending
  std::vector<std::size_t> data_indices;   // 0-based, ascending
  std::vector<cplx> pilot_symbols;         // aligned with pilot_indices
  Constellation constellation = Constellation::gray_qam16();
  CodeConfig code{};
  Interleaver interleaver = Interleaver::identity(0);
  std::size_t filler_bits = 0;  // known zeros appended to the codeword before interleaving

  std::size_t interleaved_length() const { return data_indices.size() * static_cast<std::size_t>(constellation.bits_per_symbol()); }
  std::vector<bool> pilot_mask() const;
};

/// Pilot k (1-based) sits at 1-based index ceil((2k - 1)(M + N) / (2M)).
std::vector<std::size_t> pilot_positions(std::size_t total, std::size_t pilots);

/// Pilot values and the interleaver come from separate sub-streams of the
/// given seeds; the interleaver is drawn only when `interleaver_seed` is used.
FrameLayout build_frame(const FrameParams& params, std::uint64_t pilot_seed, std::uint64_t interleaver_seed);

struct ChannelRealization {
  Eigen::VectorXcd h;
};

/// h = mean + U z with z ~ CN(0, I_r) drawn from CounterRng(seed).
ChannelRealization draw_channel(const JointGaussian& prior, std::uint64_t seed);

/// y = h .* x + w with w ~ CN(0, 1/gamma); gamma = +inf disables the noise.
std::vector<cplx> transmit(std::span<const cplx> x, std::span<const cplx> h, double gamma, std::uint64_t seed);

struct Transmission {
  BitVector info_bits;
  BitVector codeword;  // encoder output plus filler, before interleaving
  std::vector<cplx> symbols;  // all M + N channel symbols
};

/// Random information bits from CounterRng(seed), encoded, interleaved and mapped.
Transmission make_transmission(const FrameLayout& layout, std::uint64_t seed);

}  // namespace msgpass
