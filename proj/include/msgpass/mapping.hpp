#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace msgpass {

using cplx = std::complex<double>;

/// A unit-energy alphabet of 2^L points addressed by label. Label bits are
/// read MSB first: bit j of label l is (l >> (L - 1 - j)) & 1.
class Constellation {
 public:
  explicit Constellation(std::vector<cplx> points_by_label);

  /// LTE-style Gray 16-QAM: I = (1-2b0)(1+2b2), Q = (1-2b1)(1+2b3), scaled by 1/sqrt(10).
  static Constellation gray_qam16();
  /// (1-2b0 + i(1-2b1)) / sqrt(2).
  static Constellation qpsk();
  static Constellation for_bits(int bits_per_symbol);

  int bits_per_symbol() const { return bits_; }
  std::size_t size() const { return points_.size(); }
  const std::vector<cplx>& points() const { return points_; }
  cplx point(std::size_t label) const { return points_[label]; }
  unsigned bit(std::size_t label, int j) const {
    return static_cast<unsigned>((label >> (bits_ - 1 - j)) & 1u);
  }

 private:
  std::vector<cplx> points_;
  int bits_ = 0;
};

/// Labeling table, one line per label: "<bits> <re> <im>" with the
/// coordinates written as C99 hexadecimal floats. Lines starting with '#'
/// are comments.
void write_labeling_table(std::ostream& os, const Constellation& c);
Constellation read_labeling_table(std::istream& is);

/// Normalized weights over the points of a constellation.
class SymbolPmf {
 public:
  SymbolPmf() = default;
  /// Normalizes nonnegative weights; throws AllZeroLikelihood if they sum to 0.
  static SymbolPmf from_weights(std::span<const double> weights);
  /// Normalizes log-weights (max-subtracted before exponentiation).
  static SymbolPmf from_log_weights(std::span<const double> log_weights);
  static SymbolPmf uniform(std::size_t n);

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t k) const { return p_[k]; }
  const std::vector<double>& weights() const { return p_; }
  bool is_normalized(double tol = 1e-12) const;

  cplx mean(const Constellation& c) const;
  double variance(const Constellation& c) const;

 private:
  std::vector<double> p_;
};

cplx map_bits(std::span<const std::uint8_t> bits, const Constellation& c);

/// beta(s) from per-bit probabilities P(bit = 1).
SymbolPmf symbol_extrinsic(std::span<const double> prob_one, const Constellation& c);
/// Same, from per-bit LLRs (ln P(0)/P(1)).
SymbolPmf symbol_extrinsic_llr(std::span<const double> llrs, const Constellation& c);

/// Extrinsic bit LLRs from per-symbol log-likelihoods and the other bits'
/// prior LLRs (sum-product demapping). Throws AllZeroLikelihood when every
/// log-likelihood is -inf.
std::vector<double> demap_log(std::span<const double> log_likelihoods, const Constellation& c,
                              std::span<const double> prior_llrs);
/// demap_log on linear weights.
std::vector<double> bit_llrs_from_symbol_msg(std::span<const double> weights, const Constellation& c,
                                             std::span<const double> prior_llrs);

enum class SymbolMessage {
  BpGaExtrinsic,  // integral of the observation factor against CN(h; mean, var)
  MeanField,      // exp of the expected log observation factor under CN(h; mean, var)
  PointEstimate,  // observation factor at h = mean
};

/// Exponent of the BP-GA symbol message: the Gaussian marginal gives a
/// squared distance; the unsquared form is kept for comparison.
enum class BpGaExponent { Squared, Unsquared };

struct ChannelEstimate {
  cplx mean;
  double variance = 0.0;
};

/// Per-point log-likelihoods, shifted so the largest is 0.
std::vector<double> gaussian_symbol_log_likelihoods(cplx y, ChannelEstimate chan, double gamma,
                                                    const Constellation& c, SymbolMessage variant,
                                                    BpGaExponent exponent = BpGaExponent::Squared);

SymbolPmf gaussian_symbol_likelihoods(cplx y, ChannelEstimate chan, double gamma, const Constellation& c,
                                      SymbolMessage variant, BpGaExponent exponent = BpGaExponent::Squared);

}  // namespace msgpass
