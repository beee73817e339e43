#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace msgpass {

/// Feed-forward convolutional code with zero-tail termination.
///
/// Generator bits are read MSB first: the most significant of the
/// `constraint_length` bits taps the current input, the least significant
/// taps the oldest register cell. Codeword bits are emitted per trellis step
/// in generator order.
struct CodeConfig {
  std::vector<unsigned> generators{0133, 0171, 0165};
  int constraint_length = 7;
  std::size_t info_bits = 380;

  int memory() const { return constraint_length - 1; }
  std::size_t outputs() const { return generators.size(); }
  std::size_t trellis_steps() const { return info_bits + static_cast<std::size_t>(memory()); }
  std::size_t coded_length() const { return outputs() * trellis_steps(); }

  void validate() const;
};

using BitVector = std::vector<std::uint8_t>;
/// LLR convention: ln P(bit = 0) / P(bit = 1); +-inf encodes hard knowledge.
using LlrVector = std::vector<double>;

BitVector encode(std::span<const std::uint8_t> info, const CodeConfig& cfg);

/// A fixed permutation: interleave(x)[k] = x[permutation[k]].
class Interleaver {
 public:
  explicit Interleaver(std::vector<std::size_t> permutation);

  /// Fisher-Yates shuffle driven by CounterRng(seed): for k = n-1 down to 1,
  /// swap entries k and uniform_index(k + 1).
  static Interleaver from_seed(std::size_t n, std::uint64_t seed);
  static Interleaver identity(std::size_t n);

  std::size_t size() const { return permutation_.size(); }
  const std::vector<std::size_t>& permutation() const { return permutation_; }

  template <typename T>
  std::vector<T> interleave(std::span<const T> in) const {
    check(in.size());
    std::vector<T> out(in.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = in[permutation_[k]];
    return out;
  }

  template <typename T>
  std::vector<T> deinterleave(std::span<const T> in) const {
    check(in.size());
    std::vector<T> out(in.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[permutation_[k]] = in[k];
    return out;
  }

 private:
  void check(std::size_t n) const;

  std::vector<std::size_t> permutation_;
};

struct SisoOutput {
  LlrVector coded_app;  // a-posteriori LLRs of every codeword bit
  LlrVector info_app;   // a-posteriori LLRs of the K information bits
};

/// Log-domain BCJR with exact log-sum-exp. Information bits carry uniform
/// priors, tail inputs are known zeros.
SisoOutput decode_siso(std::span<const double> prior_llrs, const CodeConfig& cfg);

/// bit = 1 iff LLR < 0.
BitVector hard_decide(std::span<const double> llrs);

}  // namespace msgpass
