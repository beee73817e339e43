#include "msgpass/channel_code.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "msgpass/errors.hpp"
#include "msgpass/logsum.hpp"
#include "msgpass/rng.hpp"

namespace msgpass {

void CodeConfig::validate() const {
  if (constraint_length < 2 || constraint_length > 16)
    throw Error(ErrorCode::InvalidArgument, "constraint length must lie in [2, 16]");
  if (generators.empty()) throw Error(ErrorCode::InvalidArgument, "no generator polynomials");
  for (unsigned g : generators) {
    if (g == 0) throw Error(ErrorCode::InvalidArgument, "generator polynomial is zero");
    if (g >> constraint_length)
      throw Error(ErrorCode::InvalidArgument, "generator wider than the constraint length");
  }
  if (info_bits < 1) throw Error(ErrorCode::InvalidArgument, "info length must be positive");
}

namespace {

struct Trellis {
  int states;
  // next_state[s][u] and output word (bit j = output of generator j).
  std::vector<std::array<int, 2>> next;
  std::vector<std::array<unsigned, 2>> out;
};

Trellis build_trellis(const CodeConfig& cfg) {
  const int m = cfg.memory();
  Trellis t{1 << m, {}, {}};
  t.next.resize(static_cast<std::size_t>(t.states));
  t.out.resize(static_cast<std::size_t>(t.states));
  for (int s = 0; s < t.states; ++s) {
    for (int u = 0; u < 2; ++u) {
      const unsigned word = (static_cast<unsigned>(u) << m) | static_cast<unsigned>(s);
      unsigned bits = 0;
      for (std::size_t j = 0; j < cfg.outputs(); ++j)
        bits |= static_cast<unsigned>(std::popcount(word & cfg.generators[j]) & 1) << j;
      t.next[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)] = static_cast<int>(word >> 1);
      t.out[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)] = bits;
    }
  }
  return t;
}

}  // namespace

BitVector encode(std::span<const std::uint8_t> info, const CodeConfig& cfg) {
  cfg.validate();
  if (info.size() != cfg.info_bits)
    throw Error(ErrorCode::LengthMismatch, "expected " + std::to_string(cfg.info_bits) + " info bits");
  const Trellis t = build_trellis(cfg);
  BitVector out;
  out.reserve(cfg.coded_length());
  int state = 0;
  for (std::size_t k = 0; k < cfg.trellis_steps(); ++k) {
    const std::size_t u = k < info.size() ? (info[k] & 1u) : 0u;
    const unsigned bits = t.out[static_cast<std::size_t>(state)][u];
    for (std::size_t j = 0; j < cfg.outputs(); ++j) out.push_back(static_cast<std::uint8_t>((bits >> j) & 1u));
    state = t.next[static_cast<std::size_t>(state)][u];
  }
  return out;
}

Interleaver::Interleaver(std::vector<std::size_t> permutation) : permutation_(std::move(permutation)) {
  std::vector<bool> seen(permutation_.size(), false);
  for (std::size_t p : permutation_) {
    if (p >= permutation_.size() || seen[p])
      throw Error(ErrorCode::InvalidArgument, "interleaver is not a bijection");
    seen[p] = true;
  }
}

Interleaver Interleaver::from_seed(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  CounterRng rng(seed);
  for (std::size_t k = n; k-- > 1;) std::swap(perm[k], perm[rng.uniform_index(k + 1)]);
  return Interleaver(std::move(perm));
}

Interleaver Interleaver::identity(std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  return Interleaver(std::move(perm));
}

void Interleaver::check(std::size_t n) const {
  if (n != permutation_.size())
    throw Error(ErrorCode::LengthMismatch, "length " + std::to_string(n) + " does not match interleaver size " +
                                               std::to_string(permutation_.size()));
}

SisoOutput decode_siso(std::span<const double> prior_llrs, const CodeConfig& cfg) {
  cfg.validate();
  if (prior_llrs.size() != cfg.coded_length())
    throw Error(ErrorCode::LengthMismatch, "expected " + std::to_string(cfg.coded_length()) + " prior LLRs");
  const Trellis t = build_trellis(cfg);
  const std::size_t steps = cfg.trellis_steps();
  const std::size_t nout = cfg.outputs();
  const auto states = static_cast<std::size_t>(t.states);

  // Branch metric of every output word at every step.
  const std::size_t words = std::size_t{1} << nout;
  std::vector<double> metric(steps * words, 0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t w = 0; w < words; ++w) {
      double acc = 0.0;
      for (std::size_t j = 0; j < nout; ++j) acc += log_prob_bit(prior_llrs[k * nout + j], (w >> j) & 1u);
      metric[k * words + w] = acc;
    }
  }
  auto allowed = [&](std::size_t k, std::size_t u) { return k < cfg.info_bits || u == 0; };

  std::vector<double> alpha((steps + 1) * states, kNegInf);
  std::vector<double> beta((steps + 1) * states, kNegInf);
  alpha[0] = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double* a = &alpha[k * states];
    double* an = &alpha[(k + 1) * states];
    for (std::size_t s = 0; s < states; ++s) {
      if (a[s] == kNegInf) continue;
      for (std::size_t u = 0; u < 2; ++u) {
        if (!allowed(k, u)) continue;
        const auto ns = static_cast<std::size_t>(t.next[s][u]);
        an[ns] = log_add(an[ns], a[s] + metric[k * words + t.out[s][u]]);
      }
    }
  }
  beta[steps * states] = 0.0;
  for (std::size_t k = steps; k-- > 0;) {
    const double* bn = &beta[(k + 1) * states];
    double* b = &beta[k * states];
    for (std::size_t s = 0; s < states; ++s) {
      for (std::size_t u = 0; u < 2; ++u) {
        if (!allowed(k, u)) continue;
        const auto ns = static_cast<std::size_t>(t.next[s][u]);
        b[s] = log_add(b[s], bn[ns] + metric[k * words + t.out[s][u]]);
      }
    }
  }

  SisoOutput out;
  out.coded_app.assign(cfg.coded_length(), 0.0);
  out.info_app.assign(cfg.info_bits, 0.0);
  // Transitions are pooled by (input, output word) first; the bit
  // marginals then only combine 2 * words terms per step.
  std::vector<double> pooled(2 * words);
  for (std::size_t k = 0; k < steps; ++k) {
    std::fill(pooled.begin(), pooled.end(), kNegInf);
    for (std::size_t s = 0; s < states; ++s) {
      const double a = alpha[k * states + s];
      if (a == kNegInf) continue;
      for (std::size_t u = 0; u < 2; ++u) {
        if (!allowed(k, u)) continue;
        const unsigned w = t.out[s][u];
        const double v = a + metric[k * words + w] + beta[(k + 1) * states + static_cast<std::size_t>(t.next[s][u])];
        pooled[u * words + w] = log_add(pooled[u * words + w], v);
      }
    }
    double info0 = kNegInf, info1 = kNegInf;
    for (std::size_t w = 0; w < words; ++w) {
      info0 = log_add(info0, pooled[w]);
      info1 = log_add(info1, pooled[words + w]);
    }
    for (std::size_t j = 0; j < nout; ++j) {
      double c0 = kNegInf, c1 = kNegInf;
      for (std::size_t w = 0; w < words; ++w) {
        const double v = log_add(pooled[w], pooled[words + w]);
        if ((w >> j) & 1u) c1 = log_add(c1, v); else c0 = log_add(c0, v);
      }
      out.coded_app[k * nout + j] = llr_from_logs(c0, c1);
    }
    if (k < cfg.info_bits) out.info_app[k] = llr_from_logs(info0, info1);
  }
  return out;
}

BitVector hard_decide(std::span<const double> llrs) {
  BitVector out(llrs.size());
  for (std::size_t k = 0; k < llrs.size(); ++k) out[k] = llrs[k] < 0.0 ? 1 : 0;
  return out;
}

}  // namespace msgpass
