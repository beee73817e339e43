#include "msgpass/mapping.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "msgpass/errors.hpp"
#include "msgpass/logsum.hpp"

namespace msgpass {

Constellation::Constellation(std::vector<cplx> points_by_label) : points_(std::move(points_by_label)) {
  const std::size_t n = points_.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw Error(ErrorCode::InvalidArgument, "constellation size must be a power of two");
  bits_ = std::countr_zero(n);
  double energy = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    if (!std::isfinite(points_[a].real()) || !std::isfinite(points_[a].imag()))
      throw Error(ErrorCode::InvalidArgument, "constellation point not finite");
    energy += std::norm(points_[a]);
    for (std::size_t b = 0; b < a; ++b)
      if (points_[a] == points_[b]) throw Error(ErrorCode::InvalidArgument, "labeling is not bijective");
  }
  if (std::abs(energy / static_cast<double>(n) - 1.0) > 1e-12)
    throw Error(ErrorCode::InvalidArgument, "constellation must have unit average energy");
}

Constellation Constellation::gray_qam16() {
  const double scale = 1.0 / std::sqrt(10.0);
  std::vector<cplx> pts(16);
  for (unsigned l = 0; l < 16; ++l) {
    const unsigned b0 = (l >> 3) & 1u, b1 = (l >> 2) & 1u, b2 = (l >> 1) & 1u, b3 = l & 1u;
    const double i = (1.0 - 2.0 * b0) * (1.0 + 2.0 * b2);
    const double q = (1.0 - 2.0 * b1) * (1.0 + 2.0 * b3);
    pts[l] = cplx(i * scale, q * scale);
  }
  return Constellation(std::move(pts));
}

Constellation Constellation::qpsk() {
  const double scale = 1.0 / std::sqrt(2.0);
  std::vector<cplx> pts(4);
  for (unsigned l = 0; l < 4; ++l) {
    const unsigned b0 = (l >> 1) & 1u, b1 = l & 1u;
    pts[l] = cplx((1.0 - 2.0 * b0) * scale, (1.0 - 2.0 * b1) * scale);
  }
  return Constellation(std::move(pts));
}

Constellation Constellation::for_bits(int bits_per_symbol) {
  switch (bits_per_symbol) {
    case 2: return qpsk();
    case 4: return gray_qam16();
    default:
      throw Error(ErrorCode::InvalidArgument,
                  "no built-in constellation for L = " + std::to_string(bits_per_symbol));
  }
}

void write_labeling_table(std::ostream& os, const Constellation& c) {
  os << "# label(bits MSB first) real imag (hexadecimal floating point)\n";
  char buf[128];
  for (std::size_t l = 0; l < c.size(); ++l) {
    std::string bits;
    for (int j = 0; j < c.bits_per_symbol(); ++j) bits.push_back(c.bit(l, j) ? '1' : '0');
    std::snprintf(buf, sizeof buf, "%s %a %a\n", bits.c_str(), c.point(l).real(), c.point(l).imag());
    os << buf;
  }
}

Constellation read_labeling_table(std::istream& is) {
  std::vector<std::pair<std::size_t, cplx>> rows;
  std::string line;
  std::size_t width = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ss(line);
    std::string bits, re, im;
    if (!(ss >> bits >> re >> im)) throw Error(ErrorCode::Io, "malformed labeling line: " + line);
    if (width == 0) width = bits.size();
    if (bits.size() != width || bits.find_first_not_of("01") != std::string::npos)
      throw Error(ErrorCode::Io, "bad label: " + bits);
    rows.emplace_back(std::stoul(bits, nullptr, 2), cplx(std::strtod(re.c_str(), nullptr), std::strtod(im.c_str(), nullptr)));
  }
  if (rows.size() != (std::size_t{1} << width)) throw Error(ErrorCode::Io, "labeling table incomplete");
  std::vector<cplx> pts(rows.size());
  std::vector<bool> seen(rows.size(), false);
  for (const auto& [label, p] : rows) {
    if (seen[label]) throw Error(ErrorCode::Io, "duplicate label in table");
    seen[label] = true;
    pts[label] = p;
  }
  return Constellation(std::move(pts));
}

SymbolPmf SymbolPmf::from_weights(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::AllZeroLikelihood, "all symbol weights are zero");
  SymbolPmf out;
  out.p_.resize(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) out.p_[k] = weights[k] / total;
  return out;
}

SymbolPmf SymbolPmf::from_log_weights(std::span<const double> log_weights) {
  const double hi = log_weights.empty() ? kNegInf : *std::max_element(log_weights.begin(), log_weights.end());
  if (hi == kNegInf || std::isnan(hi)) throw Error(ErrorCode::AllZeroLikelihood, "all symbol weights are zero");
  std::vector<double> w(log_weights.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(log_weights[k] - hi);
  return from_weights(w);
}

SymbolPmf SymbolPmf::uniform(std::size_t n) {
  SymbolPmf out;
  out.p_.assign(n, 1.0 / static_cast<double>(n));
  return out;
}

bool SymbolPmf::is_normalized(double tol) const {
  double total = 0.0;
  for (double w : p_) {
    if (!(w >= 0.0)) return false;
    total += w;
  }
  return std::abs(total - 1.0) <= tol;
}

cplx SymbolPmf::mean(const Constellation& c) const {
  cplx m{};
  for (std::size_t k = 0; k < p_.size(); ++k) m += p_[k] * c.point(k);
  return m;
}

double SymbolPmf::variance(const Constellation& c) const {
  const cplx m = mean(c);
  double v = 0.0;
  for (std::size_t k = 0; k < p_.size(); ++k) v += p_[k] * std::norm(c.point(k) - m);
  return v;
}

cplx map_bits(std::span<const std::uint8_t> bits, const Constellation& c) {
  if (bits.size() != static_cast<std::size_t>(c.bits_per_symbol()))
    throw Error(ErrorCode::LengthMismatch, "bit pattern width differs from bits per symbol");
  std::size_t label = 0;
  for (auto b : bits) label = (label << 1) | (b & 1u);
  return c.point(label);
}

SymbolPmf symbol_extrinsic_llr(std::span<const double> llrs, const Constellation& c) {
  const int nbits = c.bits_per_symbol();
  if (llrs.size() != static_cast<std::size_t>(nbits))
    throw Error(ErrorCode::LengthMismatch, "one LLR per label bit required");
  std::vector<double> logw(c.size(), 0.0);
  for (std::size_t l = 0; l < c.size(); ++l)
    for (int j = 0; j < nbits; ++j) logw[l] += log_prob_bit(llrs[static_cast<std::size_t>(j)], c.bit(l, j));
  return SymbolPmf::from_log_weights(logw);
}

SymbolPmf symbol_extrinsic(std::span<const double> prob_one, const Constellation& c) {
  std::vector<double> llrs(prob_one.size());
  for (std::size_t j = 0; j < llrs.size(); ++j) {
    const double p = prob_one[j];
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "bit probability outside [0, 1]");
    llrs[j] = std::log1p(-p) - std::log(p);
  }
  return symbol_extrinsic_llr(llrs, c);
}

std::vector<double> demap_log(std::span<const double> log_likelihoods, const Constellation& c,
                              std::span<const double> prior_llrs) {
  const int nbits = c.bits_per_symbol();
  if (log_likelihoods.size() != c.size()) throw Error(ErrorCode::LengthMismatch, "one likelihood per point required");
  if (prior_llrs.size() != static_cast<std::size_t>(nbits))
    throw Error(ErrorCode::LengthMismatch, "one prior LLR per label bit required");
  if (std::all_of(log_likelihoods.begin(), log_likelihoods.end(), [](double v) { return v == kNegInf; }))
    throw Error(ErrorCode::AllZeroLikelihood, "symbol likelihood vanishes everywhere");

  std::vector<double> out(static_cast<std::size_t>(nbits));
  for (int j = 0; j < nbits; ++j) {
    double acc0 = kNegInf, acc1 = kNegInf;
    for (std::size_t l = 0; l < c.size(); ++l) {
      double v = log_likelihoods[l];
      if (v == kNegInf) continue;
      for (int k = 0; k < nbits; ++k)
        if (k != j) v += log_prob_bit(prior_llrs[static_cast<std::size_t>(k)], c.bit(l, k));
      if (c.bit(l, j)) acc1 = log_add(acc1, v); else acc0 = log_add(acc0, v);
    }
    out[static_cast<std::size_t>(j)] = llr_from_logs(acc0, acc1);
  }
  return out;
}

std::vector<double> bit_llrs_from_symbol_msg(std::span<const double> weights, const Constellation& c,
                                             std::span<const double> prior_llrs) {
  std::vector<double> logw(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!(weights[k] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "weights must be nonnegative");
    logw[k] = std::log(weights[k]);
  }
  return demap_log(logw, c, prior_llrs);
}

std::vector<double> gaussian_symbol_log_likelihoods(cplx y, ChannelEstimate chan, double gamma,
                                                    const Constellation& c, SymbolMessage variant,
                                                    BpGaExponent exponent) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::InvalidArgument, "noise precision must be positive");
  if (!(chan.variance >= 0.0)) throw Error(ErrorCode::InvalidArgument, "channel variance must be nonnegative");
  std::vector<double> out(c.size());
  switch (variant) {
    case SymbolMessage::BpGaExtrinsic: {
      for (std::size_t l = 0; l < c.size(); ++l) {
        const cplx s = c.point(l);
        const double v = 1.0 / gamma + chan.variance * std::norm(s);
        const double dist = exponent == BpGaExponent::Squared ? std::norm(y - chan.mean * s) : std::abs(y - chan.mean * s);
        out[l] = -std::log(v) - dist / v;
      }
      break;
    }
    case SymbolMessage::MeanField:
    case SymbolMessage::PointEstimate: {
      const double var = variant == SymbolMessage::MeanField ? chan.variance : 0.0;
      const double energy = var + std::norm(chan.mean);
      if (energy == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        break;
      }
      const cplx centre = y * std::conj(chan.mean) / energy;
      const double precision = gamma * energy;
      for (std::size_t l = 0; l < c.size(); ++l) out[l] = -precision * std::norm(c.point(l) - centre);
      break;
    }
  }
  const double hi = *std::max_element(out.begin(), out.end());
  for (double& v : out) v -= hi;
  return out;
}

SymbolPmf gaussian_symbol_likelihoods(cplx y, ChannelEstimate chan, double gamma, const Constellation& c,
                                      SymbolMessage variant, BpGaExponent exponent) {
  return SymbolPmf::from_log_weights(gaussian_symbol_log_likelihoods(y, chan, gamma, c, variant, exponent));
}

}  // namespace msgpass
