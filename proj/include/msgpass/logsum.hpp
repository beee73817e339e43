#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace msgpass {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// ln(e^a + e^b), exact (the "max*" operator), safe for -inf operands.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

/// ln(1 + e^x) without overflow.
inline double softplus(double x) {
  if (x == std::numeric_limits<double>::infinity()) return x;
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

/// ln P(bit) given LLR = ln P(0)/P(1).
inline double log_prob_bit(double llr, unsigned bit) { return bit ? -softplus(llr) : -softplus(-llr); }

/// ln(e^log0 / e^log1) with the convention that two impossible outcomes give 0.
inline double llr_from_logs(double log0, double log1) {
  if (log0 == kNegInf && log1 == kNegInf) return 0.0;
  return log0 - log1;
}

}  // namespace msgpass
