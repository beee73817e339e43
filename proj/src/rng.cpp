#include "msgpass/rng.hpp"

#include <cmath>
#include <numbers>

namespace msgpass {

std::uint64_t CounterRng::uniform_index(std::uint64_t n) noexcept {
  // 2^64 mod n computed as (-n) mod n in unsigned arithmetic.
  const std::uint64_t reject_below = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = next();
    if (x >= reject_below) return x % n;
  }
}

std::complex<double> CounterRng::complex_normal() noexcept {
  // u1 in (0, 1] so the log is finite.
  const double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-std::log(u1));  // sqrt(-2 ln u1) / sqrt(2)
  const double phase = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(phase), r * std::sin(phase)};
}

}  // namespace msgpass
