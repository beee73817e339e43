#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "msgpass/mapping.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace msgpass;
using testutil::check_error;
using testutil::cplx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double p1_from_llr(double l) { return 1.0 / (1.0 + std::exp(l)); }

// Brute-force extrinsic LLR of bit j: marginalize weights times the other
// bits' priors over all labels.
std::vector<double> enumerate_demap(const std::vector<double>& w, const Constellation& c, const std::vector<double>& prior) {
  const int L = c.bits_per_symbol();
  std::vector<double> out(static_cast<std::size_t>(L));
  for (int j = 0; j < L; ++j) {
    double p0 = 0.0, p1 = 0.0;
    for (std::size_t l = 0; l < c.size(); ++l) {
      double t = w[l];
      for (int k = 0; k < L; ++k) {
        if (k == j) continue;
        const double q1 = p1_from_llr(prior[static_cast<std::size_t>(k)]);
        t *= c.bit(l, k) ? q1 : 1.0 - q1;
      }
      (c.bit(l, j) ? p1 : p0) += t;
    }
    out[static_cast<std::size_t>(j)] = std::log(p0 / p1);
  }
  return out;
}

}  // namespace

TEST_CASE("gray 16-QAM labeling") {
  const auto c = Constellation::gray_qam16();
  CHECK(c.size() == 16);
  CHECK(c.bits_per_symbol() == 4);
  const double a = 1.0 / std::sqrt(10.0);
  CHECK(std::abs(map_bits(std::vector<std::uint8_t>{0, 0, 0, 0}, c) - cplx(a, a)) < 1e-15);
  CHECK(std::abs(map_bits(std::vector<std::uint8_t>{1, 1, 1, 1}, c) - cplx(-3 * a, -3 * a)) < 1e-15);
  std::set<std::pair<double, double>> distinct;
  double energy = 0.0;
  for (cplx s : c.points()) {
    distinct.insert({s.real(), s.imag()});
    energy += std::norm(s);
  }
  CHECK(distinct.size() == 16);
  CHECK(std::abs(energy / 16.0 - 1.0) < 1e-12);
  // Gray: nearest neighbours differ in exactly one bit.
  for (std::size_t l = 0; l < 16; ++l)
    for (std::size_t m = 0; m < 16; ++m) {
      if (std::abs(std::abs(c.point(l) - c.point(m)) - 2 * a) > 1e-12) continue;
      CHECK(__builtin_popcount(static_cast<unsigned>(l ^ m)) == 1);
    }
}

TEST_CASE("committed labeling table matches and round-trips") {
  std::ifstream in(std::string(MSGPASS_SOURCE_DIR) + "/data/qam16_gray.txt");
  REQUIRE(in);
  const auto table = read_labeling_table(in);
  const auto c = Constellation::gray_qam16();
  for (std::size_t l = 0; l < 16; ++l) CHECK(table.point(l) == c.point(l));  // bit-exact
  std::stringstream ss;
  write_labeling_table(ss, c);
  const auto back = read_labeling_table(ss);
  CHECK(back.points() == c.points());

  std::stringstream bad("00 0x1p-1 0x1p-1\n01 0x1p-1 0x1p-1\n");
  check_error(ErrorCode::Io, [&] { read_labeling_table(bad); });
}

TEST_CASE("QPSK alphabet") {
  const auto q = Constellation::qpsk();
  const double a = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(q.point(0) - cplx(a, a)) < 1e-15);
  CHECK(std::abs(q.point(1) - cplx(a, -a)) < 1e-15);
  CHECK(std::abs(q.point(2) - cplx(-a, a)) < 1e-15);
  CHECK(std::abs(q.point(3) - cplx(-a, -a)) < 1e-15);
  check_error(ErrorCode::InvalidArgument, [] { Constellation({1.0, 1.0}); });
  check_error(ErrorCode::InvalidArgument, [] { Constellation({1.0, -1.0, 2.0}); });
  check_error(ErrorCode::InvalidArgument, [] { Constellation({2.0, -2.0}); });
}

TEST_CASE("symbol extrinsic") {
  const auto c = Constellation::gray_qam16();
  const auto u = symbol_extrinsic(std::vector<double>(4, 0.5), c);
  for (std::size_t l = 0; l < 16; ++l) CHECK(u[l] == doctest::Approx(1.0 / 16).epsilon(1e-15));

  const auto point = symbol_extrinsic(std::vector<double>{1.0, 0.0, 1.0, 1.0}, c);
  for (std::size_t l = 0; l < 16; ++l) CHECK(point[l] == (l == 0b1011 ? 1.0 : 0.0));

  testutil::Draw d(20);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> p(4), llr(4);
    for (std::size_t j = 0; j < 4; ++j) {
      p[j] = d.uniform(0.01, 0.99);
      llr[j] = std::log((1.0 - p[j]) / p[j]);
    }
    std::vector<double> w(16);
    double total = 0.0;
    for (std::size_t l = 0; l < 16; ++l) {
      w[l] = 1.0;
      for (int j = 0; j < 4; ++j) w[l] *= c.bit(l, j) ? p[static_cast<std::size_t>(j)] : 1.0 - p[static_cast<std::size_t>(j)];
      total += w[l];
    }
    const auto beta = symbol_extrinsic(p, c);
    const auto beta_llr = symbol_extrinsic_llr(llr, c);
    CHECK(beta.is_normalized());
    for (std::size_t l = 0; l < 16; ++l) {
      CHECK(beta[l] == doctest::Approx(w[l] / total).epsilon(1e-12));
      CHECK(beta_llr[l] == doctest::Approx(w[l] / total).epsilon(1e-12));
    }
  }
  check_error(ErrorCode::InvalidArgument, [&] { symbol_extrinsic(std::vector<double>{0.5, 1.5, 0.5, 0.5}, c); });
  check_error(ErrorCode::LengthMismatch, [&] { symbol_extrinsic(std::vector<double>{0.5}, c); });
}

TEST_CASE("demapping") {
  const auto c = Constellation::gray_qam16();
  const std::vector<double> flat(4, 0.0);
  for (double l : bit_llrs_from_symbol_msg(std::vector<double>(16, 1.0), c, flat)) CHECK(std::abs(l) < 1e-14);

  for (std::size_t label : {0u, 6u, 13u}) {
    std::vector<double> w(16, 0.0);
    w[label] = 1.0;
    const auto llr = bit_llrs_from_symbol_msg(w, c, flat);
    for (int j = 0; j < 4; ++j) CHECK(llr[static_cast<std::size_t>(j)] == (c.bit(label, j) ? -kInf : kInf));
    // hard decisions round-trip through symbol_extrinsic
    std::vector<double> p(4);
    for (int j = 0; j < 4; ++j) p[static_cast<std::size_t>(j)] = llr[static_cast<std::size_t>(j)] < 0 ? 1.0 : 0.0;
    CHECK(symbol_extrinsic(p, c)[label] == 1.0);
  }

  testutil::Draw d(21);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> w(16), logw(16), prior(4);
    for (std::size_t l = 0; l < 16; ++l) {
      w[l] = d.uniform(0.001, 1.0);
      logw[l] = std::log(w[l]);
    }
    for (auto& p : prior) p = d.uniform(-3.0, 3.0);
    const auto want = enumerate_demap(w, c, prior);
    const auto got = bit_llrs_from_symbol_msg(w, c, prior);
    const auto got_log = demap_log(logw, c, prior);
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(std::isfinite(got[j]));
      CHECK(got[j] == doctest::Approx(want[j]).epsilon(1e-10));
      CHECK(got_log[j] == doctest::Approx(want[j]).epsilon(1e-10));
    }
  }
  check_error(ErrorCode::AllZeroLikelihood, [&] { bit_llrs_from_symbol_msg(std::vector<double>(16, 0.0), c, flat); });
  check_error(ErrorCode::AllZeroLikelihood, [&] { demap_log(std::vector<double>(16, -kInf), c, flat); });
}

TEST_CASE("likelihood variants collapse at zero channel variance") {
  const auto c = Constellation::gray_qam16();
  testutil::Draw d(22);
  for (int t = 0; t < 50; ++t) {
    const cplx y = d.normal(), mu = d.normal();
    const double gamma = d.uniform(0.5, 30.0);
    const ChannelEstimate chan{mu, 0.0};
    const auto ga = gaussian_symbol_likelihoods(y, chan, gamma, c, SymbolMessage::BpGaExtrinsic);
    const auto mf = gaussian_symbol_likelihoods(y, chan, gamma, c, SymbolMessage::MeanField);
    const auto em = gaussian_symbol_likelihoods(y, {mu, 0.7}, gamma, c, SymbolMessage::PointEstimate);
    const auto un = gaussian_symbol_log_likelihoods(y, chan, gamma, c, SymbolMessage::BpGaExtrinsic, BpGaExponent::Unsquared);
    for (std::size_t l = 0; l < 16; ++l) {
      CHECK(mf[l] == doctest::Approx(ga[l]).epsilon(1e-12));
      CHECK(em[l] == doctest::Approx(mf[l]).epsilon(1e-12));
      // unsquared exponent: weights proportional to exp(-gamma |y - mu s|)
      const double ref_l = -gamma * std::abs(y - mu * c.point(l));
      const double ref_0 = -gamma * std::abs(y - mu * c.point(0));
      CHECK(un[l] - un[0] == doctest::Approx(ref_l - ref_0).epsilon(1e-12));
    }
  }
}

TEST_CASE("likelihood variants against quadrature") {
  const auto c = Constellation::gray_qam16();
  const struct {
    cplx y, mu;
    double var, gamma;
  } cases[] = {{{0.8, 0.3}, {0.9, -0.2}, 0.3, 10.0}, {{-0.2, 1.1}, {0.1, 0.5}, 1.0, 3.0}, {{0.05, -0.4}, {1.2, 0.7}, 0.05, 20.0}};
  for (const auto& k : cases) {
    const auto ga = gaussian_symbol_likelihoods(k.y, {k.mu, k.var}, k.gamma, c, SymbolMessage::BpGaExtrinsic);
    const auto ga_ref = oracles::bpga_weights_by_quadrature(k.y, k.mu, k.var, k.gamma, c);
    const auto mf = gaussian_symbol_likelihoods(k.y, {k.mu, k.var}, k.gamma, c, SymbolMessage::MeanField);
    const auto mf_ref = oracles::mf_weights_by_quadrature(k.y, k.mu, k.var, k.gamma, c);
    for (std::size_t l = 0; l < 16; ++l) {
      CHECK(std::abs(ga[l] - ga_ref[l]) <= 1e-8 * ga_ref[l] + 1e-14);
      CHECK(std::abs(mf[l] - mf_ref[l]) <= 1e-8 * mf_ref[l] + 1e-14);
    }
  }
}

TEST_CASE("symbol pmf") {
  const auto c = Constellation::qpsk();
  const auto p = SymbolPmf::from_weights(std::vector<double>{1.0, 1.0, 0.0, 2.0});
  CHECK(p.is_normalized());
  CHECK(p[3] == 0.5);
  const cplx m = p.mean(c);
  CHECK(std::abs(m - (0.25 * c.point(0) + 0.25 * c.point(1) + 0.5 * c.point(3))) < 1e-15);
  CHECK(p.variance(c) == doctest::Approx(1.0 - std::norm(m)).epsilon(1e-14));
  CHECK(SymbolPmf::uniform(4).mean(c) == cplx{});
  check_error(ErrorCode::AllZeroLikelihood, [] { SymbolPmf::from_weights(std::vector<double>{0.0, 0.0}); });
  check_error(ErrorCode::InvalidArgument, [] { SymbolPmf::from_weights(std::vector<double>{-1.0, 2.0}); });
  const auto lw = SymbolPmf::from_log_weights(std::vector<double>{-1000.0, -1000.0 + std::log(3.0)});
  CHECK(lw[1] == doctest::Approx(0.75).epsilon(1e-14));
}
