#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "msgpass/sim_harness.hpp"
#include "test_util.hpp"

using namespace msgpass;
using testutil::check_error;

namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.snr_db = {6.0, 14.0};
  cfg.algorithms = {Algorithm::BpGa, Algorithm::BpEm};
  cfg.iterations = 2;
  cfg.max_frames = 2;
  cfg.target_errors = 1000000;
  cfg.seed = 77;
  cfg.workers = 1;
  cfg.timing = false;
  return cfg;
}

std::string csv_of(const ResultSet& r) {
  std::ostringstream os;
  write_csv(os, r);
  return os.str();
}

std::filesystem::path scratch_dir(const char* name) {
  auto p = std::filesystem::temp_directory_path() / ("msgpass_test_" + std::string(name));
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config parsing") {
  const std::string yaml = R"(
mode: coded
frame: {symbols: 120, pilots: 4, bits_per_symbol: 2, info_bits: 70}
code: {generators: ["133", "171", "165"], constraint_length: 7}
channel: {pdp: profiles/etu.pdp, subcarrier_spacing_hz: 30000}
snr_db: [1, 2.5]
algorithms: [EP, bp-mf]
iterations: 4
ep_damping: 0.7
bpga_exponent: unsquared
max_frames: 9
target_errors: 5
seed: 123
workers: 3
noise: false
timing: false
trace_frames: 2
output: out/run1
)";
  const RunConfig c = parse_run_config(yaml, "/base");
  CHECK(c.frame.total_symbols == 120);
  CHECK(c.frame.pilots == 4);
  CHECK(c.frame.bits_per_symbol == 2);
  CHECK(c.frame.code.info_bits == 70);
  CHECK(c.frame.code.generators == std::vector<unsigned>{0133, 0171, 0165});
  CHECK(c.pdp_path == std::filesystem::path("/base/profiles/etu.pdp"));
  CHECK(c.subcarrier_spacing_hz == 30000.0);
  CHECK(c.snr_db == std::vector<double>{1.0, 2.5});
  CHECK(c.algorithms == std::vector<Algorithm>{Algorithm::Ep, Algorithm::BpMf});
  CHECK(c.iterations == 4);
  CHECK(c.ep_damping == 0.7);
  CHECK(c.exponent == BpGaExponent::Unsquared);
  CHECK(c.max_frames == 9);
  CHECK(c.target_errors == 5);
  CHECK(c.seed == 123);
  CHECK(c.workers == 3);
  CHECK(!c.noise);
  CHECK(!c.timing);
  CHECK(c.trace_frames == 2);
  CHECK(c.output == std::filesystem::path("/base/out/run1"));

  const RunConfig d = parse_run_config("");
  CHECK(d.frame.total_symbols == 300);
  CHECK(d.frame.code.coded_length() == 1158);
  CHECK(d.max_frames == 1000);
  CHECK(d.target_errors == 200);

  check_error(ErrorCode::InvalidArgument, [] { parse_run_config("snr: [1]"); });
  check_error(ErrorCode::InvalidArgument, [] { parse_run_config("frame: {slots: 3}"); });
  check_error(ErrorCode::InvalidArgument, [] { parse_run_config("snr_db: []"); });
  check_error(ErrorCode::InvalidArgument, [] { parse_run_config("max_frames: 0"); });
  check_error(ErrorCode::InvalidArgument, [] { parse_run_config("target_errors: 0"); });
  check_error(ErrorCode::InvalidArgument, [] { parse_run_config("algorithms: [BP-XX]"); });
  check_error(ErrorCode::InvalidArgument, [] { parse_run_config("code: {generators: [\"19\"]}"); });
  check_error(ErrorCode::InvalidArgument, [] { parse_run_config("iterations: many"); });
  check_error(ErrorCode::InvalidArgument, [] { parse_run_config("snr_db: [1, 2"); });
  check_error(ErrorCode::Io, [] { load_run_config("/nonexistent/run.yaml"); });

  const RunConfig shipped = load_run_config(std::filesystem::path(MSGPASS_SOURCE_DIR) / "configs/default_link.yaml");
  CHECK(std::filesystem::exists(shipped.pdp_path));
  CHECK(shipped.algorithms.size() == 4);
}

TEST_CASE("seed derivation") {
  const FrameSeeds a = frame_seeds(5, 0, 3), b = frame_seeds(5, 1, 3), c = frame_seeds(5, 0, 4);
  CHECK(a.interleaver == b.interleaver);  // per frame, not per SNR
  CHECK(a.interleaver != c.interleaver);
  CHECK(a.noise != b.noise);
  CHECK(a.channel != c.channel);
  const FrameSeeds again = frame_seeds(5, 0, 3);
  CHECK(again.bits == a.bits);
  CHECK(a.pilots != a.bits);
}

TEST_CASE("confidence intervals and the analytic reference") {
  CHECK(ber_ci95(0, 1000) == doctest::Approx(0.003));
  CHECK(ber_ci95(100, 10000) == doctest::Approx(1.96 * std::sqrt(0.01 * 0.99 / 10000)));
  CHECK(qpsk_uncoded_ber(0.0) == doctest::Approx(0.5 * std::erfc(std::sqrt(0.5))).epsilon(1e-15));
  CHECK(qpsk_uncoded_ber(10.0) == doctest::Approx(7.827011290012744e-04).epsilon(1e-9));  // Q(sqrt(10))
}

TEST_CASE("runs are deterministic and independent of the worker count") {
  const RunConfig cfg = small_config();
  const ResultSet a = run_experiment(cfg), b = run_experiment(cfg);
  CHECK(csv_of(a) == csv_of(b));
  RunConfig two = cfg;
  two.workers = 2;
  CHECK(csv_of(run_experiment(two)) == csv_of(a));
  CHECK(a.size() == cfg.algorithms.size() * cfg.snr_db.size() * static_cast<std::size_t>(cfg.iterations));
  for (const auto& r : a) {
    CHECK(r.frames == 2);
    CHECK(r.bits == 760);
    CHECK(r.bit_errors <= r.bits);
    CHECK(r.seconds == 0.0);
  }
  RunConfig other = cfg;
  other.seed = 78;
  CHECK(csv_of(run_experiment(other)) != csv_of(a));
}

TEST_CASE("early stopping per algorithm") {
  RunConfig cfg = small_config();
  cfg.snr_db = {-5.0};
  cfg.max_frames = 6;
  cfg.target_errors = 50;
  for (const auto& r : run_experiment(cfg)) CHECK(r.frames == 1);
}

TEST_CASE("perfect CSI without noise makes no errors") {
  RunConfig cfg = small_config();
  cfg.algorithms = {Algorithm::PerfectCsi};
  cfg.noise = false;
  cfg.max_frames = 3;
  for (const auto& r : run_experiment(cfg)) {
    CHECK(r.bit_errors == 0);
    CHECK(r.ber == 0.0);
    CHECK(r.ci95 == doctest::Approx(3.0 / 1140.0));
  }
}

TEST_CASE("uncoded QPSK matches the Gaussian tail") {
  RunConfig cfg;
  cfg.mode = RunMode::UncodedQpsk;
  cfg.snr_db = {0.0, 4.0};
  cfg.max_frames = 300;
  cfg.target_errors = 1000000000;
  cfg.timing = false;
  const ResultSet r = run_experiment(cfg);
  REQUIRE(r.size() == 2);
  for (const auto& rec : r) {
    const double p = qpsk_uncoded_ber(rec.snr_db);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(rec.bits));
    INFO(rec.snr_db, " ", rec.ber, " ", p);
    CHECK(std::abs(rec.ber - p) < 3.0 * se);
  }
}

TEST_CASE("CSV and JSON-lines persistence") {
  CHECK(csv_of({}) == std::string(kCsvHeader) + "\n");
  std::istringstream empty(csv_of({}));
  CHECK(read_csv(empty).empty());

  ResultRecord r{"BP-MF", 12.0, 7, 250, 95000, 123, 123.0 / 95000, ber_ci95(123, 95000), 4.25};
  std::istringstream in(csv_of({r}));
  const ResultSet back = read_csv(in);
  REQUIRE(back.size() == 1);
  CHECK(back[0].algorithm == r.algorithm);
  CHECK(back[0].snr_db == r.snr_db);
  CHECK(back[0].iteration == r.iteration);
  CHECK(back[0].frames == r.frames);
  CHECK(back[0].bit_errors == r.bit_errors);
  CHECK(back[0].ber == r.ber);
  CHECK(back[0].ci95 == r.ci95);
  CHECK(back[0].seconds == r.seconds);

  std::stringstream js;
  write_jsonl(js, {r, r});
  const ResultSet jb = read_jsonl(js);
  REQUIRE(jb.size() == 2);
  CHECK(jb[1].bits == r.bits);
  CHECK(jb[1].ber == r.ber);

  std::istringstream bad_header("algo,snr\n");
  check_error(ErrorCode::Io, [&] { read_csv(bad_header); });
  std::istringstream short_row(std::string(kCsvHeader) + "\nBP-MF,1,2\n");
  check_error(ErrorCode::Io, [&] { read_csv(short_row); });
  std::istringstream bad_json("{\"algorithm\": 3}\n");
  check_error(ErrorCode::Io, [&] { read_jsonl(bad_json); });
}

TEST_CASE("summary files") {
  RunConfig cfg = small_config();
  cfg.output = scratch_dir("summary");
  cfg.trace_frames = 1;
  const ResultSet r = run_experiment(cfg);
  emit_summary(r, cfg.output);
  std::ifstream it(cfg.output / "ber_vs_iteration.csv"), snr(cfg.output / "ber_vs_snr.csv"),
      traces(cfg.output / "traces.jsonl");
  const ResultSet all = read_csv(it), last = read_csv(snr);
  CHECK(all.size() == 2 * 2 * 2);
  CHECK(last.size() == 2 * 2);
  for (const auto& rec : last) CHECK(rec.iteration == 2);
  std::size_t trace_lines = 0;
  for (std::string line; std::getline(traces, line);) ++trace_lines;
  CHECK(trace_lines == 2 * 2 * 2);  // one frame, two SNRs, two algorithms, two iterations
  std::filesystem::remove_all(cfg.output);
}
