#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "msgpass/receiver.hpp"
#include "msgpass/system_model.hpp"

namespace msgpass {

enum class RunMode {
  Coded,        // full chain with the configured receivers
  UncodedQpsk,  // QPSK over a known unit channel, hard decisions; no pilots, no code
};

struct RunConfig {
  FrameParams frame{};
  std::filesystem::path pdp_path;  // empty: built-in ETU profile
  double subcarrier_spacing_hz = 15e3;
  std::vector<double> snr_db{8.0, 10.0, 12.0};
  std::vector<Algorithm> algorithms{Algorithm::BpGa, Algorithm::Ep, Algorithm::BpMf, Algorithm::BpEm,
                                    Algorithm::PerfectCsi};
  int iterations = 15;
  double ep_damping = 0.5;
  BpGaExponent exponent = BpGaExponent::Squared;
  std::size_t max_frames = 1000;
  std::size_t target_errors = 200;
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0: MSGPASS_WORKERS or 1
  std::filesystem::path output = "results";
  RunMode mode = RunMode::Coded;
  bool noise = true;
  bool timing = true;  // false writes 0 seconds so outputs are bit-stable
  std::size_t trace_frames = 0;

  void validate() const;
};

/// YAML schema documented in README.md; relative paths resolve against `base_dir`.
RunConfig parse_run_config(const std::string& yaml_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

unsigned default_worker_count();

struct FrameSeeds {
  std::uint64_t interleaver;
  std::uint64_t pilots;
  std::uint64_t bits;
  std::uint64_t channel;
  std::uint64_t noise;
};

/// The interleaver depends on (master, frame) only; every other stream also
/// on the SNR index.
FrameSeeds frame_seeds(std::uint64_t master, std::size_t snr_index, std::size_t frame_index);

struct ResultRecord {
  std::string algorithm;
  double snr_db = 0.0;
  int iteration = 0;
  std::size_t frames = 0;
  std::size_t bits = 0;
  std::size_t bit_errors = 0;
  double ber = 0.0;
  double ci95 = 0.0;
  double seconds = 0.0;
};

using ResultSet = std::vector<ResultRecord>;

/// Normal-approximation 95% half-width; with zero errors the rule-of-three
/// bound 3 / bits.
double ber_ci95(std::size_t errors, std::size_t bits);

/// Bit error rate of uncoded unit-energy QPSK on a known unit channel: Q(sqrt(gamma)).
double qpsk_uncoded_ber(double snr_db);

using ProgressFn = std::function<void(const std::string&)>;

/// Monte Carlo sweep over SNR and algorithms. Every algorithm sees the same
/// frames; each (algorithm, SNR) stops after target_errors final-iteration
/// info-bit errors or max_frames frames. Frames are processed in batches of
/// `workers` frames.
ResultSet run_experiment(const RunConfig& cfg, const ProgressFn& progress = {});

inline constexpr const char* kCsvHeader = "algorithm,snr_db,iteration,frames,bit_errors,ber,ci95,seconds";

void write_csv(std::ostream& os, const ResultSet& results);
ResultSet read_csv(std::istream& is);
void write_jsonl(std::ostream& os, const ResultSet& results);
ResultSet read_jsonl(std::istream& is);

/// Writes ber_vs_iteration.csv (all rows), ber_vs_snr.csv (last iteration
/// per algorithm and SNR) and results.jsonl into `dir`.
void emit_summary(const ResultSet& results, const std::filesystem::path& dir);

}  // namespace msgpass
