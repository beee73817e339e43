// Command-line front end: run sweeps, summarize results, run oracle self-tests.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "msgpass/errors.hpp"
#include "msgpass/sim_harness.hpp"
#include "oracles.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void print_table(const msgpass::ResultSet& results) {
  // Final iteration per (algorithm, SNR).
  std::map<std::pair<std::string, double>, msgpass::ResultRecord> last;
  for (const auto& r : results) {
    auto& slot = last[{r.algorithm, r.snr_db}];
    if (r.iteration >= slot.iteration) slot = r;
  }
  std::printf("%-11s %7s %5s %7s %10s %11s %11s %9s\n", "algorithm", "snr_db", "iter", "frames", "errors", "ber", "ci95",
              "seconds");
  for (const auto& [key, r] : last)
    std::printf("%-11s %7.2f %5d %7zu %10zu %11.4e %11.4e %9.2f\n", r.algorithm.c_str(), r.snr_db, r.iteration, r.frames,
                r.bit_errors, r.ber, r.ci95, r.seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative message-passing receivers: link-level BER simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a Monte Carlo sweep from a YAML config");
  std::string config_path, snr_list, algo_list, output_dir;
  std::uint64_t seed = 0;
  std::size_t frames = 0;
  unsigned workers = 0;
  run->add_option("config", config_path, "Run configuration (YAML)")->required()->check(CLI::ExistingFile);
  auto* snr_opt = run->add_option("--snr", snr_list, "Comma-separated SNR grid in dB");
  auto* algo_opt = run->add_option("--algos", algo_list, "Comma-separated algorithms (BP-GA,EP,BP-MF,BP-EM,PerfectCSI)");
  auto* seed_opt = run->add_option("--seed", seed, "Master seed");
  auto* frames_opt = run->add_option("--frames", frames, "Maximum frames per point");
  auto* workers_opt = run->add_option("--workers", workers, "Worker threads (default: MSGPASS_WORKERS or 1)");
  auto* out_opt = run->add_option("--output", output_dir, "Results directory");

  auto* summarize = app.add_subcommand("summarize", "Print and re-emit tables from a results directory");
  std::string results_dir;
  summarize->add_option("results", results_dir, "Directory containing results.jsonl")->required()->check(CLI::ExistingDirectory);

  auto* selftest = app.add_subcommand("selftest", "Run the oracle suites");
  std::size_t selftest_trials = 200;
  selftest->add_option("--trials", selftest_trials, "Randomized instances per oracle");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      msgpass::RunConfig cfg = msgpass::load_run_config(config_path);
      if (*snr_opt) {
        cfg.snr_db.clear();
        for (const auto& s : split_list(snr_list)) cfg.snr_db.push_back(std::stod(s));
      }
      if (*algo_opt) {
        cfg.algorithms.clear();
        for (const auto& a : split_list(algo_list)) cfg.algorithms.push_back(msgpass::parse_algorithm(a));
      }
      if (*seed_opt) cfg.seed = seed;
      if (*frames_opt) cfg.max_frames = frames;
      if (*workers_opt) cfg.workers = workers;
      if (*out_opt) cfg.output = output_dir;
      cfg.validate();
      const auto results = msgpass::run_experiment(cfg, [](const std::string& line) { std::cerr << line << '\n'; });
      msgpass::emit_summary(results, cfg.output);
      print_table(results);
      std::cerr << "wrote " << cfg.output.string() << "/{ber_vs_snr.csv,ber_vs_iteration.csv,results.jsonl}\n";
    } else if (*summarize) {
      std::ifstream in(std::filesystem::path(results_dir) / "results.jsonl");
      if (!in) throw msgpass::Error(msgpass::ErrorCode::Io, "no results.jsonl in " + results_dir);
      const auto results = msgpass::read_jsonl(in);
      msgpass::emit_summary(results, results_dir);
      print_table(results);
    } else if (*selftest) {
      return msgpass::oracles::run_selftest(std::cout, selftest_trials) ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
