#include "msgpass/sim_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <exception>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <yaml-cpp/yaml.h>

#include "json.hpp"
#include "msgpass/errors.hpp"
#include "msgpass/rng.hpp"

namespace msgpass {

void RunConfig::validate() const {
  if (snr_db.empty()) throw Error(ErrorCode::InvalidArgument, "SNR grid is empty");
  if (max_frames < 1) throw Error(ErrorCode::InvalidArgument, "max_frames must be at least 1");
  if (target_errors < 1) throw Error(ErrorCode::InvalidArgument, "target_errors must be at least 1");
  if (iterations < 1) throw Error(ErrorCode::InvalidArgument, "iterations must be positive");
  if (mode == RunMode::Coded) {
    if (algorithms.empty()) throw Error(ErrorCode::InvalidArgument, "no algorithms selected");
    frame.code.validate();
  }
  if (!(subcarrier_spacing_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "subcarrier spacing must be positive");
  if (!(ep_damping > 0.0 && ep_damping <= 1.0)) throw Error(ErrorCode::InvalidArgument, "ep_damping must lie in (0, 1]");
}

namespace {

template <typename T>
T scalar(const YAML::Node& node, const char* key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + where + key + "'");
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& yaml_text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config parse error: ") + e.what());
  }
  RunConfig cfg;
  if (!root || root.IsNull()) return cfg;
  if (!root.IsMap()) throw Error(ErrorCode::InvalidArgument, "config must be a mapping");
  reject_unknown(root,
                 {"mode", "frame", "code", "channel", "snr_db", "algorithms", "iterations", "ep_damping",
                  "bpga_exponent", "max_frames", "target_errors", "seed", "workers", "noise", "timing",
                  "trace_frames", "output"},
                 "");

  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };

  if (auto n = root["mode"]) {
    const auto mode = scalar<std::string>(n, "mode");
    if (mode == "coded") cfg.mode = RunMode::Coded;
    else if (mode == "uncoded_qpsk") cfg.mode = RunMode::UncodedQpsk;
    else throw Error(ErrorCode::InvalidArgument, "mode must be 'coded' or 'uncoded_qpsk'");
  }
  if (auto f = root["frame"]) {
    reject_unknown(f, {"symbols", "pilots", "bits_per_symbol", "info_bits"}, "frame.");
    if (f["symbols"]) cfg.frame.total_symbols = scalar<std::size_t>(f["symbols"], "frame.symbols");
    if (f["pilots"]) cfg.frame.pilots = scalar<std::size_t>(f["pilots"], "frame.pilots");
    if (f["bits_per_symbol"]) cfg.frame.bits_per_symbol = scalar<int>(f["bits_per_symbol"], "frame.bits_per_symbol");
    if (f["info_bits"]) cfg.frame.code.info_bits = scalar<std::size_t>(f["info_bits"], "frame.info_bits");
  }
  if (auto c = root["code"]) {
    reject_unknown(c, {"generators", "constraint_length"}, "code.");
    if (c["generators"]) {
      cfg.frame.code.generators.clear();
      for (const auto& g : c["generators"]) {
        const auto text = scalar<std::string>(g, "code.generators");
        if (text.empty() || text.find_first_not_of("01234567") != std::string::npos)
          throw Error(ErrorCode::InvalidArgument, "generator '" + text + "' is not an octal number");
        cfg.frame.code.generators.push_back(static_cast<unsigned>(std::stoul(text, nullptr, 8)));
      }
    }
    if (c["constraint_length"]) cfg.frame.code.constraint_length = scalar<int>(c["constraint_length"], "code.constraint_length");
  }
  if (auto ch = root["channel"]) {
    reject_unknown(ch, {"pdp", "subcarrier_spacing_hz"}, "channel.");
    if (ch["pdp"]) cfg.pdp_path = resolve(scalar<std::string>(ch["pdp"], "channel.pdp"));
    if (ch["subcarrier_spacing_hz"]) cfg.subcarrier_spacing_hz = scalar<double>(ch["subcarrier_spacing_hz"], "channel.subcarrier_spacing_hz");
  }
  if (auto s = root["snr_db"]) {
    cfg.snr_db.clear();
    for (const auto& v : s) cfg.snr_db.push_back(scalar<double>(v, "snr_db"));
  }
  if (auto a = root["algorithms"]) {
    cfg.algorithms.clear();
    for (const auto& v : a) cfg.algorithms.push_back(parse_algorithm(scalar<std::string>(v, "algorithms")));
  }
  if (auto n = root["iterations"]) cfg.iterations = scalar<int>(n, "iterations");
  if (auto n = root["ep_damping"]) cfg.ep_damping = scalar<double>(n, "ep_damping");
  if (auto n = root["bpga_exponent"]) {
    const auto e = scalar<std::string>(n, "bpga_exponent");
    if (e == "squared") cfg.exponent = BpGaExponent::Squared;
    else if (e == "unsquared") cfg.exponent = BpGaExponent::Unsquared;
    else throw Error(ErrorCode::InvalidArgument, "bpga_exponent must be 'squared' or 'unsquared'");
  }
  if (auto n = root["max_frames"]) cfg.max_frames = scalar<std::size_t>(n, "max_frames");
  if (auto n = root["target_errors"]) cfg.target_errors = scalar<std::size_t>(n, "target_errors");
  if (auto n = root["seed"]) cfg.seed = scalar<std::uint64_t>(n, "seed");
  if (auto n = root["workers"]) cfg.workers = scalar<unsigned>(n, "workers");
  if (auto n = root["noise"]) cfg.noise = scalar<bool>(n, "noise");
  if (auto n = root["timing"]) cfg.timing = scalar<bool>(n, "timing");
  if (auto n = root["trace_frames"]) cfg.trace_frames = scalar<std::size_t>(n, "trace_frames");
  if (auto n = root["output"]) cfg.output = resolve(scalar<std::string>(n, "output"));
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

unsigned default_worker_count() {
  if (const char* env = std::getenv("MSGPASS_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

FrameSeeds frame_seeds(std::uint64_t master, std::size_t snr_index, std::size_t frame_index) {
  const std::uint64_t frame_root = derive_seed(derive_seed(master, snr_index), frame_index);
  return {
      derive_seed(derive_seed(master, 0xF00D), frame_index),
      derive_seed(frame_root, 1),
      derive_seed(frame_root, 2),
      derive_seed(frame_root, 3),
      derive_seed(frame_root, 4),
  };
}

double ber_ci95(std::size_t errors, std::size_t bits) {
  if (bits == 0) return 0.0;
  const double n = static_cast<double>(bits);
  if (errors == 0) return 3.0 / n;
  const double p = static_cast<double>(errors) / n;
  return 1.96 * std::sqrt(p * (1.0 - p) / n);
}

double qpsk_uncoded_ber(double snr_db) {
  const double gamma = std::pow(10.0, snr_db / 10.0);
  return 0.5 * std::erfc(std::sqrt(gamma / 2.0));
}

namespace {

using Clock = std::chrono::steady_clock;

struct AlgoOutcome {
  std::vector<std::size_t> errors;  // per iteration
  double seconds = 0.0;
  std::string trace;
};

struct FrameOutcome {
  std::vector<AlgoOutcome> algos;  // aligned with the active list
  std::size_t bits = 0;
};

FrameOutcome simulate_coded_frame(const RunConfig& cfg, const JointGaussian& prior, std::size_t snr_index,
                                  std::size_t frame_index, const std::vector<Algorithm>& active) {
  const FrameSeeds seeds = frame_seeds(cfg.seed, snr_index, frame_index);
  const FrameLayout layout = build_frame(cfg.frame, seeds.pilots, seeds.interleaver);
  const Transmission tx = make_transmission(layout, seeds.bits);
  const ChannelRealization ch = draw_channel(prior, seeds.channel);
  const double gamma = std::pow(10.0, cfg.snr_db[snr_index] / 10.0);
  const std::vector<cplx> h(ch.h.data(), ch.h.data() + ch.h.size());
  const std::vector<cplx> y = transmit(tx.symbols, h, cfg.noise ? gamma : std::numeric_limits<double>::infinity(), seeds.noise);

  FrameOutcome out;
  out.bits = tx.info_bits.size();
  const Truth truth{h, tx.info_bits, tx.codeword};
  for (Algorithm alg : active) {
    ReceiverConfig rc;
    rc.algorithm = alg;
    rc.iterations = cfg.iterations;
    rc.ep_damping = cfg.ep_damping;
    rc.gamma = gamma;
    rc.exponent = cfg.exponent;
    const auto t0 = Clock::now();
    const ReceiverResult r = run_receiver(layout, prior, y, rc, truth);
    AlgoOutcome a;
    a.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    for (const auto& d : r.trace) a.errors.push_back(static_cast<std::size_t>(d.info_bit_errors));
    if (frame_index < cfg.trace_frames) a.trace = trace_to_jsonl(to_string(alg), cfg.snr_db[snr_index], frame_index, r.trace);
    out.algos.push_back(std::move(a));
  }
  return out;
}

FrameOutcome simulate_uncoded_frame(const RunConfig& cfg, std::size_t snr_index, std::size_t frame_index) {
  const FrameSeeds seeds = frame_seeds(cfg.seed, snr_index, frame_index);
  const Constellation qpsk = Constellation::qpsk();
  const std::size_t nsym = cfg.frame.total_symbols;
  CounterRng rng(seeds.bits);
  BitVector bits(2 * nsym);
  for (auto& b : bits) b = rng.bit() ? 1 : 0;
  std::vector<cplx> x(nsym);
  for (std::size_t n = 0; n < nsym; ++n) x[n] = map_bits(std::span<const std::uint8_t>(bits).subspan(2 * n, 2), qpsk);
  const std::vector<cplx> h(nsym, cplx(1.0, 0.0));
  const double gamma = std::pow(10.0, cfg.snr_db[snr_index] / 10.0);
  const std::vector<cplx> y = transmit(x, h, cfg.noise ? gamma : std::numeric_limits<double>::infinity(), seeds.noise);

  const auto t0 = Clock::now();
  AlgoOutcome a;
  std::size_t errors = 0;
  const double no_prior[2] = {0.0, 0.0};
  for (std::size_t n = 0; n < nsym; ++n) {
    const auto ll = gaussian_symbol_log_likelihoods(y[n], {h[n], 0.0}, gamma, qpsk, SymbolMessage::PointEstimate);
    const auto decided = hard_decide(demap_log(ll, qpsk, no_prior));
    errors += (decided[0] != bits[2 * n]) + (decided[1] != bits[2 * n + 1]);
  }
  a.errors.push_back(errors);
  a.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  FrameOutcome out;
  out.bits = bits.size();
  out.algos.push_back(std::move(a));
  return out;
}

}  // namespace

ResultSet run_experiment(const RunConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  const bool coded = cfg.mode == RunMode::Coded;
  const std::vector<Algorithm> algorithms = coded ? cfg.algorithms : std::vector<Algorithm>{Algorithm::PerfectCsi};
  const int iterations = coded ? cfg.iterations : 1;
  const unsigned workers = cfg.workers > 0 ? cfg.workers : default_worker_count();

  std::optional<JointGaussian> prior;
  if (coded) {
    const PowerDelayProfile pdp = cfg.pdp_path.empty() ? PowerDelayProfile::etu() : read_pdp(cfg.pdp_path);
    prior.emplace(covariance_from_pdp(pdp, cfg.subcarrier_spacing_hz, cfg.frame.total_symbols));
  }

  std::ofstream trace_out;
  if (coded && cfg.trace_frames > 0) {
    std::filesystem::create_directories(cfg.output);
    trace_out.open(cfg.output / "traces.jsonl");
    if (!trace_out) throw Error(ErrorCode::Io, "cannot write traces.jsonl");
  }

  ResultSet results;
  for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
    struct Acc {
      std::vector<std::size_t> errors;
      std::size_t frames = 0, bits = 0;
      double seconds = 0.0;
      bool active = true;
    };
    std::vector<Acc> acc(algorithms.size());
    for (auto& a : acc) a.errors.assign(static_cast<std::size_t>(iterations), 0);

    std::size_t frame = 0;
    while (frame < cfg.max_frames && std::any_of(acc.begin(), acc.end(), [](const Acc& a) { return a.active; })) {
      std::vector<Algorithm> active;
      std::vector<std::size_t> slot;
      for (std::size_t a = 0; a < algorithms.size(); ++a)
        if (acc[a].active) {
          active.push_back(algorithms[a]);
          slot.push_back(a);
        }
      const std::size_t batch = std::min<std::size_t>(workers, cfg.max_frames - frame);
      std::vector<FrameOutcome> outcomes(batch);
      std::vector<std::exception_ptr> failures(batch);
      auto work = [&](std::size_t b) {
        try {
          outcomes[b] = coded ? simulate_coded_frame(cfg, *prior, si, frame + b, active)
                              : simulate_uncoded_frame(cfg, si, frame + b);
        } catch (...) {
          failures[b] = std::current_exception();
        }
      };
      if (batch == 1) {
        work(0);
      } else {
        std::vector<std::thread> pool;
        for (std::size_t b = 0; b < batch; ++b) pool.emplace_back(work, b);
        for (auto& t : pool) t.join();
      }
      for (auto& f : failures)
        if (f) std::rethrow_exception(f);

      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t k = 0; k < active.size(); ++k) {
          Acc& a = acc[slot[k]];
          const AlgoOutcome& o = outcomes[b].algos[k];
          for (std::size_t it = 0; it < o.errors.size(); ++it) a.errors[it] += o.errors[it];
          a.frames += 1;
          a.bits += outcomes[b].bits;
          a.seconds += o.seconds;
          if (trace_out.is_open()) trace_out << o.trace;
        }
      }
      frame += batch;
      for (auto& a : acc)
        if (a.active && a.errors.back() >= cfg.target_errors) a.active = false;
    }

    for (std::size_t a = 0; a < algorithms.size(); ++a) {
      for (int it = 0; it < iterations; ++it) {
        ResultRecord r;
        r.algorithm = std::string(to_string(algorithms[a]));
        r.snr_db = cfg.snr_db[si];
        r.iteration = it + 1;
        r.frames = acc[a].frames;
        r.bits = acc[a].bits;
        r.bit_errors = acc[a].errors[static_cast<std::size_t>(it)];
        r.ber = r.bits ? static_cast<double>(r.bit_errors) / static_cast<double>(r.bits) : 0.0;
        r.ci95 = ber_ci95(r.bit_errors, r.bits);
        r.seconds = cfg.timing ? acc[a].seconds : 0.0;
        results.push_back(std::move(r));
      }
      if (progress) {
        char line[256];
        std::snprintf(line, sizeof line, "%-10s snr=%5.1f dB frames=%zu errors=%zu ber=%.3e", to_string(algorithms[a]).data(),
                      cfg.snr_db[si], acc[a].frames, acc[a].errors.back(),
                      acc[a].bits ? static_cast<double>(acc[a].errors.back()) / static_cast<double>(acc[a].bits) : 0.0);
        progress(line);
      }
    }
  }
  return results;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_csv(std::ostream& os, const ResultSet& results) {
  os << kCsvHeader << '\n';
  for (const auto& r : results)
    os << r.algorithm << ',' << fmt_double(r.snr_db) << ',' << r.iteration << ',' << r.frames << ',' << r.bit_errors
       << ',' << fmt_double(r.ber) << ',' << fmt_double(r.ci95) << ',' << fmt_double(r.seconds) << '\n';
}

ResultSet read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw Error(ErrorCode::Io, "missing or unexpected CSV header");
  ResultSet out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw Error(ErrorCode::Io, "CSV row has " + std::to_string(f.size()) + " fields");
    ResultRecord r;
    r.algorithm = f[0];
    r.snr_db = std::stod(f[1]);
    r.iteration = std::stoi(f[2]);
    r.frames = std::stoul(f[3]);
    r.bit_errors = std::stoul(f[4]);
    r.ber = std::stod(f[5]);
    r.ci95 = std::stod(f[6]);
    r.seconds = std::stod(f[7]);
    out.push_back(std::move(r));
  }
  return out;
}

void write_jsonl(std::ostream& os, const ResultSet& results) {
  for (const auto& r : results) {
    nlohmann::json j{{"algorithm", r.algorithm}, {"snr_db", r.snr_db},       {"iteration", r.iteration},
                     {"frames", r.frames},       {"bits", r.bits},           {"bit_errors", r.bit_errors},
                     {"ber", r.ber},             {"ci95", r.ci95},           {"seconds", r.seconds}};
    os << j.dump() << '\n';
  }
}

ResultSet read_jsonl(std::istream& is) {
  ResultSet out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ResultRecord r;
      r.algorithm = j.at("algorithm").get<std::string>();
      r.snr_db = j.at("snr_db").get<double>();
      r.iteration = j.at("iteration").get<int>();
      r.frames = j.at("frames").get<std::size_t>();
      r.bits = j.at("bits").get<std::size_t>();
      r.bit_errors = j.at("bit_errors").get<std::size_t>();
      r.ber = j.at("ber").get<double>();
      r.ci95 = j.at("ci95").get<double>();
      r.seconds = j.at("seconds").get<double>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Io, std::string("bad results line: ") + e.what());
    }
  }
  return out;
}

void emit_summary(const ResultSet& results, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("ber_vs_iteration.csv");
    write_csv(f, results);
  }
  {
    // Last iteration of each (algorithm, SNR) block.
    ResultSet last;
    for (std::size_t k = 0; k < results.size(); ++k) {
      const bool block_end = k + 1 == results.size() || results[k + 1].algorithm != results[k].algorithm ||
                             results[k + 1].snr_db != results[k].snr_db;
      if (block_end) last.push_back(results[k]);
    }
    auto f = open("ber_vs_snr.csv");
    write_csv(f, last);
  }
  {
    auto f = open("results.jsonl");
    write_jsonl(f, results);
  }
}

}  // namespace msgpass
