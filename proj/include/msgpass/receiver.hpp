#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msgpass/channel_code.hpp"
#include "msgpass/gaussian_algebra.hpp"
#include "msgpass/mapping.hpp"
#include "msgpass/system_model.hpp"

namespace msgpass {

enum class Algorithm { BpGa, Ep, BpMf, BpEm, PerfectCsi };

std::string_view to_string(Algorithm a);
/// Accepts "BP-GA", "EP", "BP-MF", "BP-EM", "PerfectCSI" (case-insensitive).
Algorithm parse_algorithm(std::string_view name);

/// What EP does when the damped belief divided by the cavity is improper.
enum class EpPolicy { SkipUpdate };

struct ReceiverConfig {
  Algorithm algorithm = Algorithm::BpMf;
  int iterations = 15;
  double ep_damping = 0.5;
  EpPolicy ep_policy = EpPolicy::SkipUpdate;
  double gamma = 1.0;  // noise precision, known to the receiver
  BpGaExponent exponent = BpGaExponent::Squared;
  /// Drop the channel belief variance from the mean-field symbol message.
  /// With this set BP-MF computes exactly what BP-EM computes.
  bool mf_ignore_channel_variance = false;

  void validate() const;
};

/// Pilot observation factor as a message on h_j: CN(y x* / |x|^2, 1 / (gamma |x|^2)).
ScalarGaussian pilot_obs_message(cplx y, cplx x, double gamma);

/// Gaussian projection of the data observation factor integrated against
/// the symbol pmf beta: a mixture with weights beta(s) / (kappa |s|^2).
ScalarGaussian ga_channel_obs_message(cplx y, const SymbolPmf& beta, const Constellation& c, double gamma);

/// Mean-field message on h_i given the symbol belief moments.
ScalarGaussian mf_channel_obs_message(cplx y, cplx mean_x, double var_x, double gamma);

/// Moments of G[cavity(h) * sum_s beta(s) CN(h s; y, 1/gamma)].
Moments ep_belief(cplx y, const ScalarGaussian& cavity, const SymbolPmf& beta, const Constellation& c,
                  double gamma);

struct EpSiteResult {
  ScalarGaussian site;
  bool skipped = false;
};

/// One EP site refresh at index i against the current posterior: projects
/// the belief, damps it in natural parameters with step `damping`, divides
/// out the cavity and installs the new site (rank-1 posterior update). An
/// improper result is handled by `policy`.
EpSiteResult ep_site_update(GaussianPosterior& posterior, std::size_t i, cplx y, const SymbolPmf& beta,
                            const Constellation& c, double gamma, double damping, EpPolicy policy);

/// Messages from the channel prior to every h_i given the current
/// observation messages (flat entries are uninformative).
std::vector<ScalarGaussian> channel_smoothing(const JointGaussian& prior,
                                              std::span<const ScalarGaussian> observations);

struct ChannelBelief {
  cplx mean;
  double variance = 0.0;
};

/// Product of observation and extrinsic messages. With `point_estimate` the
/// variance is reported as 0 (Dirac belief at the same mean). Throws
/// BothFlat when neither message is informative.
ChannelBelief channel_belief_combine(const ScalarGaussian& observation, const ScalarGaussian& extrinsic,
                                     bool point_estimate = false);

struct ReceiverState {
  std::vector<ScalarGaussian> observation;  // messages f_D / f_P -> h_i
  std::vector<ScalarGaussian> extrinsic;    // messages f_H -> h_i
  std::vector<ChannelBelief> belief;        // per index
  std::vector<SymbolPmf> beta;              // decoder-side extrinsic, per data symbol
  std::vector<std::vector<double>> symbol_loglik;  // observation-side symbol messages, per data symbol
  std::vector<cplx> symbol_mean;            // BP-MF symbol APP moments, per data symbol
  std::vector<double> symbol_variance;
  LlrVector demapper_extrinsic;  // interleaved order
  LlrVector decoder_extrinsic;   // interleaved order, filler bits +inf
  LlrVector coded_app;           // codeword order
  LlrVector info_app;
  int iteration = 0;
  std::size_t ep_skipped = 0;

  /// Throws InvariantViolation on negative or non-finite variances,
  /// unnormalized pmfs or NaN LLRs.
  void validate(const FrameLayout& layout) const;
};

struct Truth {
  std::span<const cplx> h;
  std::span<const std::uint8_t> info_bits;
  std::span<const std::uint8_t> codeword;  // at least coded_length() bits
};

struct IterationDiagnostics {
  int iteration = 0;
  double channel_mse = 0.0;  // NaN without truth
  long coded_bit_errors = -1;
  long info_bit_errors = -1;
  std::size_t ep_skipped = 0;
};

struct ReceiverResult {
  BitVector info_bits;
  std::vector<BitVector> decisions_per_iteration;
  std::vector<IterationDiagnostics> trace;
  ReceiverState state;
};

/// Runs the configured receiver for cfg.iterations iterations. `truth` is
/// required for PerfectCSI and enables error counts in the trace.
ReceiverResult run_receiver(const FrameLayout& layout, const JointGaussian& prior, std::span<const cplx> y,
                            const ReceiverConfig& cfg, const std::optional<Truth>& truth = std::nullopt);

/// One JSON object per iteration, newline-terminated.
std::string trace_to_jsonl(std::string_view algorithm, double snr_db, std::size_t frame,
                           std::span<const IterationDiagnostics> trace);

}  // namespace msgpass
