#include "msgpass/receiver.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "json.hpp"

#include "msgpass/errors.hpp"
#include "msgpass/logsum.hpp"

namespace msgpass {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::BpGa: return "BP-GA";
    case Algorithm::Ep: return "EP";
    case Algorithm::BpMf: return "BP-MF";
    case Algorithm::BpEm: return "BP-EM";
    case Algorithm::PerfectCsi: return "PerfectCSI";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  std::string key;
  for (char ch : name)
    if (ch != '-' && ch != '_') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (key == "bpga") return Algorithm::BpGa;
  if (key == "ep") return Algorithm::Ep;
  if (key == "bpmf") return Algorithm::BpMf;
  if (key == "bpem") return Algorithm::BpEm;
  if (key == "perfectcsi" || key == "csi") return Algorithm::PerfectCsi;
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + std::string(name) + "'");
}

void ReceiverConfig::validate() const {
  if (iterations < 1) throw Error(ErrorCode::InvalidArgument, "iterations must be positive");
  if (!(ep_damping > 0.0 && ep_damping <= 1.0)) throw Error(ErrorCode::InvalidArgument, "EP damping must lie in (0, 1]");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::InvalidArgument, "gamma must be positive and finite");
}

ScalarGaussian pilot_obs_message(cplx y, cplx x, double gamma) {
  const double energy = std::norm(x);
  if (energy == 0.0) throw Error(ErrorCode::ZeroModulusSymbol, "pilot symbol has zero modulus");
  return ScalarGaussian::from_moments(y * std::conj(x) / energy, 1.0 / (gamma * energy));
}

ScalarGaussian ga_channel_obs_message(cplx y, const SymbolPmf& beta, const Constellation& c, double gamma) {
  if (beta.size() != c.size()) throw Error(ErrorCode::LengthMismatch, "pmf and constellation sizes differ");
  std::vector<double> alpha(c.size());
  std::vector<ScalarGaussian> comps(c.size());
  double kappa = 0.0;
  for (std::size_t l = 0; l < c.size(); ++l) {
    const double energy = std::norm(c.point(l));
    if (energy == 0.0) throw Error(ErrorCode::ZeroModulusSymbol, "constellation point at the origin");
    alpha[l] = beta[l] / energy;
    kappa += alpha[l];
    comps[l] = ScalarGaussian::from_moments(y * std::conj(c.point(l)) / energy, 1.0 / (gamma * energy));
  }
  for (double& a : alpha) a /= kappa;
  const Moments m = mixture_moments(GaussianMixture(std::move(alpha), std::move(comps)));
  return ScalarGaussian::from_moments(m.mean, m.variance);
}

ScalarGaussian mf_channel_obs_message(cplx y, cplx mean_x, double var_x, double gamma) {
  if (!(var_x >= 0.0)) throw Error(ErrorCode::InvalidArgument, "symbol variance must be nonnegative");
  const double energy = var_x + std::norm(mean_x);
  if (energy == 0.0) throw Error(ErrorCode::DegenerateSymbolBelief, "symbol belief has zero second moment");
  return ScalarGaussian::from_moments(y * std::conj(mean_x) / energy, 1.0 / (gamma * energy));
}

Moments ep_belief(cplx y, const ScalarGaussian& cavity, const SymbolPmf& beta, const Constellation& c, double gamma) {
  if (beta.size() != c.size()) throw Error(ErrorCode::LengthMismatch, "pmf and constellation sizes differ");
  if (cavity.is_point()) return {cavity.mean(), 0.0};
  const double lc = cavity.precision();
  const cplx eta = cavity.precision_mean();
  const cplx mc = cavity.mean();

  std::vector<double> logphi(c.size());
  std::vector<cplx> means(c.size());
  std::vector<double> vars(c.size());
  for (std::size_t l = 0; l < c.size(); ++l) {
    const cplx s = c.point(l);
    const double energy = std::norm(s);
    if (energy == 0.0) throw Error(ErrorCode::ZeroModulusSymbol, "constellation point at the origin");
    // lambda_c * CN(y; mu_c s, 1/gamma + |s|^2 / lambda_c), finite as lambda_c -> 0.
    const double spread = lc / gamma + energy;
    logphi[l] = std::log(beta[l]) - std::log(spread) - (lc > 0.0 ? lc * std::norm(y - mc * s) / spread : 0.0);
    const double prec = lc + gamma * energy;
    means[l] = (eta + gamma * y * std::conj(s)) / prec;
    vars[l] = 1.0 / prec;
  }
  const SymbolPmf phi = SymbolPmf::from_log_weights(logphi);
  cplx mean{};
  for (std::size_t l = 0; l < c.size(); ++l) mean += phi[l] * means[l];
  double var = 0.0;
  for (std::size_t l = 0; l < c.size(); ++l) var += phi[l] * (vars[l] + std::norm(means[l] - mean));
  return {mean, var};
}

EpSiteResult ep_site_update(GaussianPosterior& posterior, std::size_t i, cplx y, const SymbolPmf& beta,
                            const Constellation& c, double gamma, double damping, EpPolicy policy) {
  const ScalarGaussian cavity = posterior.cavity(i);
  const ScalarGaussian old_site = posterior.site(i);
  const Moments fresh = ep_belief(y, cavity, beta, c, gamma);

  auto keep_previous = [&]() -> EpSiteResult {
    switch (policy) {
      case EpPolicy::SkipUpdate: return {old_site, true};
    }
    return {old_site, true};
  };
  if (!(fresh.variance > 0.0)) return keep_previous();

  const ScalarGaussian target = ScalarGaussian::from_moments(fresh.mean, fresh.variance);
  const ScalarGaussian previous = product(cavity, old_site);
  const double precision = damping * target.precision() + (1.0 - damping) * previous.precision();
  const cplx info = damping * target.precision_mean() + (1.0 - damping) * previous.precision_mean();
  const ScalarGaussian damped = ScalarGaussian::from_precision(info / precision, precision);
  try {
    const ScalarGaussian site = divide(damped, cavity);
    posterior.set_site(i, site);
    return {site, false};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NonpositivePrecision) throw;
    return keep_previous();
  }
}

std::vector<ScalarGaussian> channel_smoothing(const JointGaussian& prior, std::span<const ScalarGaussian> observations) {
  return GaussianPosterior(prior, observations).extrinsics();
}

ChannelBelief channel_belief_combine(const ScalarGaussian& observation, const ScalarGaussian& extrinsic,
                                     bool point_estimate) {
  if (observation.is_flat() && extrinsic.is_flat())
    throw Error(ErrorCode::BothFlat, "channel belief from two flat messages");
  const ScalarGaussian b = product(observation, extrinsic);
  return {b.mean(), point_estimate ? 0.0 : b.variance()};
}

void ReceiverState::validate(const FrameLayout& layout) const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvariantViolation, what); };
  if (observation.size() != layout.total_symbols || extrinsic.size() != layout.total_symbols ||
      belief.size() != layout.total_symbols)
    fail("channel message vectors do not match the frame");
  for (const auto& b : belief)
    if (!(b.variance >= 0.0) || !std::isfinite(b.variance) || !std::isfinite(b.mean.real()) || !std::isfinite(b.mean.imag()))
      fail("channel belief has invalid moments");
  for (const auto& p : beta)
    if (!p.is_normalized()) fail("symbol pmf not normalized");
  for (double v : symbol_variance)
    if (!(v >= 0.0)) fail("negative symbol variance");
  for (const auto* llrs : {&demapper_extrinsic, &decoder_extrinsic, &coded_app, &info_app})
    for (double v : *llrs)
      if (std::isnan(v)) fail("NaN log-likelihood ratio");
}

namespace {

bool is_mean_field(Algorithm a) { return a == Algorithm::BpMf || a == Algorithm::BpEm || a == Algorithm::PerfectCsi; }

}  // namespace

ReceiverResult run_receiver(const FrameLayout& layout, const JointGaussian& prior, std::span<const cplx> y,
                            const ReceiverConfig& cfg, const std::optional<Truth>& truth) {
  cfg.validate();
  const std::size_t n = layout.total_symbols;
  if (y.size() != n || prior.size() != n) throw Error(ErrorCode::LengthMismatch, "observation or prior size mismatch");
  if (cfg.algorithm == Algorithm::PerfectCsi && (!truth || truth->h.size() != n))
    throw Error(ErrorCode::InvalidArgument, "PerfectCSI needs the true channel");

  const Constellation& c = layout.constellation;
  const auto nbits = static_cast<std::size_t>(c.bits_per_symbol());
  const std::size_t ndata = layout.data_indices.size();
  const std::size_t coded_len = layout.code.coded_length();
  const double gamma = cfg.gamma;
  const Algorithm alg = cfg.algorithm;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  ReceiverResult result;
  ReceiverState& st = result.state;
  st.observation.assign(n, ScalarGaussian::flat());
  st.extrinsic.assign(n, ScalarGaussian::flat());
  st.belief.assign(n, ChannelBelief{});
  st.beta.assign(ndata, SymbolPmf::uniform(c.size()));
  st.symbol_loglik.assign(ndata, std::vector<double>(c.size(), 0.0));
  st.symbol_mean.assign(ndata, cplx{});
  st.symbol_variance.assign(ndata, 0.0);
  st.demapper_extrinsic.assign(layout.interleaved_length(), 0.0);

  // Filler bits sit after the codeword; their interleaved positions carry +inf.
  {
    LlrVector coded_order(layout.interleaved_length(), 0.0);
    std::fill(coded_order.begin() + static_cast<std::ptrdiff_t>(coded_len), coded_order.end(), kInf);
    st.decoder_extrinsic = layout.interleaver.interleave<double>(coded_order);
  }

  for (std::size_t k = 0; k < layout.pilot_indices.size(); ++k) {
    const std::size_t j = layout.pilot_indices[k];
    st.observation[j] = pilot_obs_message(y[j], layout.pilot_symbols[k], gamma);
  }

  for (int it = 1; it <= cfg.iterations; ++it) {
    st.iteration = it;

    if (alg == Algorithm::PerfectCsi) {
      for (std::size_t i = 0; i < n; ++i) st.belief[i] = {truth->h[i], 0.0};
    } else {
      if (it > 1) {
        switch (alg) {
          case Algorithm::BpGa:
            for (std::size_t d = 0; d < ndata; ++d) {
              const std::size_t i = layout.data_indices[d];
              st.observation[i] = ga_channel_obs_message(y[i], st.beta[d], c, gamma);
            }
            break;
          case Algorithm::Ep: {
            GaussianPosterior posterior(prior, st.observation);
            for (std::size_t d = 0; d < ndata; ++d) {
              const std::size_t i = layout.data_indices[d];
              const EpSiteResult r =
                  ep_site_update(posterior, i, y[i], st.beta[d], c, gamma, cfg.ep_damping, cfg.ep_policy);
              if (r.skipped) ++st.ep_skipped;
            }
            st.observation = posterior.sites();
            break;
          }
          case Algorithm::BpMf:
          case Algorithm::BpEm:
            for (std::size_t d = 0; d < ndata; ++d) {
              // Symbol APP: decoder extrinsic times the mean-field message.
              std::vector<double> logw(c.size());
              for (std::size_t l = 0; l < c.size(); ++l) logw[l] = std::log(st.beta[d][l]) + st.symbol_loglik[d][l];
              const SymbolPmf app = SymbolPmf::from_log_weights(logw);
              st.symbol_mean[d] = app.mean(c);
              st.symbol_variance[d] = app.variance(c);
              const std::size_t i = layout.data_indices[d];
              st.observation[i] = mf_channel_obs_message(y[i], st.symbol_mean[d], st.symbol_variance[d], gamma);
            }
            break;
          case Algorithm::PerfectCsi: break;
        }
      }

      st.extrinsic = channel_smoothing(prior, st.observation);
      const bool point = alg == Algorithm::BpEm;
      for (std::size_t i = 0; i < n; ++i) st.belief[i] = channel_belief_combine(st.observation[i], st.extrinsic[i], point);
    }

    // Symbol messages towards the demapper.
    for (std::size_t d = 0; d < ndata; ++d) {
      const std::size_t i = layout.data_indices[d];
      if (is_mean_field(alg)) {
        const bool drop_var = alg != Algorithm::BpMf || cfg.mf_ignore_channel_variance;
        const ChannelEstimate est{st.belief[i].mean, drop_var ? 0.0 : st.belief[i].variance};
        st.symbol_loglik[d] = gaussian_symbol_log_likelihoods(y[i], est, gamma, c, SymbolMessage::MeanField);
      } else {
        const ScalarGaussian& e = st.extrinsic[i];
        if (e.is_flat()) {
          std::fill(st.symbol_loglik[d].begin(), st.symbol_loglik[d].end(), 0.0);
        } else {
          st.symbol_loglik[d] = gaussian_symbol_log_likelihoods(y[i], {e.mean(), e.variance()}, gamma, c,
                                                                SymbolMessage::BpGaExtrinsic, cfg.exponent);
        }
      }
    }

    // Demapping with the decoder's extrinsic bit information.
    for (std::size_t d = 0; d < ndata; ++d) {
      const auto prior_bits = std::span<const double>(st.decoder_extrinsic).subspan(d * nbits, nbits);
      const auto ext = demap_log(st.symbol_loglik[d], c, prior_bits);
      std::copy(ext.begin(), ext.end(), st.demapper_extrinsic.begin() + static_cast<std::ptrdiff_t>(d * nbits));
    }

    // Decoding.
    LlrVector coded_prior = layout.interleaver.deinterleave<double>(st.demapper_extrinsic);
    coded_prior.resize(coded_len);
    SisoOutput dec = decode_siso(coded_prior, layout.code);
    LlrVector coded_ext(layout.interleaved_length(), kInf);
    // A bit already known from the channel side gets no extrinsic update.
    for (std::size_t k = 0; k < coded_len; ++k)
      coded_ext[k] = std::isinf(coded_prior[k]) ? 0.0 : dec.coded_app[k] - coded_prior[k];
    st.decoder_extrinsic = layout.interleaver.interleave<double>(coded_ext);
    st.coded_app = std::move(dec.coded_app);
    st.info_app = std::move(dec.info_app);

    for (std::size_t d = 0; d < ndata; ++d)
      st.beta[d] = symbol_extrinsic_llr(std::span<const double>(st.decoder_extrinsic).subspan(d * nbits, nbits), c);

    st.validate(layout);

    BitVector decisions = hard_decide(st.info_app);
    IterationDiagnostics diag;
    diag.iteration = it;
    diag.ep_skipped = st.ep_skipped;
    diag.channel_mse = std::numeric_limits<double>::quiet_NaN();
    if (truth) {
      if (truth->h.size() == n) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += std::norm(st.belief[i].mean - truth->h[i]);
        diag.channel_mse = acc / static_cast<double>(n);
      }
      if (truth->info_bits.size() == decisions.size()) {
        diag.info_bit_errors = 0;
        for (std::size_t k = 0; k < decisions.size(); ++k) diag.info_bit_errors += decisions[k] != truth->info_bits[k];
      }
      if (truth->codeword.size() >= coded_len) {
        const BitVector coded = hard_decide(st.coded_app);
        diag.coded_bit_errors = 0;
        for (std::size_t k = 0; k < coded_len; ++k) diag.coded_bit_errors += coded[k] != truth->codeword[k];
      }
    }
    result.trace.push_back(diag);
    result.decisions_per_iteration.push_back(decisions);
    result.info_bits = std::move(decisions);
  }
  return result;
}

std::string trace_to_jsonl(std::string_view algorithm, double snr_db, std::size_t frame,
                           std::span<const IterationDiagnostics> trace) {
  std::ostringstream os;
  for (const auto& d : trace) {
    nlohmann::json j;
    j["algorithm"] = algorithm;
    j["snr_db"] = snr_db;
    j["frame"] = frame;
    j["iteration"] = d.iteration;
    j["channel_mse"] = std::isfinite(d.channel_mse) ? nlohmann::json(d.channel_mse) : nlohmann::json(nullptr);
    j["coded_bit_errors"] = d.coded_bit_errors;
    j["info_bit_errors"] = d.info_bit_errors;
    j["ep_skipped"] = d.ep_skipped;
    os << j.dump() << '\n';
  }
  return os.str();
}

}  // namespace msgpass
