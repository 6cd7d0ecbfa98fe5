#include "qkdplan/protocol.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "qkdplan/extract.hpp"
#include "qkdplan/reconcile.hpp"
#include "qkdplan/rng.hpp"

namespace qkdplan {

QuantumTranscript quantum_phase(std::int64_t N, const ChannelDerived& channel, std::uint64_t seed) {
  if (N < 1) throw std::invalid_argument("quantum_phase: N must be >= 1");
  const auto n = static_cast<std::size_t>(N);
  Rng rng(seed);
  QuantumTranscript t;
  t.alice_key = Bitstring(n);
  t.alice_bases = Bitstring(n);
  t.bob_bases = Bitstring(n);
  t.outcomes.resize(n);

  const double p_arrive = 1.0 - channel.p_loss;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t key = rng.bit();
    const std::uint8_t basis_a = rng.bit();
    const std::uint8_t basis_b = rng.bit();
    t.alice_key.set(i, key);
    t.alice_bases.set(i, basis_a);
    t.bob_bases.set(i, basis_b);

    PulseOutcome& o = t.outcomes[i];
    o.basis_match = basis_a == basis_b;
    const bool photon = rng.bernoulli(p_arrive);
    const bool dark = rng.bernoulli(channel.p_dark_count);
    if (!photon && !dark) continue;

    o.detected = true;
    // With both present, either click can come first.
    const bool dark_first = dark && (!photon || rng.bit());
    if (dark_first) {
      o.source = DetectionSource::DarkCount;
      o.bob_bit = rng.bit();
    } else if (rng.bernoulli(channel.p_depolar)) {
      o.source = DetectionSource::PhotonDepolarized;
      o.bob_bit = rng.bit();
    } else {
      o.source = DetectionSource::Photon;
      o.bob_bit = o.basis_match ? key : rng.bit();
    }
  }
  return t;
}

SiftedKeys sift(const Bitstring& alice_key, const Bitstring& alice_bases,
                const Bitstring& bob_bases, const std::vector<PulseOutcome>& outcomes) {
  const std::size_t n = alice_key.size();
  if (alice_bases.size() != n || bob_bases.size() != n || outcomes.size() != n) {
    throw std::invalid_argument("sift: length mismatch");
  }
  SiftedKeys out;
  for (std::size_t i = 0; i < n; ++i) {
    const PulseOutcome& o = outcomes[i];
    if (!o.detected || !o.bob_bit || alice_bases[i] != bob_bases[i]) continue;
    out.alice.push_back(alice_key[i]);
    out.bob.push_back(*o.bob_bit);
  }
  return out;
}

Bitstring controlled_randomization(const Bitstring& key, double p_extra, std::uint64_t seed) {
  if (!(p_extra >= 0.0 && p_extra <= 0.5)) {
    throw std::invalid_argument("controlled_randomization: P_extra outside [0, 1/2]");
  }
  Bitstring out = key;
  if (p_extra == 0.0) return out;
  Rng rng(seed);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (rng.bernoulli(p_extra)) out.flip(i);
  }
  return out;
}

std::string_view to_string(AbortCause cause) {
  switch (cause) {
    case AbortCause::None: return "none";
    case AbortCause::NoSignal: return "no_signal";
    case AbortCause::Threshold: return "threshold";
  }
  return "unknown";
}

std::size_t estimation_sample_size(const Strategy& strategy, std::size_t n) {
  if (n < 2) return 0;
  const double raw = strategy.sample_size(static_cast<double>(n));
  auto s = static_cast<std::size_t>(std::floor(raw + 0.5));
  s = std::max<std::size_t>(s, 1);
  return std::min(s, n / 2);
}

Estimation estimate_parameters(const Bitstring& sifted_A, const Bitstring& sifted_B,
                               const Strategy& strategy, double p_extra,
                               const SecurityParams& sec, std::uint64_t seed) {
  if (sifted_A.size() != sifted_B.size()) {
    throw std::invalid_argument("estimate_parameters: key length mismatch");
  }
  Estimation est;
  const std::size_t n = sifted_A.size();
  est.sample_size = estimation_sample_size(strategy, n);
  if (est.sample_size == 0) {
    est.aborted = true;
    est.cause = AbortCause::NoSignal;
    return est;
  }

  // Partial Fisher-Yates: the first sample_size slots form a uniform subset.
  Rng rng(seed);
  std::vector<std::uint32_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
  std::vector<std::uint8_t> sampled(n, 0);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < est.sample_size; ++i) {
    std::swap(idx[i], idx[i + rng.below(n - i)]);
    const std::uint32_t pos = idx[i];
    sampled[pos] = 1;
    mismatches += sifted_A[pos] != sifted_B[pos];
  }
  est.q_hat = static_cast<double>(mismatches) / static_cast<double>(est.sample_size);
  const InferredQber q = infer_qber(est.q_hat, p_extra);
  est.q_inferred = q.value;
  est.q_clamped = q.clamped;
  est.aborted = est.q_inferred >= sec.abort_threshold;
  est.cause = est.aborted ? AbortCause::Threshold : AbortCause::None;

  est.remaining_A.reserve(n - est.sample_size);
  est.remaining_B.reserve(n - est.sample_size);
  for (std::size_t i = 0; i < n; ++i) {
    if (sampled[i]) continue;
    est.remaining_A.push_back(sifted_A[i]);
    est.remaining_B.push_back(sifted_B[i]);
  }
  return est;
}

RunConfig run_config_from(const Plan& plan) {
  return RunConfig{plan.N_F, plan.P_extra_opt, plan.strategy};
}

double quantum_phase_duration(std::int64_t N, const ChannelDerived& channel, const LinkParams& link) {
  return static_cast<double>(N) * channel.repetition_time + channel.propagation_time +
         channel.window + link.detection_delay;
}

RunRecord run_protocol(const RunConfig& config, const LinkParams& link, const SecurityParams& sec,
                       std::uint64_t seed, const RunOptions& options) {
  sec.validate();
  config.strategy.validate();
  const ChannelDerived ch = derive_channel(link);

  RunRecord rec;
  rec.N = config.N;
  rec.d = link.distance_km;
  rec.strategy = config.strategy;
  rec.P_extra = config.p_extra;
  rec.seed = seed;
  rec.P_hat_prior = effective_flip(ch.p_flip, config.p_extra);
  rec.t_quantum = quantum_phase_duration(config.N, ch, link);

  SiftedKeys sifted;
  {
    const QuantumTranscript qt = quantum_phase(config.N, ch, stream_seed(seed, Stream::Quantum));
    sifted = sift(qt.alice_key, qt.alice_bases, qt.bob_bases, qt.outcomes);
  }
  rec.n_sifted = sifted.alice.size();
  rec.sifted_errors = hamming_distance(sifted.alice, sifted.bob);

  const Bitstring bob = controlled_randomization(sifted.bob, config.p_extra,
                                                 stream_seed(seed, Stream::Randomization));
  Estimation est = estimate_parameters(sifted.alice, bob, config.strategy, config.p_extra, sec,
                                       stream_seed(seed, Stream::Estimation));
  rec.sample_size = est.sample_size;
  rec.Q_hat = est.q_hat;
  rec.Q_inferred = est.q_inferred;
  rec.Q_clamped = est.q_clamped;
  rec.aborted = est.aborted;
  rec.abort_cause = est.cause;
  rec.l = est.remaining_A.size();
  if (est.aborted) return rec;

  const auto t0 = std::chrono::steady_clock::now();

  Bitstring bob_key = est.remaining_B;
  if (rec.l >= kCascadeMinLength) {
    const ReconcileResult rr = cascade(est.remaining_A, est.remaining_B, est.q_hat,
                                       stream_seed(seed, Stream::Reconciliation));
    rec.n_exp = rr.n_exp;
    rec.f_realized = rr.f_realized;
    rec.reconciled = rr.verified;
    bob_key = rr.corrected_B;
  } else {
    rec.reconciled = est.remaining_A == est.remaining_B;
  }

  const ExtractResult ex = privacy_amplification(est.remaining_A, rec.P_hat_prior, sec,
                                                 stream_seed(seed, Stream::Extraction));
  rec.k = ex.k_bound;
  rec.m = static_cast<std::int64_t>(ex.final_key.size());
  rec.final_key = ex.final_key;

  if (options.measure_post_time) {
    rec.t_post = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return rec;
}

}  // namespace qkdplan
