#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "qkdplan/bitstring.hpp"
#include "qkdplan/link_model.hpp"
#include "qkdplan/planner.hpp"

namespace qkdplan {

enum class DetectionSource : std::uint8_t { None, Photon, DarkCount, PhotonDepolarized };

struct PulseOutcome {
  bool detected = false;
  DetectionSource source = DetectionSource::None;
  bool basis_match = false;
  std::optional<std::uint8_t> bob_bit;  // nullopt: nothing registered ("X")
};

struct QuantumTranscript {
  Bitstring alice_key;
  Bitstring alice_bases;
  Bitstring bob_bases;
  std::vector<PulseOutcome> outcomes;
};

/// Per-pulse event sampling of loss, dark counts, depolarization and
/// basis choice. Independent of the closed-form flip probability.
QuantumTranscript quantum_phase(std::int64_t N, const ChannelDerived& channel, std::uint64_t seed);

struct SiftedKeys {
  Bitstring alice;
  Bitstring bob;
};

/// Keeps positions where Bob registered a click and the bases agree.
SiftedKeys sift(const Bitstring& alice_key, const Bitstring& alice_bases,
                const Bitstring& bob_bases, const std::vector<PulseOutcome>& outcomes);

/// Flips every bit independently with probability p_extra.
Bitstring controlled_randomization(const Bitstring& key, double p_extra, std::uint64_t seed);

enum class AbortCause { None, NoSignal, Threshold };
std::string_view to_string(AbortCause cause);

struct Estimation {
  double q_hat = 0.0;
  double q_inferred = 0.0;
  bool q_clamped = false;
  bool aborted = false;
  AbortCause cause = AbortCause::None;
  std::size_t sample_size = 0;
  Bitstring remaining_A;
  Bitstring remaining_B;
};

/// round(g(n) n), half up, clamped to [1, floor(n/2)]. Zero when n < 2.
std::size_t estimation_sample_size(const Strategy& strategy, std::size_t n);

Estimation estimate_parameters(const Bitstring& sifted_A, const Bitstring& sifted_B,
                               const Strategy& strategy, double p_extra,
                               const SecurityParams& sec, std::uint64_t seed);

struct RunConfig {
  std::int64_t N = 0;
  double p_extra = 0.0;
  Strategy strategy;
};

RunConfig run_config_from(const Plan& plan);

struct RunOptions {
  /// Wall-clock timing of post-processing; off keeps records replayable byte for byte.
  bool measure_post_time = true;
};

struct RunRecord {
  std::int64_t N = 0;
  double d = 0.0;
  Strategy strategy;
  std::size_t n_sifted = 0;
  std::size_t sifted_errors = 0;  // before randomization; simulation-side diagnostic
  std::size_t sample_size = 0;
  double Q_hat = 0.0;
  double Q_inferred = 0.0;
  bool Q_clamped = false;
  bool aborted = false;
  AbortCause abort_cause = AbortCause::None;
  std::size_t l = 0;
  std::int64_t n_exp = 0;
  double f_realized = 0.0;
  bool reconciled = false;  // Bob's corrected key equals Alice's
  double P_hat_prior = 0.0; // a-priori effective flip used for k
  double k = 0.0;
  std::int64_t m = 0;
  Bitstring final_key;
  double P_extra = 0.0;
  std::uint64_t seed = 0;
  double t_quantum = 0.0;
  double t_post = 0.0;
};

/// quantum phase -> sift -> randomization -> estimation -> Cascade ->
/// Toeplitz extraction. An abort short-circuits with m = 0.
RunRecord run_protocol(const RunConfig& config, const LinkParams& link, const SecurityParams& sec,
                       std::uint64_t seed, const RunOptions& options = {});

/// Simulated wall time of the quantum phase: N s + tau + window + DD.
double quantum_phase_duration(std::int64_t N, const ChannelDerived& channel, const LinkParams& link);

}  // namespace qkdplan
