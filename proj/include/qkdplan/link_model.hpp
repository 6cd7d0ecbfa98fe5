#pragma once

#include <optional>

namespace qkdplan {

inline constexpr double kSpeedOfLightKmPerS = 299792.458;

/// Physical constants of a point-to-point fiber link with a single-photon
/// source and a gated single-photon detector. SI units: seconds, km, 1/s, dB/km.
struct LinkParams {
  double emission_efficiency = 0.2;   // eta_e
  double detection_efficiency = 0.6;  // eta_d
  double attenuation_db_per_km = 0.2; // R
  double fiber_speed_km_s = 2.0 / 3.0 * kSpeedOfLightKmPerS;
  double jitter_fraction = 0.02;      // std: jitter std as a fraction of tau
  double depolarizing_rate = 100.0;   // 1/s
  double dark_count_rate = 25.0;      // 1/s
  double detection_delay = 0.5e-9;    // DD
  double dead_time = 100e-9;          // DT
  double gate_duration_alice = 1e-9;  // GD_A
  double gate_duration_bob = 1e-9;    // GD_B
  double coverage_factor = 3.0;       // C, detector window = C * jitter std
  double distance_km = 0.0;

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;
};

/// Thresholds and tuning constants of the post-processing and sizing stages.
struct SecurityParams {
  double abort_threshold = 0.091;              // Q_t
  double max_reconciliation_efficiency = 1.27; // f_max
  double extractor_epsilon = 0.01;             // eps_max
  double confidence_factor = 3.0;              // C_F
  double accuracy_base = 0.1;                  // eps
  double accuracy_amplitude = 3.0;             // alpha
  double accuracy_decay = 20.0;                // beta

  void validate() const;
};

struct ChannelDerived {
  double propagation_time = 0.0;   // tau
  double jitter_std = 0.0;         // delta tau
  double window = 0.0;             // detector gate width
  double p_dark_count = 0.0;       // P_DCR
  double p_device_loss = 0.0;      // P_0
  double p_loss = 0.0;             // P_loss
  double p_depolar = 0.0;          // P_depolar
  double p_sift = 0.0;             // p: detected and basis-matched
  double p_flip = 0.0;             // intrinsic QBER
  double repetition_time = 0.0;    // s
  double repetition_time_min = 0.0;// s_lim
  /// False when no click can ever happen (p == 0); p_flip is then reported as 0.
  bool signal_detectable = true;
};

double emission_efficiency_from_mu(double mu);

ChannelDerived derive_channel(const LinkParams& link);

/// Bit-flip probability among sifted positions from the three elementary
/// event probabilities (dark click first, photon first, lost photon + dark).
double flip_probability(double p_dark_count, double p_loss, double p_depolar);

/// XOR composition of two independent bit-flip channels. Both inputs in [0, 1/2].
double effective_flip(double p_flip, double p_extra);

struct InferredQber {
  double value = 0.0;
  /// Raw estimate fell outside [0, 1] and was clamped.
  bool clamped = false;
};

/// Undoes the artificial noise: (q_hat - p_extra) / (1 - 2 p_extra).
InferredQber infer_qber(double q_hat, double p_extra);

/// Distance at which the intrinsic QBER reaches the abort threshold, or
/// nullopt when the QBER stays below it on (0, max_distance_km].
std::optional<double> limit_distance(const LinkParams& link, const SecurityParams& sec,
                                     double max_distance_km = 200.0);

}  // namespace qkdplan
