#include "qkdplan/link_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qkdplan/numerics.hpp"

namespace qkdplan {
namespace {

constexpr double kProbTol = 1e-12;

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw std::invalid_argument(std::string(field) + ": " + what);
}

bool is_probability(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }
bool is_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

void LinkParams::validate() const {
  require(is_probability(emission_efficiency), "eta_e", "must lie in [0, 1]");
  require(is_probability(detection_efficiency), "eta_d", "must lie in [0, 1]");
  require(is_probability(jitter_fraction), "std", "must lie in [0, 1]");
  require(is_nonneg(attenuation_db_per_km), "R", "must be >= 0");
  require(std::isfinite(fiber_speed_km_s) && fiber_speed_km_s > 0.0, "v_f", "must be > 0");
  require(is_nonneg(depolarizing_rate), "R_depolar", "must be >= 0");
  require(is_nonneg(dark_count_rate), "R_DCR", "must be >= 0");
  require(is_nonneg(detection_delay), "DD", "must be >= 0");
  require(is_nonneg(dead_time), "DT", "must be >= 0");
  require(is_nonneg(gate_duration_alice), "GD_A", "must be >= 0");
  require(is_nonneg(gate_duration_bob), "GD_B", "must be >= 0");
  require(std::isfinite(coverage_factor) && coverage_factor > 0.0, "C", "must be > 0");
  require(is_nonneg(distance_km), "d", "must be >= 0");
}

void SecurityParams::validate() const {
  require(abort_threshold > 0.0 && abort_threshold < 0.5, "Q_t", "must lie in (0, 1/2)");
  require(max_reconciliation_efficiency >= 1.0, "f_max", "must be >= 1");
  require(extractor_epsilon > 0.0 && extractor_epsilon < 1.0, "eps_max", "must lie in (0, 1)");
  require(confidence_factor > 0.0, "C_F", "must be > 0");
  require(accuracy_base > 0.0, "eps", "must be > 0");
  require(is_nonneg(accuracy_amplitude), "alpha", "must be >= 0");
  require(is_nonneg(accuracy_decay), "beta", "must be >= 0");
}

double emission_efficiency_from_mu(double mu) {
  if (!(mu >= 0.0)) throw std::invalid_argument("mean photon number must be >= 0");
  return -std::expm1(-mu);
}

double flip_probability(double p_dark_count, double p_loss, double p_depolar) {
  const double no_click = p_loss * (1.0 - p_dark_count);
  const double click = 1.0 - no_click;
  if (click <= 0.0) return 0.0;
  const double dark_errors = 0.25 * p_dark_count * (p_loss + 1.0);
  const double depolar_errors =
      0.5 * p_depolar * (1.0 - 0.5 * p_dark_count) * (1.0 - p_loss);
  return (dark_errors + depolar_errors) / click;
}

ChannelDerived derive_channel(const LinkParams& link) {
  link.validate();
  ChannelDerived ch;
  const double d = link.distance_km;
  ch.propagation_time = d / link.fiber_speed_km_s;
  ch.jitter_std = link.jitter_fraction * ch.propagation_time;
  ch.window = link.coverage_factor * ch.jitter_std;
  ch.p_dark_count = -std::expm1(-link.dark_count_rate * ch.window);
  ch.p_device_loss = 1.0 - link.emission_efficiency * link.detection_efficiency;
  ch.p_loss = 1.0 - (1.0 - ch.p_device_loss) * std::pow(10.0, -link.attenuation_db_per_km * d / 10.0);
  ch.p_depolar = -std::expm1(-(link.depolarizing_rate / link.fiber_speed_km_s) * d);

  const double no_click = ch.p_loss * (1.0 - ch.p_dark_count);
  ch.p_sift = 0.5 * (1.0 - no_click);
  ch.signal_detectable = ch.p_sift > 0.0;
  ch.p_flip = flip_probability(ch.p_dark_count, ch.p_loss, ch.p_depolar);

  const double detector_chain = link.detection_delay + link.gate_duration_bob + link.dead_time;
  const double c_jitter = link.coverage_factor * ch.jitter_std;
  ch.repetition_time = std::max(3.0 * link.gate_duration_alice, detector_chain + 3.0 * c_jitter);
  ch.repetition_time_min = std::max(2.0 * link.gate_duration_alice, detector_chain + 2.0 * c_jitter);
  return ch;
}

double effective_flip(double p_flip, double p_extra) {
  if (!(p_flip >= -kProbTol && p_flip <= 0.5 + kProbTol) ||
      !(p_extra >= -kProbTol && p_extra <= 0.5 + kProbTol)) {
    throw std::invalid_argument("effective_flip: inputs must lie in [0, 1/2]");
  }
  return p_flip + p_extra - 2.0 * p_flip * p_extra;
}

InferredQber infer_qber(double q_hat, double p_extra) {
  if (!(p_extra >= 0.0 && p_extra < 0.5)) {
    throw std::invalid_argument("infer_qber: P_extra must lie in [0, 1/2)");
  }
  const double raw = (q_hat - p_extra) / (1.0 - 2.0 * p_extra);
  InferredQber out{std::clamp(raw, 0.0, 1.0), false};
  out.clamped = raw < 0.0 || raw > 1.0;
  return out;
}

std::optional<double> limit_distance(const LinkParams& link, const SecurityParams& sec,
                                     double max_distance_km) {
  sec.validate();
  auto excess = [&](double d) {
    LinkParams at = link;
    at.distance_km = d;
    return derive_channel(at).p_flip - sec.abort_threshold;
  };
  if (excess(max_distance_km) < 0.0) return std::nullopt;
  return solve_bracketed(excess, 0.0, max_distance_km, 1e-9).value;
}

}  // namespace qkdplan
