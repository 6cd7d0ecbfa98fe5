#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "qkdplan/link_model.hpp"

namespace qkdplan {

/// Raised when a requested operating point cannot produce a key: the
/// effective error rate is zero or above threshold, a bound diverges, etc.
class Infeasible : public std::runtime_error {
 public:
  Infeasible(std::string stage, const std::string& message)
      : std::runtime_error(message), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

enum class StrategyKind { ConstantFraction, ConstantCount, SqrtScaling };

std::string_view to_string(StrategyKind kind);
/// Accepts "fraction", "count", "sqrt" (and the enum spellings).
StrategyKind parse_strategy_kind(std::string_view name);

/// Rule choosing how many sifted bits are spent on parameter estimation.
///   ConstantFraction: g(n) = param            (param in (0, 1/2])
///   ConstantCount:    g(n) = param / n        (param = A > 0 bits)
///   SqrtScaling:      g(n) = param / sqrt(n)  (param = B > 0)
struct Strategy {
  StrategyKind kind = StrategyKind::ConstantFraction;
  double param = 1.0 / 3.0;

  static Strategy fraction(double g = 1.0 / 3.0) { return {StrategyKind::ConstantFraction, g}; }
  static Strategy count(double a) { return {StrategyKind::ConstantCount, a}; }
  static Strategy sqrt_scaling(double b) { return {StrategyKind::SqrtScaling, b}; }

  void validate() const;
  /// Real-valued sample size g(n) * n with g(n) capped at 1/2.
  double sample_size(double n) const;
};

struct EstimatorStats {
  double mean_L = 0.0;
  double std_L = 0.0;
  double mean_sample = 0.0;  // E[g(Y) Y]
  double std_Qhat = 0.0;
  double mean_Qhat = 0.0;
};

/// Relative accuracy target Gamma for the error-rate estimate.
double accuracy_bound(double p_hat, const SecurityParams& sec);
/// A_0: smallest expected estimation sample meeting the accuracy target.
double min_estimation_sample(double p_hat, const SecurityParams& sec);
/// l_F: raw-key length that yields m_F output bits at effective error p_hat.
double required_raw_length(std::int64_t m_F, double p_hat, const SecurityParams& sec);

EstimatorStats strategy_stats(double N, double p, double p_hat, const Strategy& strategy);

/// Largest positive x solving
///   x^{3/2} - C_F sqrt(1-p) x - (l_F + A_0) sqrt(x) + (A_0 C_F / 2) sqrt(1-p) = 0,
/// found on u = sqrt(x). Throws Infeasible when no positive root exists.
double sqrt_strategy_threshold(double l_F, double A_0, double p, double C_F);

struct PhotonBudget {
  std::int64_t N_F = 0;
  double N_real = 0.0;  // before rounding up
  Strategy strategy;     // with A or B resolved
  double n_lim = 0.0;    // SqrtScaling only
  double A_0 = 0.0;
  double l_F = 0.0;
  double p_hat = 0.0;
};

/// Closed-form lower bound on pulses from already-computed l_F and A_0.
/// `g` is only read for ConstantFraction.
PhotonBudget photon_budget_from(double l_F, double A_0, double p, StrategyKind kind, double g,
                                double C_F);

PhotonBudget photon_budget(double d, std::int64_t m_F, StrategyKind kind, double p_extra,
                           const LinkParams& link, const SecurityParams& sec,
                           double g = 1.0 / 3.0);

/// Largest P_extra keeping effective_flip(p_flip, P_extra) below the threshold.
double max_extra_noise(double p_flip, const SecurityParams& sec);

double optimal_extra_noise(double d, std::int64_t m_F, StrategyKind kind, const LinkParams& link,
                           const SecurityParams& sec, double g = 1.0 / 3.0);

/// Strategy actually used for N pulses when only the kind is known: the
/// fraction keeps g, the count takes A = A_0 and the sqrt rule takes the
/// smallest B meeting the accuracy target at the expected sifted length.
Strategy resolve_strategy(StrategyKind kind, double N, double p, double p_hat,
                          const SecurityParams& sec, double g = 1.0 / 3.0);

double success_probability(double d, double N, const Strategy& strategy, double p_extra,
                           const LinkParams& link, const SecurityParams& sec);

struct OutputStats {
  std::int64_t mean_m = 0;
  double std_m = 0.0;
};

OutputStats expected_output(double N, double d, const Strategy& strategy, double p_extra,
                            const LinkParams& link, const SecurityParams& sec);

struct KeyRateStats {
  double mean = 0.0;  // bits per pulse
  double std = 0.0;
};

KeyRateStats kbr_stats(double N, double d, const Strategy& strategy, double p_extra,
                       const LinkParams& link, const SecurityParams& sec);

struct Plan {
  Strategy strategy;
  std::int64_t N_F = 0;
  double P_extra_opt = 0.0;
  double l_F = 0.0;
  double A_0 = 0.0;
  double n_lim = 0.0;
  std::int64_t expected_m = 0;
  double std_m = 0.0;
  double expected_KBR = 0.0;
  double std_KBR = 0.0;
  double P_success = 0.0;
  double d = 0.0;
  std::int64_t m_F = 0;
  double p = 0.0;
  double P_flip = 0.0;
  double P_hat = 0.0;
};

struct PlanOptions {
  double g = 1.0 / 3.0;
  /// Use this P_extra instead of optimizing it.
  std::optional<double> fixed_p_extra;
};

Plan plan(double d, std::int64_t m_F, StrategyKind kind, const LinkParams& link,
          const SecurityParams& sec, const PlanOptions& options = {});

}  // namespace qkdplan
