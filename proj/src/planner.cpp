#include "qkdplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qkdplan/numerics.hpp"

namespace qkdplan {
namespace {

constexpr double kProbTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Rounds a pulse count up, ignoring ulp-level noise above an integer.
std::int64_t ceil_pulses(double x) {
  return static_cast<std::int64_t>(std::ceil(x * (1.0 - 1e-12)));
}

ChannelDerived channel_at(double d, const LinkParams& link) {
  LinkParams at = link;
  at.distance_km = d;
  return derive_channel(at);
}

void require_sift_probability(double p, const char* stage) {
  if (!(p > 0.0 && p <= 0.5 + kProbTol)) {
    throw Infeasible(stage, "sift probability p must lie in (0, 1/2]");
  }
}

}  // namespace

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::ConstantFraction: return "fraction";
    case StrategyKind::ConstantCount: return "count";
    case StrategyKind::SqrtScaling: return "sqrt";
  }
  return "unknown";
}

StrategyKind parse_strategy_kind(std::string_view name) {
  if (name == "fraction" || name == "ConstantFraction" || name == "1") return StrategyKind::ConstantFraction;
  if (name == "count" || name == "ConstantCount" || name == "2") return StrategyKind::ConstantCount;
  if (name == "sqrt" || name == "SqrtScaling" || name == "3") return StrategyKind::SqrtScaling;
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

void Strategy::validate() const {
  if (!std::isfinite(param) || param < 0.0) {
    throw std::invalid_argument("strategy parameter must be finite and >= 0");
  }
  if (kind == StrategyKind::ConstantFraction && !(param > 0.0 && param <= 0.5)) {
    throw std::invalid_argument("fraction strategy needs g in (0, 1/2]");
  }
}

double Strategy::sample_size(double n) const {
  if (n <= 0.0) return 0.0;
  double s = 0.0;
  switch (kind) {
    case StrategyKind::ConstantFraction: s = param * n; break;
    case StrategyKind::ConstantCount: s = param; break;
    case StrategyKind::SqrtScaling: s = param * std::sqrt(n); break;
  }
  return std::min(s, 0.5 * n);
}

double accuracy_bound(double p_hat, const SecurityParams& sec) {
  return sec.accuracy_base *
         (1.0 + sec.accuracy_amplitude * std::pow(10.0, -sec.accuracy_decay * p_hat));
}

double min_estimation_sample(double p_hat, const SecurityParams& sec) {
  if (!(p_hat > 0.0)) {
    throw Infeasible("accuracy", "estimation sample A_0 diverges at zero effective error rate");
  }
  if (p_hat >= 1.0) throw std::invalid_argument("A_0: effective error rate must be < 1");
  const double gamma = accuracy_bound(p_hat, sec);
  return (1.0 / (gamma * gamma)) * (1.0 / p_hat - 1.0);
}

double required_raw_length(std::int64_t m_F, double p_hat, const SecurityParams& sec) {
  if (m_F < 1) throw std::invalid_argument("l_F: m_F must be >= 1");
  if (!(p_hat >= 0.0) || p_hat >= sec.abort_threshold) {
    throw Infeasible("raw_length", "effective error rate is at or above the abort threshold");
  }
  const double denom = 1.0 - (1.0 + sec.max_reconciliation_efficiency) * binary_entropy(p_hat);
  if (denom <= 0.0) {
    throw Infeasible("raw_length", "no extractable entropy at this error rate");
  }
  const double mf = static_cast<double>(m_F);
  return (mf + 6.0 + 4.0 * std::log2(mf / sec.extractor_epsilon)) / denom;
}

EstimatorStats strategy_stats(double N, double p, double p_hat, const Strategy& strategy) {
  if (!(N >= 1.0)) throw std::invalid_argument("strategy_stats: N must be >= 1");
  require_sift_probability(p, "strategy_stats");
  if (!std::isfinite(strategy.param) || strategy.param < 0.0) {
    throw std::invalid_argument("strategy_stats: negative strategy parameter");
  }
  const double n = N * p;
  const double sd = std::sqrt(n * (1.0 - p));
  const double b = strategy.param;
  EstimatorStats st;
  switch (strategy.kind) {
    case StrategyKind::ConstantFraction:
      st.mean_L = (1.0 - b) * n;
      st.std_L = (1.0 - b) * sd;
      st.mean_sample = b * n;
      break;
    case StrategyKind::ConstantCount:
      st.mean_L = n - b;
      st.std_L = sd;
      st.mean_sample = b;
      break;
    case StrategyKind::SqrtScaling:
      st.mean_L = n - b * std::sqrt(n);
      st.std_L = (1.0 - b / (2.0 * std::sqrt(n))) * sd;
      st.mean_sample = b * std::sqrt(n);
      break;
  }
  if (st.mean_L <= 0.0) throw Infeasible("strategy_stats", "no raw key bits left after estimation");
  st.mean_Qhat = p_hat;
  // A zero-size sample (B = 0 etc.) leaves the estimate undefined.
  st.std_Qhat = st.mean_sample > 0.0 ? std::sqrt(p_hat * (1.0 - p_hat) / st.mean_sample) : kInf;
  return st;
}

double sqrt_strategy_threshold(double l_F, double A_0, double p, double C_F) {
  const double c = C_F * std::sqrt(1.0 - p);
  const double lin = l_F + A_0;
  const double cst = 0.5 * A_0 * c;
  auto cubic = [&](double u) { return ((u - c) * u - lin) * u + cst; };

  // The largest root lies right of the local minimum of the cubic.
  const double u_min = (2.0 * c + std::sqrt(4.0 * c * c + 12.0 * lin)) / 6.0;
  if (cubic(u_min) > 0.0) {
    throw Infeasible("photon_budget", "sqrt strategy: no positive n_lim root");
  }
  double hi = 1.0 + std::max({c, lin, cst});
  while (cubic(hi) < 0.0) hi *= 2.0;
  const auto root = solve_bracketed(cubic, u_min, hi, 0.0, 400);
  return root.value * root.value;
}

PhotonBudget photon_budget_from(double l_F, double A_0, double p, StrategyKind kind, double g,
                                double C_F) {
  require_sift_probability(p, "photon_budget");
  const double q = 1.0 - p;
  const double c2 = C_F * C_F;
  PhotonBudget b;
  b.l_F = l_F;
  b.A_0 = A_0;
  switch (kind) {
    case StrategyKind::ConstantFraction: {
      if (!(g > 0.0 && g <= 0.5)) throw std::invalid_argument("fraction strategy needs g in (0, 1/2]");
      const double root = std::sqrt(q) + std::sqrt(q + 4.0 * l_F / (c2 * (1.0 - g)));
      b.N_real = std::max(A_0 / (g * p), c2 / (4.0 * p) * root * root);
      b.strategy = Strategy::fraction(g);
      break;
    }
    case StrategyKind::ConstantCount: {
      const double root = std::sqrt(q) + std::sqrt(q + 4.0 * (A_0 + l_F) / c2);
      b.N_real = std::max(2.0 * A_0 / p, c2 / (4.0 * p) * root * root);
      b.strategy = Strategy::count(A_0);
      break;
    }
    case StrategyKind::SqrtScaling: {
      b.n_lim = sqrt_strategy_threshold(l_F, A_0, p, C_F);
      b.N_real = std::max(4.0 * A_0 * A_0 / b.n_lim, b.n_lim) / p;
      b.strategy = Strategy::sqrt_scaling(A_0 / std::sqrt(b.n_lim));
      break;
    }
  }
  b.N_F = std::max<std::int64_t>(1, ceil_pulses(b.N_real));
  return b;
}

PhotonBudget photon_budget(double d, std::int64_t m_F, StrategyKind kind, double p_extra,
                           const LinkParams& link, const SecurityParams& sec, double g) {
  if (m_F < 1) throw std::invalid_argument("photon_budget: m_F must be >= 1");
  const ChannelDerived ch = channel_at(d, link);
  const double p_hat = effective_flip(ch.p_flip, p_extra);
  if (p_hat <= kProbTol) {
    throw Infeasible("photon_budget", "effective error rate is zero; estimation sample diverges");
  }
  if (p_hat >= sec.abort_threshold - kProbTol) {
    throw Infeasible("photon_budget", "effective error rate reaches the abort threshold");
  }
  const double a0 = min_estimation_sample(p_hat, sec);
  const double lf = required_raw_length(m_F, p_hat, sec);
  PhotonBudget b = photon_budget_from(lf, a0, ch.p_sift, kind, g, sec.confidence_factor);
  b.p_hat = p_hat;
  return b;
}

double max_extra_noise(double p_flip, const SecurityParams& sec) {
  if (p_flip >= sec.abort_threshold) return 0.0;
  return (sec.abort_threshold - p_flip) / (1.0 - 2.0 * p_flip);
}

double optimal_extra_noise(double d, std::int64_t m_F, StrategyKind kind, const LinkParams& link,
                           const SecurityParams& sec, double g) {
  const ChannelDerived ch = channel_at(d, link);
  if (ch.p_flip >= sec.abort_threshold) {
    throw Infeasible("optimal_extra_noise", "intrinsic QBER already at or above the abort threshold");
  }
  const double upper = max_extra_noise(ch.p_flip, sec) - 1e-12;

  auto objective = [&](double e) {
    try {
      return photon_budget(d, m_F, kind, e, link, sec, g).N_real;
    } catch (const Infeasible&) {
      return kInf;
    }
  };

  constexpr double kGridStep = 1e-4;
  double best_e = 0.0;
  double best_v = objective(0.0);
  for (int i = 1;; ++i) {
    const double e = i * kGridStep;
    if (e >= upper) break;
    const double v = objective(e);
    if (v < best_v) {
      best_v = v;
      best_e = e;
    }
  }
  if (!std::isfinite(best_v)) {
    throw Infeasible("optimal_extra_noise", "no feasible P_extra on the search grid");
  }

  // Golden-section refinement inside the neighbouring grid cells.
  double lo = std::max(0.0, best_e - kGridStep);
  double hi = std::min(upper, best_e + kGridStep);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  while (hi - lo > 1e-6) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = objective(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = objective(x2);
    }
  }
  const double refined = 0.5 * (lo + hi);
  const double refined_v = objective(refined);
  if (refined_v < best_v) {
    best_v = refined_v;
    best_e = refined;
  }
  if (objective(0.0) <= best_v) return 0.0;
  return best_e;
}

Strategy resolve_strategy(StrategyKind kind, double N, double p, double p_hat,
                          const SecurityParams& sec, double g) {
  switch (kind) {
    case StrategyKind::ConstantFraction: return Strategy::fraction(g);
    case StrategyKind::ConstantCount: return Strategy::count(min_estimation_sample(p_hat, sec));
    case StrategyKind::SqrtScaling:
      return Strategy::sqrt_scaling(min_estimation_sample(p_hat, sec) / std::sqrt(N * p));
  }
  return Strategy::fraction(g);
}

double success_probability(double d, double N, const Strategy& strategy, double p_extra,
                           const LinkParams& link, const SecurityParams& sec) {
  const ChannelDerived ch = channel_at(d, link);
  const double p_hat = effective_flip(ch.p_flip, p_extra);
  const EstimatorStats st = strategy_stats(N, ch.p_sift, p_hat, strategy);
  if (!(st.mean_sample > 0.0)) {
    throw std::invalid_argument("success_probability: zero estimation sample");
  }
  const double sigma_q = st.std_Qhat / (1.0 - 2.0 * p_extra);
  const double margin = sec.abort_threshold - ch.p_flip;
  if (sigma_q <= 0.0) return margin > 0.0 ? 1.0 : (margin == 0.0 ? 0.5 : 0.0);
  return normal_cdf(margin / sigma_q);
}

OutputStats expected_output(double N, double d, const Strategy& strategy, double p_extra,
                            const LinkParams& link, const SecurityParams& sec) {
  const ChannelDerived ch = channel_at(d, link);
  const double p_hat = effective_flip(ch.p_flip, p_extra);
  const EstimatorStats st = strategy_stats(N, ch.p_sift, p_hat, strategy);
  if (p_hat >= sec.abort_threshold) return {};
  const double factor = 1.0 - (1.0 + sec.max_reconciliation_efficiency) * binary_entropy(p_hat);
  if (factor <= 0.0) return {};
  const double k = st.mean_L * factor;
  OutputStats out;
  out.mean_m = k > 0.0 ? output_length_fixed_point(k, sec.extractor_epsilon) : 0;
  out.std_m = factor * st.std_L;
  return out;
}

KeyRateStats kbr_stats(double N, double d, const Strategy& strategy, double p_extra,
                       const LinkParams& link, const SecurityParams& sec) {
  const double ps = success_probability(d, N, strategy, p_extra, link, sec);
  const OutputStats out = expected_output(N, d, strategy, p_extra, link, sec);
  const double m = static_cast<double>(out.mean_m);
  KeyRateStats r;
  r.mean = ps * m / N;
  r.std = std::sqrt(ps * out.std_m * out.std_m + ps * (1.0 - ps) * m * m) / N;
  return r;
}

Plan plan(double d, std::int64_t m_F, StrategyKind kind, const LinkParams& link,
          const SecurityParams& sec, const PlanOptions& options) {
  if (m_F < 1) throw std::invalid_argument("plan: m_F must be >= 1");
  sec.validate();
  const ChannelDerived ch = channel_at(d, link);
  if (ch.p_flip >= sec.abort_threshold) {
    throw Infeasible("limit_distance", "distance is at or beyond the limit distance");
  }

  Plan pl;
  pl.d = d;
  pl.m_F = m_F;
  pl.p = ch.p_sift;
  pl.P_flip = ch.p_flip;
  pl.P_extra_opt = options.fixed_p_extra
                       ? *options.fixed_p_extra
                       : optimal_extra_noise(d, m_F, kind, link, sec, options.g);

  const PhotonBudget budget = photon_budget(d, m_F, kind, pl.P_extra_opt, link, sec, options.g);
  pl.strategy = budget.strategy;
  pl.N_F = budget.N_F;
  pl.l_F = budget.l_F;
  pl.A_0 = budget.A_0;
  pl.n_lim = budget.n_lim;
  pl.P_hat = budget.p_hat;

  const double N = static_cast<double>(pl.N_F);
  const OutputStats out = expected_output(N, d, pl.strategy, pl.P_extra_opt, link, sec);
  pl.expected_m = out.mean_m;
  pl.std_m = out.std_m;
  pl.P_success = success_probability(d, N, pl.strategy, pl.P_extra_opt, link, sec);
  const KeyRateStats kbr = kbr_stats(N, d, pl.strategy, pl.P_extra_opt, link, sec);
  pl.expected_KBR = kbr.mean;
  pl.std_KBR = kbr.std;
  return pl;
}

}  // namespace qkdplan
