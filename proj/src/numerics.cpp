#include "qkdplan/numerics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qkdplan {

double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("binary_entropy: x outside [0, 1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

RootResult solve_bracketed(const std::function<double(double)>& f, double lo, double hi,
                           double tol, int max_iterations) {
  if (!(lo <= hi)) throw std::invalid_argument("solve_bracketed: lo > hi");
  double f_lo = f(lo);
  const double f_hi = f(hi);
  if (f_lo == 0.0) return {lo, 0.0, 0};
  if (f_hi == 0.0) return {hi, 0.0, 0};
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    throw std::invalid_argument("solve_bracketed: interval does not bracket a root");
  }
  RootResult r{0.5 * (lo + hi), 0.0, 0};
  for (int it = 1; it <= max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = f(mid);
    r = {mid, f_mid, it};
    if (std::fabs(f_mid) <= tol || (hi - lo) <= tol || mid == lo || mid == hi) break;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return r;
}

double output_length_bound(double k, std::int64_t m, double eps_max) {
  return k - 6.0 - 4.0 * std::log2(static_cast<double>(m) / eps_max);
}

bool is_exact_output_length(std::int64_t m, double k, double eps_max) {
  if (m < 1) return false;
  return static_cast<std::int64_t>(std::floor(output_length_bound(k, m, eps_max))) == m;
}

std::int64_t output_length_fixed_point(double k, double eps_max) {
  if (!std::isfinite(k)) return 0;
  // Slack of the relation on the reals; strictly decreasing and convex in m.
  auto slack = [&](double m) { return k - 6.0 - 4.0 * std::log2(m / eps_max) - m; };
  if (slack(1.0) < 0.0) return 0;

  // Damped iteration on the continuous relaxation: each step moves m by the
  // slack divided by the local steepness, which keeps the iterate on the
  // feasible side once it gets there.
  double m = std::max(1.0, std::floor(k));
  for (int it = 0; it < 200; ++it) {
    const double step = slack(m) / (1.0 + 4.0 / (m * std::numbers::ln2));
    m = std::max(1.0, m + step);
    if (std::fabs(step) < 1e-9) break;
  }

  // Integer polish: iterate m <- floor(rhs(m)) until stationary or a 2-cycle.
  auto next = [&](std::int64_t x) {
    return static_cast<std::int64_t>(std::floor(output_length_bound(k, x, eps_max)));
  };
  std::int64_t cur = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(m)));
  std::int64_t prev = -1;
  for (int it = 0; it < 200; ++it) {
    const std::int64_t nxt = std::max<std::int64_t>(1, next(cur));
    if (nxt == cur) break;
    if (nxt == prev) {
      cur = std::min(cur, nxt);
      break;
    }
    prev = cur;
    cur = nxt;
  }

  // Verify against the defining inequality and settle on the largest m with
  // m <= rhs(m). Floating error can leave cur one step off.
  auto fits = [&](std::int64_t x) {
    return x >= 1 && static_cast<double>(x) <= output_length_bound(k, x, eps_max);
  };
  while (cur > 1 && !fits(cur)) --cur;
  while (fits(cur + 1)) ++cur;
  return fits(cur) ? cur : 0;
}

}  // namespace qkdplan
