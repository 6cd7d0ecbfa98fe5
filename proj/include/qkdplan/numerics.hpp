#pragma once

#include <cstdint>
#include <functional>

namespace qkdplan {

/// h(x) in bits, with h(0) = h(1) = 0.
double binary_entropy(double x);

/// Standard normal CDF.
double normal_cdf(double x);

struct RootResult {
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// Bisection on [lo, hi]. Stops once |f(x)| <= tol or the bracket is
/// narrower than tol. Throws std::invalid_argument if f(lo) and f(hi)
/// have the same strict sign.
RootResult solve_bracketed(const std::function<double(double)>& f, double lo, double hi,
                           double tol, int max_iterations = 300);

/// Right-hand side of the output-length relation,
/// k - 6 - 4 log2(m / eps_max), for m >= 1.
double output_length_bound(double k, std::int64_t m, double eps_max);

/// Secure output length for min-entropy bound k: the integer solution of
/// m = floor(k - 6 - 4 log2(m / eps_max)), or 0 when no positive m fits.
///
/// When the floor relation has no exact integer solution (the iteration
/// settles on a 2-cycle), the smaller member of the cycle is returned; it is
/// the largest m still satisfying m <= k - 6 - 4 log2(m / eps_max).
std::int64_t output_length_fixed_point(double k, double eps_max);

/// True when m is an exact solution of the floor relation.
bool is_exact_output_length(std::int64_t m, double k, double eps_max);

}  // namespace qkdplan
