#include "qkdplan/extract.hpp"

#include <bit>
#include <stdexcept>

#include "qkdplan/numerics.hpp"
#include "qkdplan/rng.hpp"

namespace qkdplan {

SecureLength secure_length(double l, double p_hat, const SecurityParams& sec) {
  if (l < 0.0) throw std::invalid_argument("secure_length: negative input length");
  if (!(p_hat >= 0.0 && p_hat <= 0.5)) throw std::invalid_argument("secure_length: p_hat outside [0, 1/2]");
  SecureLength out;
  out.k = l * (1.0 - (1.0 + sec.max_reconciliation_efficiency) * binary_entropy(p_hat));
  // Q_t sits marginally below the exact zero of the entropy factor; no key past it.
  if (out.k > 0.0 && p_hat < sec.abort_threshold) {
    out.m = output_length_fixed_point(out.k, sec.extractor_epsilon);
  }
  return out;
}

Bitstring toeplitz_extract(const Bitstring& input, const Bitstring& seed, std::size_t m) {
  if (m == 0) return {};
  const std::size_t l = input.size();
  if (m > l) throw std::invalid_argument("toeplitz_extract: m exceeds input length");
  if (seed.size() != l + m - 1) throw std::invalid_argument("toeplitz_extract: seed must have l + m - 1 bits");

  const std::vector<std::uint64_t> x = input.pack();
  std::vector<std::uint64_t> s = seed.pack();
  s.push_back(0);  // lets the shifted read below touch one word past the end

  // 64 seed bits starting at bit offset `off`.
  auto seed_window = [&](std::size_t off) {
    const std::size_t w = off / 64;
    const unsigned r = off % 64;
    if (r == 0) return s[w];
    return (s[w] >> r) | (s[w + 1] << (64 - r));
  };

  Bitstring out(m);
  for (std::size_t i = 0; i < m; ++i) {
    // Row i multiplies input[j] by seed[j + m - 1 - i].
    const std::size_t base = m - 1 - i;
    std::uint64_t acc = 0;
    for (std::size_t w = 0; w < x.size(); ++w) acc ^= x[w] & seed_window(base + 64 * w);
    out.set(i, std::popcount(acc) & 1);
  }
  return out;
}

Bitstring toeplitz_seed(std::size_t l, std::size_t m, std::uint64_t seed) {
  if (m == 0) return {};
  Rng rng(seed);
  Bitstring s(l + m - 1);
  for (std::size_t i = 0; i < s.size(); ++i) s.set(i, rng.bit());
  return s;
}

ExtractResult privacy_amplification(const Bitstring& key, double p_hat, const SecurityParams& sec,
                                    std::uint64_t seed) {
  const SecureLength sl = secure_length(static_cast<double>(key.size()), p_hat, sec);
  ExtractResult r;
  r.k_bound = sl.k;
  const auto m = static_cast<std::size_t>(sl.m);
  r.seed_bits = toeplitz_seed(key.size(), m, seed);
  r.final_key = toeplitz_extract(key, r.seed_bits, m);
  return r;
}

}  // namespace qkdplan
