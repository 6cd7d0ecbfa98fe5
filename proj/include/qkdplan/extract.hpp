#pragma once

#include <cstdint>

#include "qkdplan/bitstring.hpp"
#include "qkdplan/link_model.hpp"

namespace qkdplan {

struct SecureLength {
  double k = 0.0;        // min-entropy lower bound, bits
  std::int64_t m = 0;    // output length
};

/// k = l (1 - (1 + f_max) h(p_hat)), m from the output-length fixed point.
SecureLength secure_length(double l, double p_hat, const SecurityParams& sec);

/// Toeplitz hash with T[i][j] = seed[j - i + m - 1]: the first row is
/// seed[m-1 .. l+m-2] and the first column, read bottom-up, is seed[0 .. m-1].
/// Evaluated 64 columns at a time without materializing T.
Bitstring toeplitz_extract(const Bitstring& input, const Bitstring& seed, std::size_t m);

/// Uniform seed of l + m - 1 bits (empty when m == 0).
Bitstring toeplitz_seed(std::size_t l, std::size_t m, std::uint64_t seed);

struct ExtractResult {
  Bitstring final_key;
  double k_bound = 0.0;
  Bitstring seed_bits;
};

/// Secure length followed by Toeplitz hashing of `key`.
ExtractResult privacy_amplification(const Bitstring& key, double p_hat, const SecurityParams& sec,
                                    std::uint64_t seed);

}  // namespace qkdplan
