#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qkdplan/bitstring.hpp"
#include "qkdplan/link_model.hpp"

namespace qkdplan {

/// One disclosed parity bit. Binary-search queries carry the index of the
/// top-level block they subdivide.
struct ParityDisclosure {
  int pass = 0;
  std::size_t block_index = 0;
  std::uint8_t parity_A = 0;
  std::uint8_t parity_B = 0;
};

struct ReconcileResult {
  Bitstring corrected_B;
  std::int64_t n_exp = 0;     // parity bits revealed
  double f_realized = 0.0;    // n_exp / (l h(Q_ref))
  bool verified = false;      // corrected_B == key_A
  std::int64_t corrections = 0;
  std::size_t first_block_size = 0;
};

inline constexpr int kCascadePasses = 4;
inline constexpr std::size_t kCascadeMinLength = 16;

/// Four-pass Cascade. Pass one uses blocks of ceil(0.73 / Q_ref) bits in the
/// original order, each later pass doubles the block size over a fresh
/// shuffle. Every flipped bit re-opens the blocks containing it in the
/// earlier passes. Each parity sent from A to B counts as one leaked bit.
ReconcileResult cascade(const Bitstring& key_A, const Bitstring& key_B, double q_ref,
                        std::uint64_t seed, std::vector<ParityDisclosure>* transcript = nullptr);

/// f_max * l * h(p_hat).
double leakage_upper_bound(double l, double p_hat, const SecurityParams& sec);

/// CSV with header pass,block_index,parity_A,parity_B.
void write_parity_transcript(std::ostream& out, const std::vector<ParityDisclosure>& transcript);

}  // namespace qkdplan
