#include "qkdplan/bitstring.hpp"

#include <algorithm>
#include <stdexcept>

namespace qkdplan {

Bitstring::Bitstring(std::initializer_list<int> bits) {
  bits_.reserve(bits.size());
  for (int b : bits) bits_.push_back(b ? 1 : 0);
}

std::vector<std::uint64_t> Bitstring::pack() const {
  std::vector<std::uint64_t> words((bits_.size() + 63) / 64, 0);
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    words[i / 64] |= static_cast<std::uint64_t>(bits_[i]) << (i % 64);
  }
  return words;
}

std::string Bitstring::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve((bits_.size() + 3) / 4);
  for (std::size_t i = 0; i < bits_.size(); i += 4) {
    unsigned nibble = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      nibble <<= 1;
      if (i + j < bits_.size()) nibble |= bits_[i + j];
    }
    out.push_back(kDigits[nibble]);
  }
  return out;
}

std::size_t Bitstring::count_ones() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::size_t hamming_distance(const Bitstring& a, const Bitstring& b) {
  if (a.size() != b.size()) throw std::invalid_argument("hamming_distance: length mismatch");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

Bitstring operator^(const Bitstring& a, const Bitstring& b) {
  if (a.size() != b.size()) throw std::invalid_argument("xor: length mismatch");
  Bitstring out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.set(i, a[i] ^ b[i]);
  return out;
}

}  // namespace qkdplan
