#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace qkdplan {

/// Ordered sequence of bits, one byte per bit. Keys here are at most a few
/// million bits, so direct indexing wins over packing.
class Bitstring {
 public:
  Bitstring() = default;
  explicit Bitstring(std::size_t n, std::uint8_t fill = 0) : bits_(n, fill ? 1 : 0) {}
  Bitstring(std::initializer_list<int> bits);

  std::size_t size() const noexcept { return bits_.size(); }
  bool empty() const noexcept { return bits_.empty(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
  void flip(std::size_t i) { bits_[i] ^= 1; }
  void push_back(bool v) { bits_.push_back(v ? 1 : 0); }
  void reserve(std::size_t n) { bits_.reserve(n); }

  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  /// Little-endian 64-bit packing; unused high bits of the last word are zero.
  std::vector<std::uint64_t> pack() const;

  /// MSB-first hex, final nibble zero-padded. Empty string for empty input.
  std::string to_hex() const;

  std::size_t count_ones() const;

  friend bool operator==(const Bitstring&, const Bitstring&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

std::size_t hamming_distance(const Bitstring& a, const Bitstring& b);
Bitstring operator^(const Bitstring& a, const Bitstring& b);

}  // namespace qkdplan
