#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace deepcam {

/// Packed bit sequence of fixed length k. Bit i lives in word i/64 at
/// position i%64; padding bits past k are always zero.
class HashBits {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  HashBits() = default;
  explicit HashBits(std::size_t k) : k_(k), words_((k + kWordBits - 1) / kWordBits, 0) {}

  /// Parses a string of '0'/'1' characters, bit 0 first.
  static HashBits from_string(std::string_view bits);

  std::size_t size() const noexcept { return k_; }
  std::span<const Word> words() const noexcept { return words_; }

  bool test(std::size_t i) const noexcept {
    return (words_[i / kWordBits] >> (i % kWordBits)) & 1u;
  }
  void set(std::size_t i, bool value) noexcept {
    const Word mask = Word{1} << (i % kWordBits);
    if (value)
      words_[i / kWordBits] |= mask;
    else
      words_[i / kWordBits] &= ~mask;
  }

  /// First `n` bits as a new sequence.
  HashBits prefix(std::size_t n) const;

  /// Bitwise complement over the k valid bits.
  HashBits operator~() const;

  std::string to_string() const;

  friend bool operator==(const HashBits&, const HashBits&) = default;

 private:
  std::size_t k_ = 0;
  std::vector<Word> words_;
};

/// Hamming distance over the first `bits` positions of two word spans.
inline std::size_t hamming_words(std::span<const HashBits::Word> a,
                                 std::span<const HashBits::Word> b, std::size_t bits) noexcept {
  const std::size_t full = bits / HashBits::kWordBits;
  std::size_t count = 0;
  for (std::size_t w = 0; w < full; ++w) count += std::popcount(a[w] ^ b[w]);
  if (const std::size_t rem = bits % HashBits::kWordBits; rem != 0) {
    const HashBits::Word mask = (HashBits::Word{1} << rem) - 1;
    count += std::popcount((a[full] ^ b[full]) & mask);
  }
  return count;
}

}  // namespace deepcam
