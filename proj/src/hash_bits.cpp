#include "deepcam/hash_bits.hpp"

#include "deepcam/error.hpp"

namespace deepcam {

HashBits HashBits::from_string(std::string_view bits) {
  HashBits out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1')
      throw ConfigError("HashBits::from_string: invalid character at " + std::to_string(i));
    out.set(i, bits[i] == '1');
  }
  return out;
}

HashBits HashBits::prefix(std::size_t n) const {
  if (n > k_) throw DimensionError("HashBits::prefix: " + std::to_string(n) + " > " + std::to_string(k_));
  HashBits out(n);
  for (std::size_t w = 0; w < out.words_.size(); ++w) out.words_[w] = words_[w];
  if (const std::size_t rem = n % kWordBits; rem != 0) out.words_.back() &= (Word{1} << rem) - 1;
  return out;
}

HashBits HashBits::operator~() const {
  HashBits out = *this;
  for (auto& w : out.words_) w = ~w;
  if (const std::size_t rem = k_ % kWordBits; rem != 0 && !out.words_.empty())
    out.words_.back() &= (Word{1} << rem) - 1;
  return out;
}

std::string HashBits::to_string() const {
  std::string s(k_, '0');
  for (std::size_t i = 0; i < k_; ++i)
    if (test(i)) s[i] = '1';
  return s;
}

}  // namespace deepcam
