#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "deepcam/hash_bits.hpp"

namespace deepcam {

/// Geometry of one dynamic-size CAM array: `rows` words of up to four
/// 256-bit chunks joined by enable gates.
struct CamConfig {
  static constexpr std::size_t kChunkBits = 256;
  static constexpr std::size_t kMaxChunks = 4;
  static constexpr std::size_t kMaxWordBits = kChunkBits * kMaxChunks;

  std::size_t rows = 64;
  /// Sense-amplifier resolution in hamming-distance units. 1 reports exact
  /// distances; b > 1 reports floor(hd / b) * b.
  std::size_t hd_bucket = 1;

  /// Throws ConfigError unless rows is one of 64/128/256/512 and hd_bucket >= 1.
  void validate() const;
};

bool is_allowed_rows(std::size_t rows) noexcept;
bool is_allowed_word_bits(std::size_t bits) noexcept;

struct CamEvent {
  enum class Kind : std::uint8_t { kReconfigure, kWriteRow, kSearch };

  Kind kind;
  std::uint32_t word_bits;
  /// write: 1; search: number of valid rows compared; reconfigure: 0.
  std::uint32_t rows_touched;
  /// Load epoch: incremented by the first write that follows a search.
  std::uint32_t tile;

  friend bool operator==(const CamEvent&, const CamEvent&) = default;
};

struct SearchHit {
  std::uint32_t row;
  std::uint32_t hd;

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// Behavioral CAM. Single writer; the const `distances` query may be called
/// concurrently on an unmodified instance.
class CamState {
 public:
  explicit CamState(CamConfig config);

  const CamConfig& config() const noexcept { return config_; }
  std::size_t rows() const noexcept { return config_.rows; }
  std::size_t word_bits() const noexcept { return word_bits_; }
  std::size_t valid_rows() const noexcept { return valid_count_; }
  bool is_valid(std::size_t row) const { return valid_.at(row) != 0; }

  /// Enables the first bits/256 chunks. Stored bits are untouched.
  void set_word_length(std::size_t bits);

  /// Stores `bits` in the prefix of `row`, zero-filling the rest.
  void write_row(std::size_t row, const HashBits& bits);

  /// Marks every row invalid. Storage is not cleared and no event is logged.
  void invalidate_all() noexcept;

  /// Row-parallel hamming search over the active word; logs one search event.
  std::vector<SearchHit> search(const HashBits& key);
  void search(const HashBits& key, std::vector<SearchHit>& out);

  /// Same result as search() without logging.
  void distances(const HashBits& key, std::vector<SearchHit>& out) const;

  /// Raw stored words of one row (all 1024 bits).
  std::span<const HashBits::Word> row_words(std::size_t row) const;

  const std::vector<CamEvent>& events() const noexcept { return events_; }
  std::vector<CamEvent> take_events() noexcept;

 private:
  static constexpr std::size_t kRowWords = CamConfig::kMaxWordBits / HashBits::kWordBits;

  CamConfig config_;
  std::size_t word_bits_ = CamConfig::kChunkBits;
  std::vector<HashBits::Word> storage_;
  std::vector<std::uint8_t> valid_;
  std::size_t valid_count_ = 0;
  std::uint32_t tile_ = 0;
  bool searched_since_write_ = false;
  std::vector<CamEvent> events_;
};

}  // namespace deepcam
