#include "deepcam/cam.hpp"

#include <algorithm>
#include <string>

#include "deepcam/error.hpp"

namespace deepcam {

bool is_allowed_rows(std::size_t rows) noexcept {
  return rows == 64 || rows == 128 || rows == 256 || rows == 512;
}

bool is_allowed_word_bits(std::size_t bits) noexcept {
  return bits == 256 || bits == 512 || bits == 768 || bits == 1024;
}

void CamConfig::validate() const {
  if (!is_allowed_rows(rows))
    throw ConfigError("CAM rows must be 64, 128, 256 or 512 (got " + std::to_string(rows) + ")");
  if (hd_bucket < 1) throw ConfigError("CAM hd_bucket must be >= 1");
}

CamState::CamState(CamConfig config) : config_(config) {
  config_.validate();
  storage_.assign(config_.rows * kRowWords, 0);
  valid_.assign(config_.rows, 0);
}

void CamState::set_word_length(std::size_t bits) {
  if (!is_allowed_word_bits(bits))
    throw ConfigError("CAM word length must be 256, 512, 768 or 1024 (got " +
                      std::to_string(bits) + ")");
  word_bits_ = bits;
  events_.push_back({CamEvent::Kind::kReconfigure, static_cast<std::uint32_t>(bits), 0, tile_});
}

void CamState::write_row(std::size_t row, const HashBits& bits) {
  if (row >= config_.rows)
    throw DimensionError("CAM write_row: row " + std::to_string(row) + " out of range (" +
                         std::to_string(config_.rows) + " rows)");
  if (bits.size() > CamConfig::kMaxWordBits)
    throw DimensionError("CAM write_row: " + std::to_string(bits.size()) + " bits exceed 1024");
  if (searched_since_write_) {
    ++tile_;
    searched_since_write_ = false;
  }
  auto dst = storage_.begin() + static_cast<std::ptrdiff_t>(row * kRowWords);
  std::fill(dst, dst + kRowWords, 0);
  std::copy(bits.words().begin(), bits.words().end(), dst);
  if (!valid_[row]) {
    valid_[row] = 1;
    ++valid_count_;
  }
  events_.push_back({CamEvent::Kind::kWriteRow, static_cast<std::uint32_t>(word_bits_), 1, tile_});
}

void CamState::invalidate_all() noexcept {
  std::fill(valid_.begin(), valid_.end(), 0);
  valid_count_ = 0;
}

void CamState::distances(const HashBits& key, std::vector<SearchHit>& out) const {
  if (key.size() != word_bits_)
    throw DimensionError("CAM search: key of " + std::to_string(key.size()) +
                         " bits vs active word length " + std::to_string(word_bits_));
  out.clear();
  const auto key_words = key.words();
  for (std::size_t r = 0; r < config_.rows; ++r) {
    if (!valid_[r]) continue;
    std::size_t hd = hamming_words(key_words, row_words(r), word_bits_);
    if (config_.hd_bucket > 1) hd = (hd / config_.hd_bucket) * config_.hd_bucket;
    out.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(hd)});
  }
}

void CamState::search(const HashBits& key, std::vector<SearchHit>& out) {
  distances(key, out);
  searched_since_write_ = true;
  events_.push_back({CamEvent::Kind::kSearch, static_cast<std::uint32_t>(word_bits_),
                     static_cast<std::uint32_t>(valid_count_), tile_});
}

std::vector<SearchHit> CamState::search(const HashBits& key) {
  std::vector<SearchHit> out;
  search(key, out);
  return out;
}

std::span<const HashBits::Word> CamState::row_words(std::size_t row) const {
  if (row >= config_.rows) throw DimensionError("CAM row_words: row out of range");
  return {storage_.data() + row * kRowWords, kRowWords};
}

std::vector<CamEvent> CamState::take_events() noexcept {
  std::vector<CamEvent> out;
  out.swap(events_);
  return out;
}

}  // namespace deepcam
