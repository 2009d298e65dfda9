#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace freeconv {

// Philox4x32-10 counter generator.  Streams are addressed by a 64-bit key
// built from (seed, purpose tag), so every (seed, purpose) pair draws from a
// disjoint substream and runs replay bit-exactly regardless of scheduling.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream) : key_{lo32(seed), hi32(seed)} {
    ctr_ = {0u, 0u, lo32(stream), hi32(stream)};
    cache_pos_ = 4;
  }

  static std::uint64_t stream_id(std::string_view purpose, std::uint64_t index = 0) {
    // FNV-1a over the tag, folded with the index.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : purpose) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= index + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
  }

  std::uint32_t next_u32() {
    if (cache_pos_ == 4) {
      cache_ = block(ctr_, key_);
      bump_counter();
      cache_pos_ = 0;
    }
    return cache_[cache_pos_++];
  }

  std::uint64_t next_u64() {
    std::uint64_t lo = next_u32();
    std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform on (0,1); never returns 0 or 1.
  double next_double() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  using Block = std::array<std::uint32_t, 4>;

  static Block block(Block ctr, std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ull * ctr[0];
      const std::uint64_t p1 = 0xCD9E8D57ull * ctr[2];
      ctr = {hi32(p1) ^ ctr[1] ^ key[0], lo32(p1), hi32(p0) ^ ctr[3] ^ key[1], lo32(p0)};
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }

 private:
  static std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
  static std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

  void bump_counter() {
    if (++ctr_[0] == 0 && ++ctr_[1] == 0) ++ctr_[2];
  }

  std::array<std::uint32_t, 2> key_;
  Block ctr_{};
  Block cache_{};
  int cache_pos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace freeconv
