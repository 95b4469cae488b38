#pragma once

#include <cstdint>
#include <string_view>

namespace subqba {

// Counter-based PRNG. A stream is identified by a 64-bit key; output i is a
// pure function of (key, i), so streams never interfere and a consumer can be
// added without perturbing anyone else's draws.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t key_combine(uint64_t key, uint64_t v) {
  return mix64(key ^ (v + 0x9e3779b97f4a7c15ULL + (key << 6) + (key >> 2)));
}

inline uint64_t key_combine(uint64_t key, std::string_view tag) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return key_combine(key, h);
}

class RngStream {
 public:
  explicit RngStream(uint64_t key) : key_(key) {}

  uint64_t next() { return mix64(key_ + 0x632be59bd9b4e019ULL * ++ctr_); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_unit() < p; }

  uint8_t bit() { return static_cast<uint8_t>(next() >> 63); }

  // Uniform in [0, bound). Rejection sampling keeps it unbiased.
  uint32_t below(uint32_t bound) {
    const uint64_t span = uint64_t{0xffffffffffffffffULL} - (uint64_t{0xffffffffffffffffULL} % bound + 1) % bound;
    for (;;) {
      uint64_t v = next();
      if (v <= span || span == 0xffffffffffffffffULL) return static_cast<uint32_t>(v % bound);
    }
  }

  uint64_t position() const { return ctr_; }

 private:
  uint64_t key_;
  uint64_t ctr_ = 0;
};

}  // namespace subqba
