#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "depthgan/common.hpp"

namespace depthgan {

// xoshiro256** with a Box-Muller normal cache. The full state (including the
// cached spare normal) is plain data so it round-trips bitwise through
// checkpoints; std::mt19937 + std::normal_distribution hide state behind
// iostream formatting, which is why we do not use them here.
class Rng {
 public:
  explicit Rng(uint64_t seed) { reseed(seed); }

  void reseed(uint64_t seed) {
    // splitmix64 expansion of the seed into the xoshiro state.
    uint64_t x = seed;
    for (auto& si : s_) {
      x += 0x9e3779b97f4a7c15ULL;
      uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      si = z ^ (z >> 31);
    }
    has_spare_ = false;
    spare_ = 0.0;
  }

  uint64_t next_u64() {
    auto rotl = [](uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  Scalar uniform() { return static_cast<Scalar>(next_u64() >> 11) * 0x1.0p-53; }

  Scalar uniform(Scalar lo, Scalar hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t uniform_index(uint64_t n) { return next_u64() % n; }

  Scalar normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    Scalar u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const Scalar u2 = uniform();
    const Scalar r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

  // Derives an independent stream (for per-epoch shuffles etc.).
  uint64_t derive(uint64_t salt) const {
    uint64_t z = s_[0] ^ (salt + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  struct State {
    std::array<uint64_t, 4> s;
    uint64_t spare_bits;
    uint8_t has_spare;
  };

  State state() const {
    State st;
    st.s = s_;
    static_assert(sizeof(spare_) == sizeof(st.spare_bits));
    std::memcpy(&st.spare_bits, &spare_, sizeof(spare_));
    st.has_spare = has_spare_ ? 1 : 0;
    return st;
  }

  void set_state(const State& st) {
    s_ = st.s;
    std::memcpy(&spare_, &st.spare_bits, sizeof(spare_));
    has_spare_ = st.has_spare != 0;
  }

 private:
  std::array<uint64_t, 4> s_{};
  Scalar spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace depthgan
