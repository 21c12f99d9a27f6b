#pragma once

#include <cmath>
#include <cstdint>

namespace kramers {

// Philox4x32-10 counter-based generator.  A stream is keyed by
// (seed, stream index) so every Monte Carlo path owns an independent,
// reproducible sequence regardless of scheduling order.
struct Philox4x32 {
  uint32_t key[2];
  uint32_t ctr[4];

  Philox4x32(uint64_t seed, uint64_t stream) {
    key[0] = static_cast<uint32_t>(seed);
    key[1] = static_cast<uint32_t>(seed >> 32);
    ctr[0] = 0;
    ctr[1] = 0;
    ctr[2] = static_cast<uint32_t>(stream);
    ctr[3] = static_cast<uint32_t>(stream >> 32);
  }

  static void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    uint64_t p = static_cast<uint64_t>(a) * b;
    hi = static_cast<uint32_t>(p >> 32);
    lo = static_cast<uint32_t>(p);
  }

  // One 10-round block; output 4x32 bits.
  void block(uint32_t out[4]) {
    uint32_t k0 = key[0], k1 = key[1];
    uint32_t x0 = ctr[0], x1 = ctr[1], x2 = ctr[2], x3 = ctr[3];
    for (int round = 0; round < 10; ++round) {
      uint32_t hi0, lo0, hi1, lo1;
      mulhilo(0xD2511F53u, x0, hi0, lo0);
      mulhilo(0xCD9E8D57u, x2, hi1, lo1);
      uint32_t y0 = hi1 ^ x1 ^ k0;
      uint32_t y1 = lo1;
      uint32_t y2 = hi0 ^ x3 ^ k1;
      uint32_t y3 = lo0;
      x0 = y0; x1 = y1; x2 = y2; x3 = y3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out[0] = x0; out[1] = x1; out[2] = x2; out[3] = x3;
    if (++ctr[0] == 0) ++ctr[1];
  }
};

/// Stream of standard normals backed by Philox + Box-Muller.
class NormalStream {
 public:
  NormalStream(uint64_t seed, uint64_t stream) : gen_(seed, stream) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    uint32_t w[4];
    gen_.block(w);
    // (0,1] and [0,1) uniforms from two 64-bit words.
    uint64_t a = (static_cast<uint64_t>(w[0]) << 32) | w[1];
    uint64_t b = (static_cast<uint64_t>(w[2]) << 32) | w[3];
    double u1 = ((a >> 11) + 1) * 0x1.0p-53;  // never zero
    double u2 = (b >> 11) * 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 6.283185307179586476925287 * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  /// Uniform in [0,1).
  double next_uniform() {
    uint32_t w[4];
    gen_.block(w);
    uint64_t a = (static_cast<uint64_t>(w[0]) << 32) | w[1];
    return (a >> 11) * 0x1.0p-53;
  }

 private:
  Philox4x32 gen_;
  bool have_spare_ = false;
  double spare_ = 0;
};

}  // namespace kramers
