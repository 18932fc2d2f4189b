#pragma once

#include <cmath>
#include <cstdint>

#include "mps/normal.hpp"

namespace mps::rng {

using u64 = std::uint64_t;

// Philox 4x64-10 block function (stateless counter-based generator).
inline void philox4x64_10(const u64 ctr[4], const u64 key[2], u64 out[4]) {
  constexpr u64 kMul0 = 0xD2E7470EE14C6C93ULL;
  constexpr u64 kMul1 = 0xCA5A826395121157ULL;
  constexpr u64 kWeyl0 = 0x9E3779B97F4A7C15ULL;
  constexpr u64 kWeyl1 = 0xBB67AE8584CAA73BULL;
  u64 c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
  u64 k0 = key[0], k1 = key[1];
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    const auto p0 = static_cast<unsigned __int128>(kMul0) * c0;
    const auto p1 = static_cast<unsigned __int128>(kMul1) * c2;
    const u64 n0 = static_cast<u64>(p1 >> 64) ^ c1 ^ k0;
    const u64 n1 = static_cast<u64>(p1);
    const u64 n2 = static_cast<u64>(p0 >> 64) ^ c3 ^ k1;
    const u64 n3 = static_cast<u64>(p0);
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
  }
  out[0] = c0;
  out[1] = c1;
  out[2] = c2;
  out[3] = c3;
}

// One tag per sampling site. Streams are keyed by (seed, tag, iteration,
// entity), so the numbers an entity consumes never depend on scheduling.
enum class Stream : u64 {
  kStickWeights = 1,
  kAssignments = 2,
  kLatents = 3,
  kItemParams = 4,
  kIdealPoints = 5,
  kAlpha = 6,
  kInitState = 7,
  kKMeans = 8,
  kPcaFallback = 9,
  kSimAssign = 10,
  kSimTheta = 11,
  kSimItems = 12,
  kSimResponse = 13,
  kSimMissing = 14,
  kRegLatent = 15,
  kRegCoef = 16,
  kGapNull = 17,
  kGeneric = 18,
};

class SubStream {
 public:
  SubStream(u64 seed, Stream tag, u64 iteration, u64 entity)
      : key_{seed, kKeySalt},
        ctr_{0, entity, iteration, static_cast<u64>(tag)} {}

  u64 next_u64() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return norm_quantile(uniform()); }

  double exponential() { return -std::log(uniform()); }

  // Uniform integer on [0, n), n >= 1.
  u64 uniform_int(u64 n) {
    const u64 reject = (0 - n) % n;  // 2^64 mod n
    u64 x;
    do {
      x = next_u64();
    } while (x < reject);
    return x % n;
  }

  // Gamma(shape) with unit rate; Marsaglia-Tsang, boosted for shape < 1.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    const double s = x + y;
    return s > 0.0 ? x / s : 0.5;
  }

  // Z ~ N(0,1) conditional on Z >= bound. Inverse CDF up to bound 4,
  // exponential rejection (Robert 1995) in the far tail.
  double trunc_std_normal_lower(double bound) {
    if (bound <= 4.0) {
      const double tail = norm_cdf(-bound);
      const double z = -norm_quantile(uniform() * tail);
      return z < bound ? bound : z;
    }
    const double lam = 0.5 * (bound + std::sqrt(bound * bound + 4.0));
    for (;;) {
      const double z = bound + exponential() / lam;
      const double diff = z - lam;
      if (std::log(uniform()) <= -0.5 * diff * diff) return z;
    }
  }

 private:
  static constexpr u64 kKeySalt = 0x6d70732d69727431ULL;

  void refill() {
    ctr_[0] = block_++;
    philox4x64_10(ctr_, key_, buf_);
    pos_ = 0;
  }

  u64 key_[2];
  u64 ctr_[4];
  u64 buf_[4]{};
  u64 block_ = 0;
  int pos_ = 4;
};

}  // namespace mps::rng
