#pragma once

#include <cmath>
#include <cstdint>

namespace f2ocl {

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Distinct stream label for (purpose, index) pairs, e.g. per-class draws.
inline std::uint64_t stream_id(std::uint64_t major, std::uint64_t minor) {
  return mix64(major * 0xd1342543de82ef95ULL) ^ mix64(minor + 0x632be59bd9b4e019ULL);
}

// Counter-based generator: draw i of a stream is a pure function of
// (seed, stream, i), so values never depend on construction order.
class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : base_(mix64(seed ^ mix64(stream ^ 0x51cafe8a91d5e3f7ULL))) {}

  std::uint64_t next_u64() {
    return mix64(base_ + ++counter_ * 0x9e3779b97f4a7c15ULL);
  }

  // uniform in (0, 1]
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // standard normal via Box-Muller, pairs cached
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = two_pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double next_gaussian(double stddev) { return stddev * next_gaussian(); }

private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace f2ocl
