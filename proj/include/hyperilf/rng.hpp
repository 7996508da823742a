#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace rng {

// splitmix64 + Box-Muller. std::normal_distribution is implementation-defined,
// which would break bit-identical reruns across toolchains; this keeps every
// random stream reproducible from its seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform on (0,1)
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  std::vector<double> gaussian_vec(int n) {
    std::vector<double> v(n);
    for (auto& x : v) x = gaussian();
    return v;
  }

  // uniform direction on the unit sphere
  std::vector<double> unit_vec(int n) {
    for (;;) {
      std::vector<double> v = gaussian_vec(n);
      double s = 0.0;
      for (double x : v) s += x * x;
      if (s > 1e-30) {
        const double inv = 1.0 / std::sqrt(s);
        for (auto& x : v) x *= inv;
        return v;
      }
    }
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rng
