#pragma once

#include <cmath>
#include <cstdint>

#include "jumplq/errors.hpp"

namespace jumplq {

namespace detail {

inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Inverse standard normal CDF (rational approximation, relative error below
// 2e-9 across (0,1)). Plenty for Monte Carlo purposes and branch-free enough
// to keep draws cheap.
inline double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("inverse_normal_cdf: p outside (0,1)");
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  if (p < plow) {
    const double u = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
           ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  }
  if (p > 1.0 - plow) {
    const double u = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
           ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  }
  const double u = p - 0.5;
  const double t = u * u;
  return (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) * u /
         (((((b[0] * t + b[1]) * t + b[2]) * t + b[3]) * t + b[4]) * t + 1.0);
}

// Counter-based splittable random stream. Streams are keyed by (seed, id);
// the k-th output is a hash of (key, k), so any path's draws are reproducible
// independently of evaluation order.
class SplitStream {
 public:
  SplitStream(uint64_t seed, uint64_t id)
      : key_(detail::mix64(seed) ^ detail::mix64(id * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL)) {}

  uint64_t next_u64() { return detail::mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  // Uniform on (0,1), 53-bit resolution, never exactly 0 or 1.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double normal() { return inverse_normal_cdf(uniform()); }

  // Poisson count by CDF inversion; consumes exactly one uniform.
  int poisson(double mean) {
    if (!(mean >= 0.0)) throw ArgumentError("poisson: negative mean");
    const double u = uniform();
    double p = std::exp(-mean);
    double cum = p;
    int k = 0;
    while (u > cum && k < 1000) {
      ++k;
      p *= mean / k;
      cum += p;
    }
    return k;
  }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace jumplq
