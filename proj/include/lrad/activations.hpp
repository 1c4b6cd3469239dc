#pragma once

#include <cmath>
#include <numbers>

namespace lrad {

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

// subgradient at 0 taken as 0
inline double relu_prime(double x) { return x > 0.0 ? 1.0 : 0.0; }

// standard normal CDF, erf-based (not the tanh approximation)
inline double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double gelu(double x) { return x * std_normal_cdf(x); }

inline double gelu_prime(double x) { return std_normal_cdf(x) + x * std_normal_pdf(x); }

}  // namespace lrad
