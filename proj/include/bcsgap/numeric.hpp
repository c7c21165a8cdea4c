#pragma once

// Overflow-safe elementary functions used by the gap and thermodynamic
// integrands, plus a compensated accumulator.

#include <cmath>
#include <numbers>
#include <span>

namespace bcsgap::numeric {

inline constexpr double kExpCutoff = 700.0;
inline constexpr double kTanhSaturation = 20.0;

/// exp(-x) for x >= 0; exactly zero past the cutoff.
inline double exp_neg(double x) {
  if (x > kExpCutoff) return 0.0;
  return std::exp(-x);
}

/// tanh saturating to 1 for arguments above 20.
inline double tanh_sat(double x) {
  if (x > kTanhSaturation) return 1.0;
  if (x < -kTanhSaturation) return -1.0;
  return std::tanh(x);
}

/// 1 - tanh(x) for x >= 0 without cancellation.
inline double one_minus_tanh(double x) {
  const double e = exp_neg(2.0 * x);
  return 2.0 * e / (1.0 + e);
}

/// 1 / cosh^2(x).
inline double sech2(double x) {
  const double e = exp_neg(2.0 * std::abs(x));
  const double d = 1.0 + e;
  return 4.0 * e / (d * d);
}

/// Fermi factor 1 / (e^x + 1) for x >= 0.
inline double fermi(double x) {
  const double e = exp_neg(x);
  return e / (1.0 + e);
}

/// ln(1 + e^{-x}) for x >= 0.
inline double log1p_exp_neg(double x) { return std::log1p(exp_neg(x)); }

/// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double sup_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double sup_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline constexpr double kEulerGamma = std::numbers::egamma;
inline constexpr double kPi = std::numbers::pi;

}  // namespace bcsgap::numeric
