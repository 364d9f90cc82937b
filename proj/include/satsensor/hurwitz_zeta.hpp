#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace satsensor {

namespace detail {
// B_{2j} / (2j)!, j = 1..8
inline constexpr std::array<double, 8> kBernoulliOverFactorial = {
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
};
inline constexpr int kZetaShift = 16;
}  // namespace detail

/// Hurwitz zeta function zeta(s, a) = sum_{n>=0} (a + n)^{-s} for real s != 1
/// and a > 0 (analytically continued for s < 1).
///
/// Euler-Maclaurin summation: the first 16 terms are summed explicitly, the
/// remainder is the integral, the half-term and eight Bernoulli corrections
/// evaluated at x = a + 16. For s = 1/2 the truncation error of the tail is
/// below 1e-21 for every a > 0, so the result is limited by rounding only.
inline double hurwitz_zeta(double s, double a) {
  if (!(a > 0.0)) throw std::domain_error("hurwitz_zeta: a must be positive");
  if (s == 1.0) throw std::domain_error("hurwitz_zeta: pole at s = 1");

  double head = 0.0;
  for (int n = detail::kZetaShift - 1; n >= 0; --n) head += std::pow(a + n, -s);

  const double x = a + detail::kZetaShift;
  double tail = std::pow(x, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(x, -s);
  // j-th correction: B_2j/(2j)! * s(s+1)...(s+2j-2) * x^{-s-2j+1}
  double factor = s * std::pow(x, -s - 1.0);
  const double inv_x2 = 1.0 / (x * x);
  for (std::size_t j = 0; j < detail::kBernoulliOverFactorial.size(); ++j) {
    tail += detail::kBernoulliOverFactorial[j] * factor;
    const double k = 2.0 * static_cast<double>(j + 1);
    factor *= (s + k - 1.0) * (s + k) * inv_x2;
  }
  return head + tail;
}

/// zeta_H(1/2, a). The confinement model only needs a in (0, 1]; larger a
/// is accepted as well.
inline double hurwitz_zeta_half(double a) {
  if (!(a > 0.0))
    throw std::domain_error("hurwitz_zeta_half: a must be positive (a <= 0 is the channel-opening singularity)");
  return hurwitz_zeta(0.5, a);
}

}  // namespace satsensor
