#pragma once

#include <complex>

#include <boost/math/special_functions/bessel.hpp>

namespace mwt::special {

inline double bessel_j(int order, double x) { return boost::math::cyl_bessel_j(order, x); }
inline double bessel_y(int order, double x) { return boost::math::cyl_neumann(order, x); }

/// Hankel function of the first kind, H_n^(1)(x) = J_n(x) + i Y_n(x), x > 0.
inline std::complex<double> hankel1(int order, double x) { return {bessel_j(order, x), bessel_y(order, x)}; }

/// Derivatives via the recurrence C_n'(x) = C_{n-1}(x) - (n / x) C_n(x).
inline double bessel_j_prime(int order, double x) {
  return bessel_j(order - 1, x) - order / x * bessel_j(order, x);
}
inline std::complex<double> hankel1_prime(int order, double x) {
  return hankel1(order - 1, x) - double(order) / x * hankel1(order, x);
}

}  // namespace mwt::special
