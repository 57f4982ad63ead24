#include "mwt/analytic.hpp"

#include <cmath>

#include "mwt/special.hpp"

namespace mwt {

namespace {

struct Polar {
  double r;
  double phi;
};

Polar polar(const Point2& p) { return {p.norm(), std::atan2(p.y(), p.x())}; }

void check_outside(const Point2& source, std::span<const Point2> points, double radius) {
  if (source.norm() <= radius) throw std::invalid_argument("line source inside the cylinder");
  for (const auto& p : points)
    if (p.norm() <= radius) throw std::invalid_argument("evaluation point inside the cylinder");
}

// Contribution of orders +n and -n (J_-n = (-1)^n J_n, H_-n = (-1)^n H_n).
Complex order_term(int n, const Complex& cn, double k, const Polar& src, const Polar& obs) {
  using special::hankel1;
  const Complex radial = cn * hankel1(n, k * obs.r) * hankel1(n, k * src.r);
  return n == 0 ? radial : 2.0 * radial * std::cos(n * (obs.phi - src.phi));
}

}  // namespace

Complex disk_scattering_coefficient(int n, double k, double radius, double eps_r) {
  using namespace special;
  if (!(radius > 0.0) || !(eps_r > 0.0)) throw std::invalid_argument("radius and permittivity must be positive");
  if (eps_r == 1.0) return 0.0;  // the two products below need not cancel exactly under FMA contraction
  const double k1 = k * std::sqrt(eps_r);
  const double x0 = k * radius;
  const double x1 = k1 * radius;
  const double jn0 = bessel_j(n, x0), jn1 = bessel_j(n, x1);
  const double djn0 = bessel_j_prime(n, x0), djn1 = bessel_j_prime(n, x1);
  const Complex hn0 = hankel1(n, x0), dhn0 = hankel1_prime(n, x0);
  const double num = k * djn0 * jn1 - k1 * djn1 * jn0;
  const Complex den = k1 * djn1 * hn0 - k * dhn0 * jn1;
  return num / den;
}

ComplexVector disk_scattered_field(const Point2& source, std::span<const Point2> points, double k, double radius,
                                   double eps_r, int order) {
  check_outside(source, points, radius);
  const Polar src = polar(source);
  ComplexVector out = ComplexVector::Zero(Eigen::Index(points.size()));
  for (int n = 0; n <= order; ++n) {
    const Complex cn = disk_scattering_coefficient(n, k, radius, eps_r);
    if (cn == Complex(0.0)) continue;
    for (std::size_t i = 0; i < points.size(); ++i) out(Eigen::Index(i)) += order_term(n, cn, k, src, polar(points[i]));
  }
  return 0.25 * Complex(0.0, 1.0) * out;
}

ComplexVector disk_scattered_field(const Point2& source, std::span<const Point2> points, double k, double radius,
                                   double eps_r, const DiskSeriesOptions& options) {
  check_outside(source, points, radius);
  const Polar src = polar(source);
  ComplexVector out = ComplexVector::Zero(Eigen::Index(points.size()));
  int quiet_orders = 0;
  for (int n = 0; n <= options.max_order; ++n) {
    const Complex cn = disk_scattering_coefficient(n, k, radius, eps_r);
    double largest = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Complex term = cn == Complex(0.0) ? Complex(0.0) : order_term(n, cn, k, src, polar(points[i]));
      out(Eigen::Index(i)) += term;
      largest = std::max(largest, std::abs(term));
    }
    const double scale = out.cwiseAbs().maxCoeff();
    // Require a few consecutive negligible orders; past k*radius the terms decay monotonically.
    quiet_orders = (largest <= options.tolerance * scale) ? quiet_orders + 1 : 0;
    if (quiet_orders >= 3 && n > k * radius) return 0.25 * Complex(0.0, 1.0) * out;
  }
  throw SeriesDivergence("cylinder series did not converge by order " + std::to_string(options.max_order));
}

ComplexVector analytic_disk_scatter(const MeasurementSetup& setup, double radius, double eps_r, Eigen::Index tx,
                                    const DiskSeriesOptions& options) {
  if (tx < 0 || tx >= setup.n_tx()) throw std::out_of_range("transmitter index out of range");
  return disk_scattered_field(setup.tx_positions[std::size_t(tx)], setup.rx_positions, setup.physics.wavenumber,
                              radius, eps_r, options);
}

ScatterMatrix analytic_disk_scatter(const MeasurementSetup& setup, double radius, double eps_r,
                                    const DiskSeriesOptions& options) {
  ScatterMatrix m(setup.n_rx(), setup.n_tx());
  for (Eigen::Index l = 0; l < setup.n_tx(); ++l) m.col(l) = analytic_disk_scatter(setup, radius, eps_r, l, options);
  return m;
}

}  // namespace mwt
