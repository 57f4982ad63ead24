#pragma once

#include <span>

#include "mwt/core.hpp"

namespace mwt {

/// Cylindrical-harmonics solution for a line source (i/4) H0(k|x - y_s|)
/// illuminating a homogeneous dielectric cylinder centred at the origin.
/// Independent of the volume-integral discretisation; used as a reference.
struct DiskSeriesOptions {
  int max_order = 200;
  double tolerance = 1e-12;  // relative size of the last retained order
};

class SeriesDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mie coefficient c_n of the scattered field (c_n = 0 for eps_r = 1).
Complex disk_scattering_coefficient(int order, double k, double radius, double eps_r);

/// Scattered field at `points` (all outside the disk) truncated at exactly |n| <= order.
ComplexVector disk_scattered_field(const Point2& source, std::span<const Point2> points, double k, double radius,
                                   double eps_r, int order);

/// Scattered field at `points`, truncated adaptively; throws SeriesDivergence when
/// the tolerance is not met by `max_order`.
ComplexVector disk_scattered_field(const Point2& source, std::span<const Point2> points, double k, double radius,
                                   double eps_r, const DiskSeriesOptions& options = {});

/// Receiver column of the scattered field for transmitter `tx`.
ComplexVector analytic_disk_scatter(const MeasurementSetup& setup, double radius, double eps_r, Eigen::Index tx,
                                    const DiskSeriesOptions& options = {});

/// All transmitters at once, N_s x N_i.
ScatterMatrix analytic_disk_scatter(const MeasurementSetup& setup, double radius, double eps_r,
                                    const DiskSeriesOptions& options = {});

}  // namespace mwt
