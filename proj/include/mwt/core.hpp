#pragma once

// Shared geometric and physical types for the 2D TM microwave-tomography model.
//
// Conventions used throughout the library:
//  * DOI images are n_doi x n_doi Eigen matrices, row index = y, column index = x,
//    both increasing with the physical coordinate.
//  * DOI vectors (length N_D = n_doi^2) are the column-major flattening of that
//    image, i.e. pixel (row, col) lives at col * n_doi + row.
//  * Time dependence exp(-i omega t).

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace mwt {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using RealImage = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Point2 = Eigen::Vector2d;

/// Complex N_s x N_i scattered field, receiver-major (row j = receiver j, column l = transmitter l).
using ScatterMatrix = Eigen::MatrixXcd;

namespace constants {
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double vacuum_permeability = 1.25663706212e-6;  // H/m
}  // namespace constants

struct PhysicsParams {
  double frequency_hz = 0.0;
  double wavenumber = 0.0;  // k = omega * sqrt(eps0 * mu0)
  double half_side = 0.0;   // d, DOI = [-d, d)^2

  static PhysicsParams make(double frequency_hz, double half_side);

  double angular_frequency() const { return 2.0 * constants::pi * frequency_hz; }
  double wavelength() const { return 2.0 * constants::pi / wavenumber; }
};

/// Collocation grid of the computational domain [-2*sqrt(2)d, 2*sqrt(2)d)^2 and
/// the DOI subgrid embedded in it.
class DiscreteGrid {
 public:
  DiscreteGrid() = default;
  DiscreteGrid(const PhysicsParams& physics, int n_cd);

  const PhysicsParams& physics() const { return physics_; }
  int n_cd() const { return n_cd_; }
  int n_doi() const { return n_doi_; }
  Eigen::Index doi_size() const { return Eigen::Index(n_doi_) * n_doi_; }
  double step() const { return step_; }
  double kappa() const { return kappa_; }
  double cell_area() const { return step_ * step_; }

  /// First CD index (per axis) occupied by the DOI block.
  int doi_offset() const { return (n_cd_ - n_doi_) / 2; }

  /// Physical coordinate of DOI row/column index i (cell centred, symmetric about 0).
  double doi_coordinate(int i) const { return (i - 0.5 * (n_doi_ - 1)) * step_; }

  /// Physical position of the DOI point with flattened index q.
  Point2 doi_point(Eigen::Index q) const;

  /// Flattened (column-major, n_cd x n_cd) CD index of DOI point q.
  Eigen::Index doi_to_cd(Eigen::Index q) const;

  /// Inverse of doi_to_cd; returns -1 when the CD point is outside the DOI block.
  Eigen::Index cd_to_doi(Eigen::Index m) const;

 private:
  PhysicsParams physics_;
  int n_cd_ = 0;
  int n_doi_ = 0;
  double step_ = 0.0;
  double kappa_ = 0.0;
};

DiscreteGrid build_grid(double half_side, double frequency_hz, int n_cd);

/// Real (lossless) contrast chi = eps_r - 1 sampled on the DOI grid.
class ContrastField {
 public:
  ContrastField() = default;
  explicit ContrastField(int n_doi);
  ContrastField(int n_doi, RealVector values);
  static ContrastField from_image(const RealImage& image);

  int n_doi() const { return n_doi_; }
  const RealVector& values() const { return values_; }
  RealVector& values() { return values_; }

  RealImage image() const;
  Eigen::Map<const RealImage> view() const { return {values_.data(), n_doi_, n_doi_}; }

 private:
  int n_doi_ = 0;
  RealVector values_;
};

struct MeasurementSetup {
  std::vector<Point2> tx_positions;
  std::vector<Point2> rx_positions;
  PhysicsParams physics;

  Eigen::Index n_tx() const { return Eigen::Index(tx_positions.size()); }
  Eigen::Index n_rx() const { return Eigen::Index(rx_positions.size()); }

  /// Throws std::invalid_argument unless every antenna lies strictly outside the DOI.
  void validate() const;
};

MeasurementSetup circular_setup(double radius, int n_tx, int n_rx, const PhysicsParams& physics);

inline bool inside_doi(const Point2& p, double half_side) {
  return p.x() >= -half_side && p.x() < half_side && p.y() >= -half_side && p.y() < half_side;
}

}  // namespace mwt
