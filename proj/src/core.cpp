#include "mwt/core.hpp"

#include <cmath>
#include <string>

namespace mwt {

PhysicsParams PhysicsParams::make(double frequency_hz, double half_side) {
  if (!(frequency_hz > 0.0)) throw std::invalid_argument("frequency must be positive");
  if (!(half_side > 0.0)) throw std::invalid_argument("DOI half side must be positive");
  PhysicsParams p;
  p.frequency_hz = frequency_hz;
  p.half_side = half_side;
  p.wavenumber = p.angular_frequency() *
                 std::sqrt(constants::vacuum_permittivity * constants::vacuum_permeability);
  return p;
}

DiscreteGrid::DiscreteGrid(const PhysicsParams& physics, int n_cd) : physics_(physics), n_cd_(n_cd) {
  if (n_cd < 8) throw std::invalid_argument("n_cd must be at least 8, got " + std::to_string(n_cd));
  if (n_cd % 2 != 0) throw std::invalid_argument("n_cd must be even, got " + std::to_string(n_cd));
  const double sqrt2 = std::sqrt(2.0);
  n_doi_ = static_cast<int>(std::floor(n_cd / (2.0 * sqrt2)));
  step_ = 4.0 * sqrt2 * physics.half_side / n_cd;
  kappa_ = 2.0 * sqrt2 * physics.half_side * physics.wavenumber;
}

Point2 DiscreteGrid::doi_point(Eigen::Index q) const {
  const int row = int(q % n_doi_);
  const int col = int(q / n_doi_);
  return {doi_coordinate(col), doi_coordinate(row)};
}

Eigen::Index DiscreteGrid::doi_to_cd(Eigen::Index q) const {
  const Eigen::Index row = q % n_doi_ + doi_offset();
  const Eigen::Index col = q / n_doi_ + doi_offset();
  return col * n_cd_ + row;
}

Eigen::Index DiscreteGrid::cd_to_doi(Eigen::Index m) const {
  const Eigen::Index row = m % n_cd_ - doi_offset();
  const Eigen::Index col = m / n_cd_ - doi_offset();
  if (row < 0 || col < 0 || row >= n_doi_ || col >= n_doi_) return -1;
  return col * n_doi_ + row;
}

DiscreteGrid build_grid(double half_side, double frequency_hz, int n_cd) {
  return DiscreteGrid(PhysicsParams::make(frequency_hz, half_side), n_cd);
}

ContrastField::ContrastField(int n_doi) : n_doi_(n_doi), values_(RealVector::Zero(Eigen::Index(n_doi) * n_doi)) {}

ContrastField::ContrastField(int n_doi, RealVector values) : n_doi_(n_doi), values_(std::move(values)) {
  if (values_.size() != Eigen::Index(n_doi) * n_doi)
    throw std::invalid_argument("contrast length does not match n_doi^2");
  if (values_.size() > 0 && values_.minCoeff() < -1.0)
    throw std::invalid_argument("contrast below -1 (negative permittivity)");
}

ContrastField ContrastField::from_image(const RealImage& image) {
  if (image.rows() != image.cols()) throw std::invalid_argument("contrast image must be square");
  return ContrastField(int(image.rows()), Eigen::Map<const RealVector>(image.data(), image.size()));
}

RealImage ContrastField::image() const { return view(); }

void MeasurementSetup::validate() const {
  if (tx_positions.empty() || rx_positions.empty())
    throw std::invalid_argument("measurement setup needs at least one transmitter and one receiver");
  for (const auto& p : tx_positions)
    if (inside_doi(p, physics.half_side)) throw std::invalid_argument("transmitter inside the DOI");
  for (const auto& p : rx_positions)
    if (inside_doi(p, physics.half_side)) throw std::invalid_argument("receiver inside the DOI");
}

MeasurementSetup circular_setup(double radius, int n_tx, int n_rx, const PhysicsParams& physics) {
  if (n_tx < 1 || n_rx < 1) throw std::invalid_argument("antenna counts must be >= 1");
  if (!(radius > physics.half_side)) throw std::invalid_argument("antenna circle lies inside the DOI");
  auto ring = [radius](int n) {
    std::vector<Point2> pts(n);
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * constants::pi * i / n;
      pts[i] = {radius * std::cos(a), radius * std::sin(a)};
    }
    return pts;
  };
  MeasurementSetup setup{ring(n_tx), ring(n_rx), physics};
  setup.validate();
  return setup;
}

}  // namespace mwt
