#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mwt/core.hpp"

namespace mwt {

enum class PrimitiveKind { disk, ellipse, polygon, ring };

/// One homogeneous region of a phantom. Geometry fields are interpreted per kind:
/// disk uses `center` and `radius_a`; ellipse uses `center`, semi-axes `radius_a`,
/// `radius_b` and `angle`; ring uses `center` with inner `radius_a` and outer
/// `radius_b`; polygon uses `vertices` (simple polygon, either orientation).
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::disk;
  Point2 center = Point2::Zero();
  double radius_a = 0.0;
  double radius_b = 0.0;
  double angle = 0.0;
  std::vector<Point2> vertices;
  double eps_r = 1.0;

  static Primitive disk(Point2 center, double radius, double eps_r);
  static Primitive ellipse(Point2 center, double semi_a, double semi_b, double angle, double eps_r);
  static Primitive ring(Point2 center, double inner, double outer, double eps_r);
  static Primitive polygon(std::vector<Point2> vertices, double eps_r);

  bool contains(const Point2& p) const;
  double area() const;
  /// Axis-aligned bounding half-extent around the origin (max |x|, |y| reached).
  double extent() const;
};

struct Phantom {
  std::string name;
  std::vector<Primitive> primitives;

  /// Relative permittivity at p: overlaps resolve to the maximum, background is 1.
  double eps_r_at(const Point2& p) const;

  /// Area-weighted rasterisation on the DOI grid using `supersample`^2 sub-samples per cell.
  ContrastField rasterize(const DiscreteGrid& grid, int supersample = 8) const;

  /// Throws std::invalid_argument on permittivities outside [1, 10] or geometry outside [-d, d)^2.
  void validate(double half_side) const;
};

/// Two disks of radius 0.2 m at (+-0.3, 0.6) and a ring centred at (0, -0.2)
/// with radii 0.3/0.6 m, all with eps_r = 2.
Phantom make_austria(double half_side = 1.0);

/// 1-3 random triangles, ellipses or polygons with eps_r ~ U[1.3, 2.5].
Phantom make_shapes(std::uint64_t seed, double half_side = 1.0);

/// Homogeneous disk centred at the origin.
Phantom make_disk(double radius, double eps_r);

/// Built-in phantom by name: "austria", "disk", "shapes:<seed>". Throws on unknown names.
Phantom phantom_by_name(const std::string& name, double half_side = 1.0);

/// Circular complex Gaussian noise with per-entry standard deviation
/// (percent / 100) * RMS(entries); RMS is taken over the whole matrix.
ScatterMatrix add_noise(const ScatterMatrix& scatter, double percent, std::mt19937_64& rng);

}  // namespace mwt
