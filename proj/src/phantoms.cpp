#include "mwt/phantoms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mwt {

Primitive Primitive::disk(Point2 center, double radius, double eps_r) {
  Primitive p;
  p.kind = PrimitiveKind::disk;
  p.center = center;
  p.radius_a = p.radius_b = radius;
  p.eps_r = eps_r;
  return p;
}

Primitive Primitive::ellipse(Point2 center, double semi_a, double semi_b, double angle, double eps_r) {
  Primitive p;
  p.kind = PrimitiveKind::ellipse;
  p.center = center;
  p.radius_a = semi_a;
  p.radius_b = semi_b;
  p.angle = angle;
  p.eps_r = eps_r;
  return p;
}

Primitive Primitive::ring(Point2 center, double inner, double outer, double eps_r) {
  if (!(inner < outer)) throw std::invalid_argument("ring inner radius must be below outer radius");
  Primitive p;
  p.kind = PrimitiveKind::ring;
  p.center = center;
  p.radius_a = inner;
  p.radius_b = outer;
  p.eps_r = eps_r;
  return p;
}

Primitive Primitive::polygon(std::vector<Point2> vertices, double eps_r) {
  if (vertices.size() < 3) throw std::invalid_argument("polygon needs at least three vertices");
  Primitive p;
  p.kind = PrimitiveKind::polygon;
  p.vertices = std::move(vertices);
  p.eps_r = eps_r;
  return p;
}

bool Primitive::contains(const Point2& p) const {
  switch (kind) {
    case PrimitiveKind::disk:
      return (p - center).squaredNorm() < radius_a * radius_a;
    case PrimitiveKind::ellipse: {
      const Point2 d = p - center;
      const double c = std::cos(angle), s = std::sin(angle);
      const double u = (c * d.x() + s * d.y()) / radius_a;
      const double v = (-s * d.x() + c * d.y()) / radius_b;
      return u * u + v * v < 1.0;
    }
    case PrimitiveKind::ring: {
      const double r2 = (p - center).squaredNorm();
      return r2 >= radius_a * radius_a && r2 < radius_b * radius_b;
    }
    case PrimitiveKind::polygon: {
      bool inside = false;
      const std::size_t n = vertices.size();
      for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2& a = vertices[i];
        const Point2& b = vertices[j];
        if ((a.y() > p.y()) != (b.y() > p.y()) &&
            p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
          inside = !inside;
      }
      return inside;
    }
  }
  return false;
}

double Primitive::area() const {
  const double pi = constants::pi;
  switch (kind) {
    case PrimitiveKind::disk:
      return pi * radius_a * radius_a;
    case PrimitiveKind::ellipse:
      return pi * radius_a * radius_b;
    case PrimitiveKind::ring:
      return pi * (radius_b * radius_b - radius_a * radius_a);
    case PrimitiveKind::polygon: {
      double twice = 0.0;
      for (std::size_t i = 0, j = vertices.size() - 1; i < vertices.size(); j = i++)
        twice += vertices[j].x() * vertices[i].y() - vertices[i].x() * vertices[j].y();
      return std::abs(twice) / 2.0;
    }
  }
  return 0.0;
}

double Primitive::extent() const {
  if (kind == PrimitiveKind::polygon) {
    double e = 0.0;
    for (const auto& v : vertices) e = std::max(e, v.cwiseAbs().maxCoeff());
    return e;
  }
  const double r = kind == PrimitiveKind::ring ? radius_b : std::max(radius_a, radius_b);
  return center.cwiseAbs().maxCoeff() + r;
}

double Phantom::eps_r_at(const Point2& p) const {
  double eps = 1.0;
  for (const auto& prim : primitives)
    if (prim.contains(p)) eps = std::max(eps, prim.eps_r);
  return eps;
}

ContrastField Phantom::rasterize(const DiscreteGrid& grid, int supersample) const {
  if (supersample < 1) throw std::invalid_argument("supersample must be >= 1");
  const int n = grid.n_doi();
  const double h = grid.step();
  RealImage chi(n, n);
  for (int col = 0; col < n; ++col) {
    for (int row = 0; row < n; ++row) {
      const double x0 = grid.doi_coordinate(col) - h / 2, y0 = grid.doi_coordinate(row) - h / 2;
      double sum = 0.0;
      for (int sx = 0; sx < supersample; ++sx)
        for (int sy = 0; sy < supersample; ++sy)
          sum += eps_r_at({x0 + (sx + 0.5) * h / supersample, y0 + (sy + 0.5) * h / supersample});
      chi(row, col) = sum / (supersample * supersample) - 1.0;
    }
  }
  return ContrastField::from_image(chi);
}

void Phantom::validate(double half_side) const {
  for (const auto& p : primitives) {
    if (p.eps_r < 1.0 || p.eps_r > 10.0) throw std::invalid_argument("permittivity outside [1, 10]");
    if (p.extent() > half_side) throw std::invalid_argument("phantom geometry extends outside the DOI");
  }
}

Phantom make_austria(double half_side) {
  Phantom ph{"austria",
             {Primitive::disk({0.3, 0.6}, 0.2, 2.0), Primitive::disk({-0.3, 0.6}, 0.2, 2.0),
              Primitive::ring({0.0, -0.2}, 0.3, 0.6, 2.0)}};
  ph.validate(half_side);
  return ph;
}

Phantom make_disk(double radius, double eps_r) { return {"disk", {Primitive::disk({0.0, 0.0}, radius, eps_r)}}; }

Phantom make_shapes(std::uint64_t seed, double half_side) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  // Shapes stay within 80% of the DOI so the raster has a background margin.
  const double limit = 0.8 * half_side;
  Phantom ph;
  ph.name = "shapes:" + std::to_string(seed);
  const int count = 1 + int(rng() % 3);
  for (int s = 0; s < count; ++s) {
    const double size = uniform(0.15, 0.45) * half_side;
    const Point2 center(uniform(-limit + size, limit - size), uniform(-limit + size, limit - size));
    const double eps = uniform(1.3, 2.5);
    switch (rng() % 3) {
      case 0: {  // triangle
        const double a0 = uniform(0.0, 2 * constants::pi);
        std::vector<Point2> v;
        for (int i = 0; i < 3; ++i) {
          const double a = a0 + i * 2 * constants::pi / 3 + uniform(-0.4, 0.4);
          const double r = size * uniform(0.7, 1.0);
          v.emplace_back(center + r * Point2(std::cos(a), std::sin(a)));
        }
        ph.primitives.push_back(Primitive::polygon(std::move(v), eps));
        break;
      }
      case 1:
        ph.primitives.push_back(
            Primitive::ellipse(center, size, size * uniform(0.4, 1.0), uniform(0.0, constants::pi), eps));
        break;
      default: {  // convex-ish polygon with 4-6 vertices at increasing angles
        const int nv = 4 + int(rng() % 3);
        const double a0 = uniform(0.0, 2 * constants::pi);
        std::vector<Point2> v;
        for (int i = 0; i < nv; ++i) {
          const double a = a0 + (i + uniform(-0.25, 0.25)) * 2 * constants::pi / nv;
          const double r = size * uniform(0.6, 1.0);
          v.emplace_back(center + r * Point2(std::cos(a), std::sin(a)));
        }
        ph.primitives.push_back(Primitive::polygon(std::move(v), eps));
        break;
      }
    }
  }
  ph.validate(half_side);
  return ph;
}

Phantom phantom_by_name(const std::string& name, double half_side) {
  if (name == "austria") return make_austria(half_side);
  if (name == "disk") return make_disk(0.4, 2.0);
  if (name.rfind("shapes:", 0) == 0) return make_shapes(std::stoull(name.substr(7)), half_side);
  throw std::invalid_argument("unknown phantom '" + name + "' (expected austria, disk or shapes:<seed>)");
}

ScatterMatrix add_noise(const ScatterMatrix& scatter, double percent, std::mt19937_64& rng) {
  if (percent < 0.0) throw std::invalid_argument("noise percent must be non-negative");
  if (percent == 0.0 || scatter.size() == 0) return scatter;
  const double rms = scatter.norm() / std::sqrt(double(scatter.size()));
  const double component_sigma = percent / 100.0 * rms / std::sqrt(2.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ScatterMatrix noisy = scatter;
  for (Eigen::Index c = 0; c < noisy.cols(); ++c)
    for (Eigen::Index r = 0; r < noisy.rows(); ++r) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      noisy(r, c) += component_sigma * Complex(re, im);
    }
  return noisy;
}

}  // namespace mwt
