#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mwt/phantoms.hpp"
#include "mwt/selfcheck.hpp"
#include "mwt/sensitivity.hpp"

using namespace mwt;

namespace {

const auto kPhys = PhysicsParams::make(4e8, 1.0);

struct Fixture {
  DiscreteGrid grid{kPhys, 46};
  MeasurementSetup setup = circular_setup(3.0, 16, 32, kPhys);
  ForwardModel model;
  RealVector chi;

  explicit Fixture(double gmres_tol = 1e-10) : model(grid, setup, options(gmres_tol)) {
    chi = random_contrast(grid, 0.5, 21);
  }
  static SolverOptions options(double tol) {
    SolverOptions o;
    o.gmres.tolerance = tol;
    o.gmres.max_iterations = 500;
    return o;
  }
};

RealVector random_real(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  RealVector v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

ComplexMatrix random_complex(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  ComplexMatrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = Complex(g(rng), g(rng));
  return m;
}

}  // namespace

TEST_CASE("Jacobian factors at zero contrast") {
  Fixture f;
  const RealVector zero = RealVector::Zero(f.grid.doi_size());
  CHECK(build_B(f.model, zero) == f.model.incident());
  CHECK(build_A(f.model, zero) == f.model.measurement());
}

TEST_CASE("B columns are total fields") {
  Fixture f(1e-6);
  const ForwardSolution sol = f.model.forward(f.chi);
  const ComplexMatrix b = build_B(sol);
  REQUIRE(b.rows() == f.grid.doi_size());
  REQUIRE(b.cols() == 16);
  CHECK((b - f.model.incident() - sol.scattered).norm() < 1e-14 * b.norm());
  const VolumeOperator& v = f.model.volume();
  const ComplexVector c = f.chi.cast<Complex>();
  for (int l : {0, 9}) {
    // total field satisfies u - V(chi u) = u_inc
    const ComplexVector u = b.col(l);
    const ComplexVector r = u - v.apply(c.cwiseProduct(u)) - f.model.incident().col(l);
    const ComplexVector rhs = v.apply(c.cwiseProduct(f.model.incident().col(l)));
    CHECK(r.norm() / rhs.norm() <= 1e-6);
  }
}

TEST_CASE("B in the Born regime") {
  Fixture f;
  const RealVector small = f.chi * 1e-4;
  const ComplexMatrix b = build_B(f.model, small);
  const ComplexMatrix& ui = f.model.incident();
  ComplexMatrix first(ui.rows(), ui.cols());
  for (Eigen::Index l = 0; l < ui.cols(); ++l)
    first.col(l) = ui.col(l) + f.model.volume().apply(small.cast<Complex>().cwiseProduct(ui.col(l)));
  // deviation is second order in chi
  CHECK((b - first).norm() / (first - ui).norm() < 1e-3);
}

TEST_CASE("A rows against the per-column definition") {
  Fixture f;
  const ComplexMatrix a = build_A(f.model, f.chi);
  REQUIRE(a.rows() == 32);
  REQUIRE(a.cols() == f.grid.doi_size());
  const VolumeOperator& v = f.model.volume();
  const ComplexVector c = f.chi.cast<Complex>();
  for (Eigen::Index p : {Eigen::Index(0), Eigen::Index(117), Eigen::Index(200)}) {
    // A e_p = V_D (e_p + chi . T_chi V e_p); T_chi g = g + u^s with (I - V chi) u^s = V(chi g)
    ComplexVector e = ComplexVector::Zero(f.grid.doi_size());
    e(p) = 1.0;
    const ComplexVector ve = v.apply(e);
    const ComplexVector t = ve + f.model.solve_scattered(f.chi, ve);
    const ComplexVector col = f.model.measurement() * (e + c.cwiseProduct(t));
    CHECK((a.col(p) - col).norm() / col.norm() < 1e-8);
  }
}

TEST_CASE("derivative against central differences") {
  Fixture f(1e-12);
  const JacobianFactors jf{build_A(f.model, f.chi), build_B(f.model, f.chi), 0, 0};
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    RealVector h = random_real(f.grid.doi_size(), seed);
    h.normalize();
    const double eps = 1e-5;
    const ScatterMatrix fd =
        (f.model.forward(f.chi + eps * h).scatter - f.model.forward(f.chi - eps * h).scatter) / (2 * eps);
    const ScatterMatrix an = derivative_apply(jf, h);
    CHECK((fd - an).norm() / an.norm() < 1e-4);
  }
}

TEST_CASE("derivative and adjoint are linear, zero on zero") {
  Fixture f(1e-8);
  const JacobianFactors jf{build_A(f.model, f.chi), build_B(f.model, f.chi), 0, 0};
  const Eigen::Index n = f.grid.doi_size();
  CHECK(derivative_apply(jf, RealVector::Zero(n)).norm() == 0.0);
  CHECK(adjoint_gradient(jf, ComplexMatrix::Zero(32, 16)).norm() == 0.0);
  const RealVector h1 = random_real(n, 4), h2 = random_real(n, 5);
  const ScatterMatrix lhs = derivative_apply(jf, 2.0 * h1 - 0.5 * h2);
  const ScatterMatrix rhs = 2.0 * derivative_apply(jf, h1) - 0.5 * derivative_apply(jf, h2);
  CHECK((lhs - rhs).norm() < 1e-13 * rhs.norm());
  const ComplexMatrix H1 = random_complex(32, 16, 6), H2 = random_complex(32, 16, 7);
  const RealVector g = adjoint_gradient(jf, 3.0 * H1 + H2);
  CHECK((g - 3.0 * adjoint_gradient(jf, H1) - adjoint_gradient(jf, H2)).norm() < 1e-13 * g.norm());
  CHECK_THROWS_AS(derivative_apply(jf, RealVector::Zero(n + 1)), std::invalid_argument);
  CHECK_THROWS_AS(adjoint_gradient(jf, ComplexMatrix::Zero(31, 16)), std::invalid_argument);
}

TEST_CASE("adjoint identity on 20 random pairs") {
  Fixture f(1e-8);
  const JacobianFactors jf{build_A(f.model, f.chi), build_B(f.model, f.chi), 0, 0};
  for (int i = 0; i < 20; ++i) {
    const RealVector h = random_real(f.grid.doi_size(), 100 + i);
    const ComplexMatrix H = random_complex(32, 16, 200 + i);
    const double lhs = (derivative_apply(jf, h).conjugate().cwiseProduct(H)).sum().real();
    const double rhs = h.dot(adjoint_gradient(jf, H));
    CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));
  }
}

TEST_CASE("gradient of the data loss against central differences") {
  const CheckResult r = check_gradient_fd(10, 31);
  INFO(format_check(r));
  CHECK(r.passed);
}

TEST_CASE("warm-started A matches a cold build") {
  Fixture f(1e-8);
  ComplexMatrix warm;
  const ComplexMatrix cold = build_A(f.model, f.chi, &warm);
  REQUIRE(warm.rows() == f.grid.doi_size());
  REQUIRE(warm.cols() == 32);
  const ComplexMatrix again = build_A(f.model, f.chi * 1.01, &warm);
  const ComplexMatrix fresh = build_A(f.model, f.chi * 1.01);
  CHECK((again - fresh).norm() / fresh.norm() < 1e-6);
  CHECK((again - cold).norm() > 0.0);
}
