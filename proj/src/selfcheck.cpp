#include "mwt/selfcheck.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "mwt/analytic.hpp"
#include "mwt/phantoms.hpp"
#include "mwt/regularizers.hpp"
#include "mwt/special.hpp"

namespace mwt {

namespace {

CheckResult finish(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value, threshold, std::isfinite(value) && value < threshold, std::move(detail)};
}

ComplexMatrix random_complex(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = Complex(g(rng), g(rng));
  return m;
}

}  // namespace

SmallProblem small_problem(int n_cd) {
  const auto physics = PhysicsParams::make(4e8, 1.0);
  return {DiscreteGrid(physics, n_cd), circular_setup(3.0, 16, 32, physics)};
}

RealVector random_contrast(const DiscreteGrid& grid, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  // Sum of a few Gaussian bumps: smooth, strictly positive, not symmetric.
  std::vector<std::pair<Point2, double>> bumps;
  for (int b = 0; b < 4; ++b) bumps.push_back({Point2(u(rng), u(rng)), 0.15 + 0.25 * (u(rng) + 0.6)});
  RealVector chi(grid.doi_size());
  for (Eigen::Index q = 0; q < chi.size(); ++q) {
    const Point2 p = grid.doi_point(q);
    double v = 0.0;
    for (const auto& [c, w] : bumps) v += std::exp(-(p - c).squaredNorm() / (2 * w * w));
    chi(q) = v;
  }
  return amplitude * chi / chi.maxCoeff();
}

CheckResult check_adjoint_identity(int pairs, std::uint64_t seed) {
  const auto [grid, setup] = small_problem();
  const ForwardModel model(grid, setup);
  const RealVector chi = random_contrast(grid, 0.5, seed);
  const JacobianFactors f{build_A(model, chi), build_B(model, chi), 0, 0};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int i = 0; i < pairs; ++i) {
    RealVector h(chi.size());
    for (auto& v : h) v = g(rng);
    const ComplexMatrix H = random_complex(setup.n_rx(), setup.n_tx(), rng);
    const double lhs = (derivative_apply(f, h).conjugate().cwiseProduct(H)).sum().real();
    const double rhs = h.dot(adjoint_gradient(f, H));
    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(lhs));
  }
  return finish("adjoint identity", worst, 1e-10, std::to_string(pairs) + " pairs, 16x16 DOI");
}

CheckResult check_gradient_fd(int pixels, std::uint64_t seed) {
  const auto [grid, setup] = small_problem();
  SolverOptions options;
  options.gmres.tolerance = 1e-12;
  options.gmres.max_iterations = 500;
  const ForwardModel model(grid, setup, options);
  const RealVector truth = random_contrast(grid, 0.6, seed);
  const RealVector chi = random_contrast(grid, 0.4, seed + 1000);
  const ScatterMatrix meas = model.forward(truth).scatter;
  const ForwardSolution sol = model.forward(chi);
  const JacobianFactors f{build_A(model, chi), build_B(sol), 0, 0};
  const RealVector g = adjoint_gradient(f, sol.scatter - meas);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, chi.size() - 1);
  const double eps = 1e-4;
  RealVector fd(pixels), an(pixels);
  for (int i = 0; i < pixels; ++i) {
    const Eigen::Index p = pick(rng);
    RealVector plus = chi, minus = chi;
    plus(p) += eps;
    minus(p) -= eps;
    fd(i) = (data_consistency_loss(model.forward(plus).scatter, meas) -
             data_consistency_loss(model.forward(minus).scatter, meas)) / (2 * eps);
    an(i) = g(p);
  }
  return finish("gradient vs central differences", (fd - an).norm() / an.norm(), 1e-4,
                std::to_string(pixels) + " pixels, eps " + std::to_string(eps));
}

CheckResult check_born_limit(std::uint64_t seed) {
  const auto [grid, setup] = small_problem();
  SolverOptions options;
  options.gmres.tolerance = 1e-12;
  const ForwardModel model(grid, setup, options);
  const RealVector chi = random_contrast(grid, 1e-4, seed);
  const ScatterMatrix full = model.forward(chi).scatter;
  const ScatterMatrix born = model.born(chi);
  return finish("Born limit", (full - born).norm() / full.norm(), 1e-3, "||chi||_inf = 1e-4");
}

CheckResult check_kernel_oracle() {
  const auto [grid, setup] = small_problem(64);
  const PeriodizedKernel kernel = kernel_hat(grid);
  const double kappa = grid.kappa();
  const Complex expected = -1.0 + Complex(0, constants::pi * kappa / 2) * special::hankel1(1, kappa);
  double err = std::abs(kernel.at(0, 0) - expected) / std::abs(expected);
  // |(3,4)| = |(5,0)| = |(0,-5)| = 5
  err = std::max(err, std::abs(kernel.at(3, 4) - kernel.at(5, 0)) / std::abs(kernel.at(5, 0)));
  err = std::max(err, std::abs(kernel.at(0, -5) - kernel.at(-4, 3)) / std::abs(kernel.at(5, 0)));
  const VolumeOperator v(grid, kernel);
  std::mt19937_64 rng(5);
  const ComplexVector f = random_complex(v.size(), 1, rng);
  const ComplexVector ref = v.apply_on_cd(f);
  err = std::max(err, (v.apply(f) - ref).norm() / ref.norm());
  return finish("kernel oracle", err, 1e-10, "Phi_hat(0), radial symmetry, fast vs CD convolution");
}

CheckResult check_schedule() {
  ReconstructionConfig config;
  const DiffusionSchedule s = config.schedule();
  const double lambda = config.lambda;
  double worst = 0.0;
  for (int t = 1; t <= s.t_max(); ++t) {
    const double lambda_t = lambda / s.lookup(t).snr;
    worst = std::max(worst, std::abs(lambda_t * s.lookup(t).snr - lambda) / lambda);
  }
  const int first = anneal_timestep(config, 1), last = anneal_timestep(config, config.n_max);
  const bool ends = first == config.t_start && last == config.t_end;
  CheckResult r = finish("schedule identities", worst, 1e-15,
                         "t(1) = " + std::to_string(first) + ", t(n_max) = " + std::to_string(last));
  r.passed = r.passed && ends && first == 500 && last == 1;
  return r;
}

CheckResult check_disk_oracle(int n_cd, double eps_r, double radius, double* seconds) {
  const auto physics = PhysicsParams::make(4e8, 1.0);
  const DiscreteGrid grid(physics, n_cd);
  const MeasurementSetup setup = circular_setup(3.0, 16, 32, physics);
  const auto start = std::chrono::steady_clock::now();
  const ForwardModel model(grid, setup);
  const RealVector chi = make_disk(radius, eps_r).rasterize(grid).values();
  const ScatterMatrix numeric = model.forward(chi).scatter;
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (seconds) *seconds = elapsed;
  const ScatterMatrix exact = analytic_disk_scatter(setup, radius, eps_r);
  char buf[96];
  std::snprintf(buf, sizeof buf, "n_cd %d, eps_r %.2f, r %.2f m, %.2f s", n_cd, eps_r, radius, elapsed);
  return finish("disk vs series", (numeric - exact).norm() / exact.norm(), 0.02, buf);
}

std::string format_check(const CheckResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "[%s] %-34s %.3e (< %.1e)  %s", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.value,
                r.threshold, r.detail.c_str());
  return buf;
}

}  // namespace mwt
