#include "mwt/forward.hpp"

#include <cmath>

#include "mwt/special.hpp"

namespace mwt {

namespace {

constexpr Complex kI{0.0, 1.0};

// Relative distance from the removable singularity at pi|j| = kappa below
// which the closed-form limit is used.
constexpr double kBranchTolerance = 1e-9;

int wrap(int j, int n) { return ((j % n) + n) % n; }

}  // namespace

Complex PeriodizedKernel::at(int j1, int j2) const {
  const int n = size();
  return hat(wrap(j1, n), wrap(j2, n));
}

Complex kernel_hat_value(double rho, double kappa) {
  using namespace special;
  const double pi = constants::pi;
  if (std::abs(rho - kappa) < kBranchTolerance * kappa) {
    return kI * pi * kappa * kappa / 4.0 *
           (bessel_j(1, kappa) * hankel1(1, kappa) + bessel_j(0, kappa) * hankel1(0, kappa));
  }
  const Complex bracket = rho * bessel_j(1, rho) * hankel1(0, kappa) - kappa * bessel_j(0, rho) * hankel1(1, kappa);
  return kappa * kappa / (rho * rho - kappa * kappa) * (1.0 + kI * pi / 2.0 * bracket);
}

PeriodizedKernel kernel_hat(const DiscreteGrid& grid) {
  const int n = grid.n_cd();
  PeriodizedKernel kernel{ComplexMatrix(n, n)};
  for (int c = 0; c < n; ++c) {
    const int j2 = c < n / 2 ? c : c - n;
    for (int r = 0; r < n; ++r) {
      const int j1 = r < n / 2 ? r : r - n;
      kernel.hat(r, c) = kernel_hat_value(constants::pi * std::hypot(double(j1), double(j2)), grid.kappa());
    }
  }
  return kernel;
}

VolumeOperator::VolumeOperator(const DiscreteGrid& grid, const PeriodizedKernel& kernel)
    : n_cd_(grid.n_cd()),
      n_doi_(grid.n_doi()),
      offset_(grid.doi_offset()),
      embed_size_(next_fast_size(2 * grid.n_doi() - 1)),
      cd_hat_(kernel.hat),
      cd_fft_(grid.n_cd(), grid.n_cd()),
      embed_fft_(embed_size_, embed_size_) {
  if (kernel.size() != n_cd_) throw std::invalid_argument("kernel size does not match grid");
  cd_spatial_ = cd_hat_;
  cd_fft_.inverse(cd_spatial_);

  embed_hat_ = ComplexMatrix::Zero(embed_size_, embed_size_);
  for (int dc = -(n_doi_ - 1); dc <= n_doi_ - 1; ++dc)
    for (int dr = -(n_doi_ - 1); dr <= n_doi_ - 1; ++dr)
      embed_hat_(wrap(dr, embed_size_), wrap(dc, embed_size_)) = cd_spatial_(wrap(dr, n_cd_), wrap(dc, n_cd_));
  embed_fft_.forward(embed_hat_);
}

Complex VolumeOperator::spatial_kernel(int d_row, int d_col) const {
  return cd_spatial_(wrap(d_row, n_cd_), wrap(d_col, n_cd_));
}

ComplexVector VolumeOperator::apply(const ComplexVector& f) const {
  if (f.size() != size()) throw std::invalid_argument("V_ND: input length must equal N_D");
  thread_local ComplexMatrix work;
  work.setZero(embed_size_, embed_size_);
  work.topLeftCorner(n_doi_, n_doi_) = Eigen::Map<const ComplexMatrix>(f.data(), n_doi_, n_doi_);
  embed_fft_.forward(work);
  work.array() *= embed_hat_.array();
  embed_fft_.inverse(work);
  ComplexVector out(size());
  Eigen::Map<ComplexMatrix>(out.data(), n_doi_, n_doi_) = work.topLeftCorner(n_doi_, n_doi_);
  return out;
}

ComplexVector VolumeOperator::apply_on_cd(const ComplexVector& f) const {
  if (f.size() != size()) throw std::invalid_argument("V_ND: input length must equal N_D");
  ComplexMatrix work = ComplexMatrix::Zero(n_cd_, n_cd_);
  work.block(offset_, offset_, n_doi_, n_doi_) = Eigen::Map<const ComplexMatrix>(f.data(), n_doi_, n_doi_);
  cd_fft_.forward(work);
  work.array() *= cd_hat_.array();
  cd_fft_.inverse(work);
  ComplexVector out(size());
  Eigen::Map<ComplexMatrix>(out.data(), n_doi_, n_doi_) = work.block(offset_, offset_, n_doi_, n_doi_);
  return out;
}

ComplexVector apply_V_ND(const PeriodizedKernel& kernel, const DiscreteGrid& grid, const ComplexVector& f) {
  return VolumeOperator(grid, kernel).apply_on_cd(f);
}

ComplexMatrix incident_fields(const MeasurementSetup& setup, const DiscreteGrid& grid) {
  const double k = grid.physics().wavenumber;
  ComplexMatrix u(grid.doi_size(), setup.n_tx());
  for (Eigen::Index l = 0; l < setup.n_tx(); ++l)
    for (Eigen::Index q = 0; q < grid.doi_size(); ++q)
      u(q, l) = 0.25 * kI * special::hankel1(0, k * (grid.doi_point(q) - setup.tx_positions[l]).norm());
  return u;
}

ComplexMatrix measurement_matrix(const MeasurementSetup& setup, const DiscreteGrid& grid) {
  const double k = grid.physics().wavenumber;
  const Complex weight = grid.cell_area() * k * k * 0.25 * kI;
  ComplexMatrix m(setup.n_rx(), grid.doi_size());
  for (Eigen::Index q = 0; q < grid.doi_size(); ++q) {
    const Point2 y = grid.doi_point(q);
    for (Eigen::Index j = 0; j < setup.n_rx(); ++j)
      m(j, q) = weight * special::hankel1(0, k * (setup.rx_positions[j] - y).norm());
  }
  return m;
}

ScatterMatrix measure(const MeasurementSetup& setup, const DiscreteGrid& grid, const ComplexMatrix& contrast_source) {
  if (contrast_source.rows() != grid.doi_size()) throw std::invalid_argument("contrast source has wrong length");
  return measurement_matrix(setup, grid) * contrast_source;
}

ForwardModel::ForwardModel(const DiscreteGrid& grid, const MeasurementSetup& setup, SolverOptions options)
    : ForwardModel(grid, setup, kernel_hat(grid), options) {}

ForwardModel::ForwardModel(const DiscreteGrid& grid, const MeasurementSetup& setup, PeriodizedKernel kernel,
                           SolverOptions options)
    : grid_(grid),
      setup_(setup),
      options_(options),
      kernel_(std::move(kernel)),
      volume_(grid, kernel_),
      incident_(incident_fields(setup, grid)),
      measurement_(measurement_matrix(setup, grid)) {
  setup_.validate();
  if (kernel_.size() != grid_.n_cd()) throw std::invalid_argument("kernel size does not match grid");
}

void ForwardModel::check_contrast(const RealVector& chi) const {
  if (chi.size() != grid_.doi_size()) throw std::invalid_argument("contrast length must equal N_D");
}

ComplexVector ForwardModel::solve_scattered(const RealVector& chi, const ComplexVector& u_inc,
                                            const ComplexVector* guess) const {
  check_contrast(chi);
  if (u_inc.size() != chi.size()) throw std::invalid_argument("incident field length must equal N_D");
  const ComplexVector rhs = volume_.apply(chi.cast<Complex>().cwiseProduct(u_inc));
  auto op = [&](const ComplexVector& v) -> ComplexVector {
    return v - volume_.apply(chi.cast<Complex>().cwiseProduct(v));
  };
  ComplexVector x = guess ? *guess : ComplexVector::Zero(rhs.size());
  const GmresReport report = gmres(op, rhs, x, options_.gmres);
  if (!report.converged)
    throw SolverFailure("Lippmann-Schwinger GMRES did not converge (relative residual " +
                            std::to_string(report.relative_residual) + ")",
                        report.relative_residual, report.iterations);
  return x;
}

ComplexVector ForwardModel::solve_transposed(const RealVector& chi, const ComplexVector& rhs,
                                             const ComplexVector* guess) const {
  check_contrast(chi);
  auto op = [&](const ComplexVector& v) -> ComplexVector {
    return v - chi.cast<Complex>().cwiseProduct(volume_.apply(v));
  };
  ComplexVector x = guess ? *guess : ComplexVector::Zero(rhs.size());
  const GmresReport report = gmres(op, rhs, x, options_.gmres);
  if (!report.converged)
    throw SolverFailure("transposed GMRES did not converge (relative residual " +
                            std::to_string(report.relative_residual) + ")",
                        report.relative_residual, report.iterations);
  return x;
}

ForwardSolution ForwardModel::forward(const RealVector& chi, const ComplexMatrix* warm_scattered) const {
  check_contrast(chi);
  const Eigen::Index n_tx = setup_.n_tx();
  ForwardSolution sol;
  sol.scattered.resize(grid_.doi_size(), n_tx);
  std::vector<GmresReport> reports(n_tx);

  parallel_for(int(n_tx), options_.threads, [&](int l) {
    const ComplexVector u_inc = incident_.col(l);
    const ComplexVector rhs = volume_.apply(chi.cast<Complex>().cwiseProduct(u_inc));
    auto op = [&](const ComplexVector& v) -> ComplexVector {
      return v - volume_.apply(chi.cast<Complex>().cwiseProduct(v));
    };
    ComplexVector x = warm_scattered ? ComplexVector(warm_scattered->col(l)) : ComplexVector::Zero(rhs.size());
    reports[l] = gmres(op, rhs, x, options_.gmres);
    sol.scattered.col(l) = x;
  });

  for (const auto& r : reports) {
    sol.gmres_iterations += r.iterations;
    sol.worst_residual = std::max(sol.worst_residual, r.relative_residual);
    if (!r.converged)
      throw SolverFailure("Lippmann-Schwinger GMRES did not converge (relative residual " +
                              std::to_string(r.relative_residual) + ")",
                          r.relative_residual, r.iterations);
  }
  sol.total = incident_ + sol.scattered;
  sol.scatter = measurement_ * (chi.cast<Complex>().asDiagonal() * sol.total);
  return sol;
}

ScatterMatrix ForwardModel::born(const RealVector& chi) const {
  check_contrast(chi);
  return measurement_ * (chi.cast<Complex>().asDiagonal() * incident_);
}

ComplexVector solve_scattered(const PeriodizedKernel& kernel, const DiscreteGrid& grid, const ContrastField& chi,
                              const ComplexVector& u_inc, const GmresOptions& options) {
  if (chi.n_doi() != grid.n_doi()) throw std::invalid_argument("contrast does not match grid");
  const VolumeOperator volume(grid, kernel);
  const ComplexVector c = chi.values().cast<Complex>();
  const ComplexVector rhs = volume.apply(c.cwiseProduct(u_inc));
  auto op = [&](const ComplexVector& v) -> ComplexVector { return v - volume.apply(c.cwiseProduct(v)); };
  ComplexVector x = ComplexVector::Zero(rhs.size());
  const GmresReport report = gmres(op, rhs, x, options);
  if (!report.converged)
    throw SolverFailure("Lippmann-Schwinger GMRES did not converge", report.relative_residual, report.iterations);
  return x;
}

ScatterMatrix forward(const MeasurementSetup& setup, const DiscreteGrid& grid, const PeriodizedKernel& kernel,
                      const ContrastField& chi, const SolverOptions& options) {
  if (chi.n_doi() != grid.n_doi()) throw std::invalid_argument("contrast does not match grid");
  return ForwardModel(grid, setup, kernel, options).forward(chi.values()).scatter;
}

}  // namespace mwt
