#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mwt/core.hpp"
#include "mwt/fft.hpp"
#include "mwt/gmres.hpp"
#include "mwt/parallel.hpp"

namespace mwt {

/// Fourier coefficients of the truncated (periodized) free-space kernel on the
/// integer lattice j in {-N/2, ..., N/2-1}^2, stored in FFT order.
struct PeriodizedKernel {
  ComplexMatrix hat;

  int size() const { return int(hat.rows()); }
  /// Coefficient at lattice point (j1, j2), j in [-N/2, N/2).
  Complex at(int j1, int j2) const;
};

/// Single coefficient as a function of rho = pi |j| and kappa = 2 sqrt(2) d k.
Complex kernel_hat_value(double rho, double kappa);

PeriodizedKernel kernel_hat(const DiscreteGrid& grid);

/// Thrown when the Lippmann-Schwinger solve does not reach its tolerance.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// The DOI-restricted volume operator V_ND = R FFT^-1 (hat .* ) FFT E.
///
/// `apply` evaluates the same discrete convolution on the smallest fast FFT size
/// that holds the linear convolution of two DOI-sized supports (2 n_doi - 1),
/// using kernel samples taken from FFT^-1(hat) on the CD grid. `apply_on_cd`
/// is the literal CD-sized evaluation and serves as the reference path.
class VolumeOperator {
 public:
  VolumeOperator(const DiscreteGrid& grid, const PeriodizedKernel& kernel);

  Eigen::Index size() const { return Eigen::Index(n_doi_) * n_doi_; }
  int embedding_size() const { return embed_size_; }

  ComplexVector apply(const ComplexVector& f) const;
  ComplexVector apply_on_cd(const ComplexVector& f) const;

  /// Spatial kernel value for a DOI index offset (d_row, d_col), |d| < n_doi.
  Complex spatial_kernel(int d_row, int d_col) const;

 private:
  int n_cd_ = 0;
  int n_doi_ = 0;
  int offset_ = 0;
  int embed_size_ = 0;
  ComplexMatrix cd_hat_;
  ComplexMatrix cd_spatial_;
  ComplexMatrix embed_hat_;
  Fft2d cd_fft_;
  Fft2d embed_fft_;
};

ComplexVector apply_V_ND(const PeriodizedKernel& kernel, const DiscreteGrid& grid, const ComplexVector& f);

/// Column l is the point-source field (i/4) H0(k |x - y_l|) on the DOI points.
ComplexMatrix incident_fields(const MeasurementSetup& setup, const DiscreteGrid& grid);

/// Dense N_s x N_D midpoint discretisation of V_D with the free-space kernel.
ComplexMatrix measurement_matrix(const MeasurementSetup& setup, const DiscreteGrid& grid);

ScatterMatrix measure(const MeasurementSetup& setup, const DiscreteGrid& grid, const ComplexMatrix& contrast_source);

struct SolverOptions {
  GmresOptions gmres;
  int threads = 1;
};

struct ForwardSolution {
  ScatterMatrix scatter;    // N_s x N_i
  ComplexMatrix scattered;  // N_D x N_i, u^s
  ComplexMatrix total;      // N_D x N_i, u^i + u^s
  int gmres_iterations = 0;
  double worst_residual = 0.0;
};

/// Bundles everything the forward map F(chi) needs for a fixed grid and antenna setup.
class ForwardModel {
 public:
  ForwardModel(const DiscreteGrid& grid, const MeasurementSetup& setup, SolverOptions options = {});
  ForwardModel(const DiscreteGrid& grid, const MeasurementSetup& setup, PeriodizedKernel kernel,
               SolverOptions options = {});

  const DiscreteGrid& grid() const { return grid_; }
  const MeasurementSetup& setup() const { return setup_; }
  const SolverOptions& options() const { return options_; }
  void set_options(const SolverOptions& options) { options_ = options; }
  const PeriodizedKernel& kernel() const { return kernel_; }
  const VolumeOperator& volume() const { return volume_; }
  const ComplexMatrix& incident() const { return incident_; }
  const ComplexMatrix& measurement() const { return measurement_; }

  Eigen::Index n_doi_points() const { return grid_.doi_size(); }

  /// Solves (I - V(chi .)) u^s = V(chi . u^i). `guess` warm-starts GMRES.
  ComplexVector solve_scattered(const RealVector& chi, const ComplexVector& u_inc,
                                const ComplexVector* guess = nullptr) const;

  /// Solves (I - chi . V) w = rhs, the transposed total-field system.
  ComplexVector solve_transposed(const RealVector& chi, const ComplexVector& rhs,
                                 const ComplexVector* guess = nullptr) const;

  /// Full forward pass. `warm_scattered` (N_D x N_i) seeds GMRES per transmitter.
  ForwardSolution forward(const RealVector& chi, const ComplexMatrix* warm_scattered = nullptr) const;

  /// Linearised (Born) measurements V_D (chi . u^i).
  ScatterMatrix born(const RealVector& chi) const;

 private:
  void check_contrast(const RealVector& chi) const;

  DiscreteGrid grid_;
  MeasurementSetup setup_;
  SolverOptions options_;
  PeriodizedKernel kernel_;
  VolumeOperator volume_;
  ComplexMatrix incident_;
  ComplexMatrix measurement_;
};

ComplexVector solve_scattered(const PeriodizedKernel& kernel, const DiscreteGrid& grid, const ContrastField& chi,
                              const ComplexVector& u_inc, const GmresOptions& options = {});

ScatterMatrix forward(const MeasurementSetup& setup, const DiscreteGrid& grid, const PeriodizedKernel& kernel,
                      const ContrastField& chi, const SolverOptions& options = {});

}  // namespace mwt
