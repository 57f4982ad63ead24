#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mwt/inversion.hpp"

namespace mwt {

struct CheckResult {
  std::string name;
  double value = 0.0;      // measured error (or other statistic)
  double threshold = 0.0;  // pass when value < threshold
  bool passed = false;
  std::string detail;
};

/// Small default problem for the fast checks: d = 1 m, 400 MHz, n_cd = 46 (16 x 16 DOI),
/// 16 TX / 32 RX on a 3 m circle.
struct SmallProblem {
  DiscreteGrid grid;
  MeasurementSetup setup;
};
SmallProblem small_problem(int n_cd = 46);

/// Smooth random contrast in [0, amplitude] used by the derivative checks.
RealVector random_contrast(const DiscreteGrid& grid, double amplitude, std::uint64_t seed);

/// max over `pairs` random (h, H) of |Re<A diag(h) B, H> - <h, adjoint(H)>| / |Re<..>|.
CheckResult check_adjoint_identity(int pairs = 20, std::uint64_t seed = 11);

/// ||g_fd - g|| / ||g|| over `pixels` random pixels, central differences with GMRES at 1e-12.
CheckResult check_gradient_fd(int pixels = 10, std::uint64_t seed = 12);

/// ||F(chi) - F'(0)[chi]|| / ||F(chi)|| at ||chi||_inf = 1e-4.
CheckResult check_born_limit(std::uint64_t seed = 13);

/// Phi_hat(0) against the closed form, radial symmetry, and fast V_ND vs the literal CD path.
CheckResult check_kernel_oracle();

/// max_t |lambda_t SNR_t - lambda| / lambda and the anneal endpoints t(1) = 500, t(n_max) = 1.
CheckResult check_schedule();

/// Relative L2 error of the volume solver against the series solution for a centred disk.
/// `seconds` receives the wall time of the 16-transmitter forward pass.
CheckResult check_disk_oracle(int n_cd, double eps_r, double radius, double* seconds = nullptr);

std::string format_check(const CheckResult& r);

}  // namespace mwt
