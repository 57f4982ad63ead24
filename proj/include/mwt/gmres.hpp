#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace mwt {

struct GmresOptions {
  double tolerance = 1e-6;  // on ||b - A x|| / ||b||
  int restart = 30;
  int max_iterations = 200;  // total Arnoldi steps over all cycles
};

struct GmresReport {
  bool converged = false;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
/// `apply` is any callable mapping a vector to A times that vector. `x` holds the
/// initial guess on entry and the iterate on exit.
template <typename Operator, typename Scalar>
GmresReport gmres(const Operator& apply, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
                  Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x, const GmresOptions& opts = {}) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Real = typename Eigen::NumTraits<Scalar>::Real;

  GmresReport report;
  if (x.size() != b.size()) x = Vector::Zero(b.size());
  const Real b_norm = b.norm();
  if (b_norm == Real(0)) {
    x.setZero();
    report.converged = true;
    return report;
  }

  const int m = std::max(1, opts.restart);
  Matrix basis(b.size(), m + 1);
  Matrix hess = Matrix::Zero(m + 1, m);
  std::vector<Real> cs(m);
  std::vector<Scalar> sn(m);
  Vector g(m + 1);

  Vector r = b - apply(x);
  Real r_norm = r.norm();
  report.relative_residual = r_norm / b_norm;

  while (report.relative_residual > opts.tolerance && report.iterations < opts.max_iterations) {
    basis.col(0) = r / r_norm;
    g.setZero();
    g(0) = r_norm;
    hess.setZero();

    int k = 0;
    for (; k < m && report.iterations < opts.max_iterations; ++k) {
      ++report.iterations;
      Vector w = apply(basis.col(k));
      for (int i = 0; i <= k; ++i) {
        hess(i, k) = basis.col(i).dot(w);
        w.noalias() -= hess(i, k) * basis.col(i);
      }
      const Real w_norm = w.norm();
      hess(k + 1, k) = w_norm;
      if (w_norm > Real(0)) basis.col(k + 1) = w / w_norm;

      for (int i = 0; i < k; ++i) {
        const Scalar t = cs[i] * hess(i, k) + sn[i] * hess(i + 1, k);
        hess(i + 1, k) = -Eigen::numext::conj(sn[i]) * hess(i, k) + cs[i] * hess(i + 1, k);
        hess(i, k) = t;
      }
      const Real a = std::abs(hess(k, k));
      const Real h = std::abs(hess(k + 1, k));
      const Real denom = std::hypot(a, h);
      if (denom == Real(0)) {
        cs[k] = 1;
        sn[k] = 0;
      } else if (a == Real(0)) {
        cs[k] = 0;
        sn[k] = Eigen::numext::conj(hess(k + 1, k)) / h;
      } else {
        cs[k] = a / denom;
        sn[k] = (hess(k, k) / a) * Eigen::numext::conj(hess(k + 1, k)) / denom;
      }
      hess(k, k) = cs[k] * hess(k, k) + sn[k] * hess(k + 1, k);
      hess(k + 1, k) = 0;
      g(k + 1) = -Eigen::numext::conj(sn[k]) * g(k);
      g(k) = cs[k] * g(k);

      if (std::abs(g(k + 1)) / b_norm <= opts.tolerance || w_norm == Real(0)) {
        ++k;
        break;
      }
    }

    const Vector y =
        hess.topLeftCorner(k, k).template triangularView<Eigen::Upper>().solve(g.head(k));
    x.noalias() += basis.leftCols(k) * y;
    r = b - apply(x);
    r_norm = r.norm();
    report.relative_residual = r_norm / b_norm;
  }
  report.converged = report.relative_residual <= opts.tolerance;
  return report;
}

}  // namespace mwt
