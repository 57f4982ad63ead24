#include "mwt/sensitivity.hpp"

namespace mwt {

ComplexMatrix build_B(const ForwardSolution& solution) { return solution.total; }

ComplexMatrix build_B(const ForwardModel& model, const RealVector& chi) { return model.forward(chi).total; }

ComplexMatrix build_A(const ForwardModel& model, const RealVector& chi, ComplexMatrix* warm) {
  const Eigen::Index n_rx = model.setup().n_rx();
  const Eigen::Index n_d = model.n_doi_points();
  if (chi.size() != n_d) throw std::invalid_argument("contrast length must equal N_D");
  const bool use_warm = warm && warm->rows() == n_d && warm->cols() == n_rx;
  ComplexMatrix solutions(n_d, n_rx);
  ComplexMatrix a(n_rx, n_d);
  const ComplexVector c = chi.cast<Complex>();

  parallel_for(int(n_rx), model.options().threads, [&](int j) {
    const ComplexVector v = model.measurement().row(j).transpose();
    const ComplexVector rhs = c.cwiseProduct(v);
    ComplexVector w;
    if (rhs.squaredNorm() == 0.0) {
      w = ComplexVector::Zero(n_d);
    } else {
      const ComplexVector guess = use_warm ? ComplexVector(warm->col(j)) : ComplexVector::Zero(n_d);
      w = model.solve_transposed(chi, rhs, &guess);
    }
    solutions.col(j) = w;
    a.row(j) = (v + model.volume().apply(w)).transpose();
  });

  if (warm) *warm = std::move(solutions);
  return a;
}

ScatterMatrix derivative_apply(const JacobianFactors& factors, const RealVector& h) {
  if (h.size() != factors.a.cols() || h.size() != factors.b.rows())
    throw std::invalid_argument("direction length does not match Jacobian factors");
  return factors.a * (h.cast<Complex>().asDiagonal() * factors.b);
}

RealVector adjoint_gradient(const JacobianFactors& factors, const ScatterMatrix& residual) {
  if (residual.rows() != factors.a.rows() || residual.cols() != factors.b.cols())
    throw std::invalid_argument("residual shape does not match Jacobian factors");
  const ComplexMatrix ah = factors.a.adjoint() * residual;  // N_D x N_i
  return ah.cwiseProduct(factors.b.conjugate()).rowwise().sum().real();
}

}  // namespace mwt
