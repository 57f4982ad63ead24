#pragma once

#include "mwt/forward.hpp"

namespace mwt {

/// Factors of the discrete Frechet derivative F'(chi)[h] = A diag(h) B.
struct JacobianFactors {
  ComplexMatrix a;  // N_s x N_D, V_D (I + chi . T_chi V_ND)
  ComplexMatrix b;  // N_D x N_i, total field T_chi S_Gamma_i
  int a_stamp = -1;  // iteration at which A was last rebuilt
  int b_stamp = -1;
};

/// B from a forward pass at the same chi: its columns are the total fields.
ComplexMatrix build_B(const ForwardSolution& solution);
ComplexMatrix build_B(const ForwardModel& model, const RealVector& chi);

/// A assembled row by row from the transposed system: with V symmetric,
///   A(j, .)^T = v_j + V_ND w_j,   (I - chi . V_ND) w_j = chi . v_j,
/// where v_j^T is row j of V_D. Costs N_s GMRES solves instead of N_D.
/// `warm` (N_D x N_s, the w_j of a previous build) seeds GMRES and is updated.
ComplexMatrix build_A(const ForwardModel& model, const RealVector& chi, ComplexMatrix* warm = nullptr);

/// A diag(h) B.
ScatterMatrix derivative_apply(const JacobianFactors& factors, const RealVector& h);

/// Real gradient g_p = Re sum_{j,l} conj(A_jp) H_jl conj(B_pl), i.e. the diagonal of
/// A^H H B^H evaluated as the row sums of (A^H H) .* conj(B).
RealVector adjoint_gradient(const JacobianFactors& factors, const ScatterMatrix& residual);

/// 0.5 ||F(chi) - measured||_F^2.
inline double data_consistency_loss(const ScatterMatrix& predicted, const ScatterMatrix& measured) {
  return 0.5 * (predicted - measured).squaredNorm();
}

}  // namespace mwt
