#pragma once

#include <vector>

#include "dma/model.hpp"

namespace dma {

template <typename Real>
struct ProjectionResult {
  Complex<Real> value;
  Real distance = 0;
};

/// Nearest point of `set` to m.
///
/// Ties are resolved deterministically: BinaryAmplitude picks 0 at exact
/// equidistance, and LorentzianPhase maps the circle centre j/2 to (1 + j)/2.
template <typename Real>
ProjectionResult<Real> project_scalar(Complex<Real> m, const WeightSet& set) {
  using K = WeightSet::Kind;
  Complex<Real> q = m;
  switch (set.kind()) {
    case K::Unconstrained:
      break;
    case K::AmplitudeOnly:
      q = Complex<Real>(std::clamp(m.real(), Real(set.lower()), Real(set.upper())), Real(0));
      break;
    case K::BinaryAmplitude: {
      const Complex<Real> c(Real(set.level()), Real(0));
      q = std::norm(m) <= std::norm(m - c) ? Complex<Real>(0) : c;
      break;
    }
    case K::LorentzianPhase: {
      const Complex<Real> centre(Real(0), Real(0.5));
      const Complex<Real> d = m - centre;
      const Real r = std::abs(d);
      q = r == Real(0) ? Complex<Real>(Real(0.5), Real(0.5)) : centre + Real(0.5) * d / r;
      break;
    }
  }
  return {q, std::abs(m - q)};
}

/// Element-wise projection of an N_d x N_e coefficient matrix.
template <typename Real>
CMatrix<Real> project_coeffs(const CMatrix<Real>& c, const WeightSet& set) {
  CMatrix<Real> out(c.rows(), c.cols());
  for (Index j = 0; j < c.cols(); ++j) {
    for (Index i = 0; i < c.rows(); ++i) out(i, j) = project_scalar<Real>(c(i, j), set).value;
  }
  return out;
}

/// Closest feasible DMA weights to an arbitrary N_d x n_t matrix. Entries
/// off the strip blocks do not influence the result.
template <typename Real>
DmaWeights<Real> project_weights(const CMatrix<Real>& m, const WeightSet& set,
                                 const SystemDims& dims) {
  if (m.rows() != dims.n_strips || m.cols() != dims.n_ant()) {
    throw DimensionError("project_weights: M must be n_strips x n_ant");
  }
  CMatrix<Real> c(dims.n_strips, dims.n_elems);
  for (Index p = 0; p < dims.n_strips; ++p) {
    c.row(p) = m.block(p, p * dims.n_elems, 1, dims.n_elems);
  }
  return DmaWeights<Real>(dims, project_coeffs<Real>(c, set), set);
}

/// Closest Q (feasible) to M in the sense of ||I_B kron Q - M||.
///
/// Each coefficient sees B aligned entries of M, one per diagonal block; the
/// cost is B |q - mean|^2 + const, so the answer is the projected mean.
template <typename Real>
DmaWeights<Real> project_weights_kron(const CMatrix<Real>& m, const WeightSet& set,
                                      const SystemDims& dims, Index b) {
  const Index nd = dims.n_strips;
  const Index nt = dims.n_ant();
  const Index ne = dims.n_elems;
  if (b < 1 || m.rows() != b * nd || m.cols() != b * nt) {
    throw DimensionError("project_weights_kron: M must be B*n_strips x B*n_ant");
  }
  CMatrix<Real> mean = CMatrix<Real>::Zero(nd, ne);
  for (Index i = 0; i < b; ++i) {
    for (Index p = 0; p < nd; ++p) {
      mean.row(p) += m.block(i * nd + p, i * nt + p * ne, 1, ne);
    }
  }
  mean /= static_cast<Real>(b);
  return DmaWeights<Real>(dims, project_coeffs<Real>(mean, set), set);
}

/// argmin over unitary U of ||M1 - U M2||, i.e. U_M V_M^H from the SVD of
/// M1 M2^H. For rank-deficient products the SVD's own basis completion is
/// used; every completion attains the same objective.
template <typename Real>
CMatrix<Real> procrustes_from_product(const CMatrix<Real>& m1_m2h) {
  if (m1_m2h.rows() != m1_m2h.cols()) throw DimensionError("procrustes: product must be square");
  Eigen::BDCSVD<CMatrix<Real>> svd(m1_m2h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

template <typename Real>
CMatrix<Real> procrustes_unitary(const CMatrix<Real>& m1, const CMatrix<Real>& m2) {
  if (m1.rows() != m2.rows() || m1.cols() != m2.cols()) {
    throw DimensionError("procrustes: M1 and M2 must have the same shape");
  }
  return procrustes_from_product<Real>(CMatrix<Real>(m1 * m2.adjoint()));
}

template <typename Real>
struct DiagonalResult {
  RVector<Real> diag;
  /// Rows where M2 vanished and the floor was applied by convention.
  std::vector<Index> zero_rows;
};

/// argmin over real diagonal D >= eps of ||M1 - D M2||, row by row:
/// D_ii = max(Re<m1_i, m2_i> / ||m2_i||^2, eps).
template <typename Real>
DiagonalResult<Real> optimal_diagonal(const CMatrix<Real>& m1, const CMatrix<Real>& m2, Real eps) {
  if (m1.rows() != m2.rows() || m1.cols() != m2.cols()) {
    throw DimensionError("optimal_diagonal: M1 and M2 must have the same shape");
  }
  if (!(eps > Real(0))) throw PreconditionError("optimal_diagonal: eps must be positive");
  DiagonalResult<Real> out;
  out.diag.resize(m1.rows());
  for (Index i = 0; i < m1.rows(); ++i) {
    const Real den = m2.row(i).squaredNorm();
    if (den == Real(0)) {
      out.diag(i) = eps;
      out.zero_rows.push_back(i);
      continue;
    }
    // m1_i^H m2_i with m_i the conjugated rows: sum_c M1(i,c) conj(M2(i,c)).
    const Real num = (m1.row(i).cwiseProduct(m2.row(i).conjugate())).sum().real();
    out.diag(i) = std::max(num / den, eps);
  }
  return out;
}

}  // namespace dma
