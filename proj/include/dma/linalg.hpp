#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <numeric>
#include <vector>

#include "dma/errors.hpp"

namespace dma {

template <typename Real>
using Complex = std::complex<Real>;
template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
template <typename Real>
using RMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

namespace linalg {

/// Eigen-pairs of a Hermitian matrix, eigenvalues in descending order.
template <typename Real>
struct HermitianEigen {
  RVector<Real> values;
  CMatrix<Real> vectors;
};

template <typename Derived>
auto hermitian_part(const Eigen::MatrixBase<Derived>& a) {
  return ((a + a.adjoint()) / typename Derived::RealScalar(2)).eval();
}

template <typename Real>
Real max_asymmetry(const CMatrix<Real>& a) {
  if (a.size() == 0) return Real(0);
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

/// Descending eigen-decomposition. Ties keep the solver's natural index order
/// (reversed from ascending), so zero-eigenvalue vectors come out in a fixed
/// order for a given input.
template <typename Real>
HermitianEigen<Real> eigh_descending(const CMatrix<Real>& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix<Real>> solver(hermitian_part(a));
  if (solver.info() != Eigen::Success) {
    throw InvalidModel("Hermitian eigendecomposition failed to converge");
  }
  HermitianEigen<Real> out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

/// A^{1/2} of a Hermitian PSD matrix; negative eigenvalues are clipped to 0.
template <typename Real>
CMatrix<Real> hermitian_sqrt(const CMatrix<Real>& a) {
  auto e = eigh_descending<Real>(a);
  RVector<Real> s = e.values.cwiseMax(Real(0)).cwiseSqrt();
  return e.vectors * s.asDiagonal() * e.vectors.adjoint();
}

/// A^{-1/2} of a Hermitian positive definite matrix.
///
/// Throws SingularNoiseError when the smallest eigenvalue is not above
/// 1e-12 of the largest. Eigenvalues are floored at 1e-14 of the largest
/// before inversion.
template <typename Real>
CMatrix<Real> hermitian_inv_sqrt(const CMatrix<Real>& a) {
  auto e = eigh_descending<Real>(a);
  const Index n = e.values.size();
  if (n == 0) return CMatrix<Real>(0, 0);
  const Real lmax = e.values(0);
  const Real lmin = e.values(n - 1);
  if (!(lmax > Real(0)) || !(lmin > Real(1e-12) * lmax)) {
    throw SingularNoiseError("covariance is not positive definite (min eigenvalue " +
                             std::to_string(static_cast<double>(lmin)) + ", max " +
                             std::to_string(static_cast<double>(lmax)) + ")");
  }
  RVector<Real> s = e.values.cwiseMax(Real(1e-14) * lmax).cwiseSqrt().cwiseInverse();
  return e.vectors * s.asDiagonal() * e.vectors.adjoint();
}

/// Orthonormal basis of the row space of `a` (columns of the result span
/// range(a^H)). Singular values below `rel_tol * sigma_max` count as zero.
template <typename Real>
CMatrix<Real> row_space_basis(const CMatrix<Real>& a, Real rel_tol = Real(1e-12)) {
  Eigen::JacobiSVD<CMatrix<Real>> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Index rank = 0;
  if (s.size() > 0 && s(0) > Real(0)) {
    const Real cut = rel_tol * s(0);
    while (rank < s.size() && s(rank) > cut) ++rank;
  }
  return svd.matrixV().leftCols(rank);
}

/// log2 |A| for Hermitian positive definite A, via Cholesky.
template <typename Real>
Real log2_det_hpd(const CMatrix<Real>& a) {
  if (a.rows() == 0) return Real(0);
  Eigen::LLT<CMatrix<Real>> llt(hermitian_part(a));
  if (llt.info() != Eigen::Success) {
    throw InvalidModel("log-det argument is not positive definite");
  }
  Real acc = 0;
  const auto& l = llt.matrixLLT();
  for (Index i = 0; i < a.rows(); ++i) acc += std::log2(std::real(l(i, i)));
  return Real(2) * acc;
}

/// Generic log2 |A| via partial-pivot LU (real part of the complex log).
template <typename Real>
Real log2_abs_det(const CMatrix<Real>& a) {
  if (a.rows() == 0) return Real(0);
  Eigen::PartialPivLU<CMatrix<Real>> lu(a);
  const auto& m = lu.matrixLU();
  Real acc = 0;
  for (Index i = 0; i < a.rows(); ++i) acc += std::log2(std::abs(m(i, i)));
  return acc;
}

}  // namespace linalg
}  // namespace dma
