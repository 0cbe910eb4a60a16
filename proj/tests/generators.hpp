// Seeded random inputs for property tests.
#pragma once

#include <cstdint>
#include <random>

#include "dma/model.hpp"

namespace gen {

using dma::CMatrix;
using dma::Index;
using dma::RVector;

class Source {
 public:
  explicit Source(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }
  Index integer(Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(eng_); }
  double normal() { return std::normal_distribution<double>()(eng_); }
  std::complex<double> complex() { return {normal(), normal()}; }

  CMatrix<double> matrix(Index r, Index c) {
    CMatrix<double> m(r, c);
    for (Index j = 0; j < c; ++j) {
      for (Index i = 0; i < r; ++i) m(i, j) = complex();
    }
    return m;
  }

  /// Hermitian positive definite with condition number below ~1e3.
  CMatrix<double> hpd(Index n) {
    const CMatrix<double> a = matrix(n, n);
    CMatrix<double> m = a * a.adjoint() / static_cast<double>(n);
    m.diagonal().array() += 0.05 + uniform();
    return (m + m.adjoint()) / 2.0;
  }

  /// Haar-like unitary from the QR of a Gaussian matrix.
  CMatrix<double> unitary(Index n) {
    Eigen::HouseholderQR<CMatrix<double>> qr(matrix(n, n));
    return qr.householderQ() * CMatrix<double>::Identity(n, n);
  }

  RVector<double> positive(Index n, double lo = 0.1, double hi = 3.0) {
    RVector<double> d(n);
    for (Index i = 0; i < n; ++i) d(i) = uniform(lo, hi);
    return d;
  }

  dma::SystemDims dims(Index max_strips, Index max_elems, Index max_users) {
    const Index nd = integer(1, max_strips);
    const Index ne = integer(1, max_elems);
    const Index nu = integer(1, std::min(max_users, nd * ne));
    return {nu, nd, ne};
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace gen
