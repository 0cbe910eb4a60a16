#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dma/errors.hpp"
#include "dma/linalg.hpp"
#include "dma/weight_set.hpp"

namespace dma {

/// Array dimensions: users, microstrips and elements per microstrip.
struct SystemDims {
  Index n_users = 1;
  Index n_strips = 1;
  Index n_elems = 1;

  SystemDims() = default;
  SystemDims(Index users, Index strips, Index elems)
      : n_users(users), n_strips(strips), n_elems(elems) {
    if (users < 1 || strips < 1 || elems < 1) {
      throw InvalidModel("system dimensions must all be >= 1");
    }
    if (users > n_ant()) {
      throw InvalidModel("number of users exceeds number of antenna elements");
    }
  }

  Index n_ant() const { return n_strips * n_elems; }

  bool operator==(const SystemDims&) const = default;
};

/// Per-strip DMA weights. Only the N_d x N_e coefficients are stored, so the
/// block structure of the expanded combining matrix holds by construction.
template <typename Real>
class DmaWeights {
 public:
  DmaWeights(SystemDims dims, CMatrix<Real> coeffs, std::optional<WeightSet> set = std::nullopt)
      : dims_(dims), coeffs_(std::move(coeffs)), set_(set) {
    if (coeffs_.rows() != dims_.n_strips || coeffs_.cols() != dims_.n_elems) {
      throw DimensionError("weight coefficients must be n_strips x n_elems");
    }
    if (set_) {
      for (Index p = 0; p < coeffs_.rows(); ++p) {
        for (Index l = 0; l < coeffs_.cols(); ++l) {
          if (set_->membership_distance(coeffs_(p, l)) > Real(1e-12)) {
            throw InvalidModel("weight (" + std::to_string(p) + "," + std::to_string(l) +
                               ") is outside the feasible set " + set_->label());
          }
        }
      }
    }
  }

  const SystemDims& dims() const { return dims_; }
  const CMatrix<Real>& coeffs() const { return coeffs_; }
  const std::optional<WeightSet>& weight_set() const { return set_; }

 private:
  SystemDims dims_;
  CMatrix<Real> coeffs_;
  std::optional<WeightSet> set_;
};

/// Expanded N_d x n_t combining matrix: row p carries strip p's coefficients
/// in columns p*N_e .. p*N_e + N_e - 1, zeros elsewhere.
template <typename Real>
CMatrix<Real> expand_weights(const DmaWeights<Real>& w) {
  const auto& d = w.dims();
  CMatrix<Real> q = CMatrix<Real>::Zero(d.n_strips, d.n_ant());
  for (Index p = 0; p < d.n_strips; ++p) {
    q.block(p, p * d.n_elems, 1, d.n_elems) = w.coeffs().row(p);
  }
  return q;
}

/// Reads the structural entries of an N_d x n_t matrix back into DmaWeights.
template <typename Real>
DmaWeights<Real> extract_weights(const CMatrix<Real>& q, const SystemDims& dims,
                                 std::optional<WeightSet> set = std::nullopt) {
  if (q.rows() != dims.n_strips || q.cols() != dims.n_ant()) {
    throw DimensionError("combining matrix must be n_strips x n_ant");
  }
  CMatrix<Real> c(dims.n_strips, dims.n_elems);
  for (Index p = 0; p < dims.n_strips; ++p) {
    c.row(p) = q.block(p, p * dims.n_elems, 1, dims.n_elems);
  }
  return DmaWeights<Real>(dims, std::move(c), set);
}

/// DTFT sum_tau taps[tau] e^{-j omega tau}.
template <typename Real>
CMatrix<Real> dtft_taps(const std::vector<CMatrix<Real>>& taps, Real omega) {
  if (taps.empty()) throw InvalidModel("tap list is empty");
  CMatrix<Real> out = taps.front();
  for (std::size_t t = 1; t < taps.size(); ++t) {
    out += taps[t] * std::polar(Real(1), -omega * static_cast<Real>(t));
  }
  return out;
}

/// Multipath channel {G[tau]} (each n_t x n_u) with noise covariance Lambda_W.
template <typename Real>
class ChannelTaps {
 public:
  ChannelTaps(std::vector<CMatrix<Real>> taps, CMatrix<Real> noise_cov)
      : taps_(std::move(taps)), noise_cov_(std::move(noise_cov)) {
    if (taps_.empty()) throw InvalidModel("channel needs at least one tap");
    const Index nt = taps_.front().rows();
    const Index nu = taps_.front().cols();
    for (const auto& g : taps_) {
      if (g.rows() != nt || g.cols() != nu) throw DimensionError("channel taps differ in shape");
    }
    if (noise_cov_.rows() != nt || noise_cov_.cols() != nt) {
      throw DimensionError("noise covariance must be n_ant x n_ant");
    }
    asymmetry_ = linalg::max_asymmetry<Real>(noise_cov_);
    noise_cov_ = linalg::hermitian_part(noise_cov_);
    const auto ev = linalg::eigh_descending<Real>(noise_cov_).values;
    const Real scale = ev.size() ? std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1))) : Real(0);
    if (ev.size() && ev(ev.size() - 1) < -Real(1e-12) * scale) {
      throw InvalidModel("noise covariance has a negative eigenvalue");
    }
  }

  const std::vector<CMatrix<Real>>& taps() const { return taps_; }
  const CMatrix<Real>& noise_cov() const { return noise_cov_; }
  Index n_ant() const { return taps_.front().rows(); }
  Index n_users() const { return taps_.front().cols(); }
  /// m_g: number of taps minus one.
  Index memory() const { return static_cast<Index>(taps_.size()) - 1; }
  bool is_flat() const { return taps_.size() == 1; }

  /// Largest |A - A^H| entry seen before symmetrization.
  Real asymmetry() const { return asymmetry_; }
  bool asymmetry_warning() const { return asymmetry_ > Real(1e-10); }

  CMatrix<Real> frequency_response(Real omega) const { return dtft_taps(taps_, omega); }

 private:
  std::vector<CMatrix<Real>> taps_;
  CMatrix<Real> noise_cov_;
  Real asymmetry_ = 0;
};

/// Diagonal metasurface response {H[tau]}, stored either as per-element FIR
/// taps or as a closed-form frequency-domain evaluator.
template <typename Real>
class DmaResponse {
 public:
  using Evaluator = std::function<CVector<Real>(Real)>;

  static DmaResponse identity(Index n_ant) {
    CMatrix<Real> taps = CMatrix<Real>::Ones(n_ant, 1);
    return DmaResponse(std::move(taps), true);
  }

  /// H[tau] = I * h[tau].
  static DmaResponse identical(Index n_ant, const std::vector<Complex<Real>>& h) {
    if (h.empty()) throw InvalidModel("response needs at least one tap");
    CMatrix<Real> taps(n_ant, static_cast<Index>(h.size()));
    for (Index t = 0; t < taps.cols(); ++t) taps.col(t).setConstant(h[static_cast<std::size_t>(t)]);
    return DmaResponse(std::move(taps), true);
  }

  /// Row k holds h_k[0..m_h] for element k = p*N_e + l.
  static DmaResponse fir(CMatrix<Real> taps) {
    if (taps.cols() < 1) throw InvalidModel("response needs at least one tap");
    return DmaResponse(std::move(taps), false);
  }

  static DmaResponse spectral(Index n_ant, Evaluator f, bool identical_elements = false) {
    DmaResponse r(CMatrix<Real>(0, 0), identical_elements);
    r.n_ant_ = n_ant;
    r.eval_ = std::move(f);
    return r;
  }

  Index n_ant() const { return n_ant_; }
  bool identical_elements() const { return identical_; }
  bool is_spectral() const { return static_cast<bool>(eval_); }
  /// m_h for FIR form; nullopt for spectral form.
  std::optional<Index> memory() const {
    if (eval_) return std::nullopt;
    return fir_.cols() - 1;
  }

  /// Diagonal of H(omega).
  CVector<Real> diagonal(Real omega) const {
    if (eval_) {
      CVector<Real> d = eval_(omega);
      if (d.size() != n_ant_) throw DimensionError("response evaluator returned wrong size");
      return d;
    }
    CVector<Real> d = fir_.col(0);
    for (Index t = 1; t < fir_.cols(); ++t) {
      d += fir_.col(t) * std::polar(Real(1), -omega * static_cast<Real>(t));
    }
    return d;
  }

  CMatrix<Real> matrix(Real omega) const { return diagonal(omega).asDiagonal(); }

 private:
  DmaResponse(CMatrix<Real> taps, bool identical)
      : fir_(std::move(taps)), n_ant_(fir_.rows()), identical_(identical) {}

  CMatrix<Real> fir_;
  Index n_ant_ = 0;
  bool identical_ = false;
  Evaluator eval_;
};

/// B uniform frequencies omega_i = 2 pi i / B, i = 1..B.
class FrequencyGrid {
 public:
  explicit FrequencyGrid(Index b) : size_(b) {
    if (b < 1) throw InvalidModel("frequency grid needs B >= 1");
  }

  Index size() const { return size_; }

  /// i is 1-based, matching omega_B = 2 pi.
  template <typename Real = double>
  Real omega(Index i) const {
    return Real(2) * std::numbers::pi_v<Real> * static_cast<Real>(i) / static_cast<Real>(size_);
  }

  template <typename Real = double>
  std::vector<Real> frequencies() const {
    std::vector<Real> w;
    w.reserve(static_cast<std::size_t>(size_));
    for (Index i = 1; i <= size_; ++i) w.push_back(omega<Real>(i));
    return w;
  }

 private:
  Index size_;
};

/// Average sum-rate in bits/s/Hz, optionally with the per-frequency integrands.
template <typename Real>
struct RateReport {
  Real rate_bps_hz = 0;
  std::vector<Real> per_frequency;
  /// Set when the combining matrix was identically zero at some frequency.
  bool zero_combiner = false;
};

}  // namespace dma
