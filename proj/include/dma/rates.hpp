#pragma once

#include <string>
#include <vector>

#include "dma/model.hpp"

namespace dma {

/// Whitened Gram matrix Lambda^{-1/2} G G^H Lambda^{-1/2} with its
/// eigen-pairs sorted in descending order (negative round-off clamped to 0).
template <typename Real>
struct WhitenedChannel {
  CMatrix<Real> gram;
  RVector<Real> eigenvalues;
  CMatrix<Real> eigenvectors;
};

/// Noise covariance together with its Hermitian square root and inverse
/// square root, computed once per covariance.
template <typename Real>
struct NoiseFactors {
  CMatrix<Real> cov;
  CMatrix<Real> sqrt;
  CMatrix<Real> inv_sqrt;

  /// Throws SingularNoiseError unless min eigenvalue > 1e-12 * max.
  explicit NoiseFactors(const CMatrix<Real>& lambda) : cov(lambda) {
    const auto e = linalg::eigh_descending<Real>(lambda);
    const Index n = e.values.size();
    if (n == 0) return;
    const Real lmax = e.values(0);
    const Real lmin = e.values(n - 1);
    if (!(lmax > Real(0)) || !(lmin > Real(1e-12) * lmax)) {
      throw SingularNoiseError("noise covariance is not positive definite (min eigenvalue " +
                               std::to_string(static_cast<double>(lmin)) + ", max " +
                               std::to_string(static_cast<double>(lmax)) + ")");
    }
    const RVector<Real> s = e.values.cwiseMax(Real(1e-14) * lmax).cwiseSqrt();
    sqrt = e.vectors * s.asDiagonal() * e.vectors.adjoint();
    inv_sqrt = e.vectors * s.cwiseInverse().asDiagonal() * e.vectors.adjoint();
  }
};

template <typename Real>
WhitenedChannel<Real> whiten(const CMatrix<Real>& g, const NoiseFactors<Real>& noise) {
  if (g.rows() != noise.cov.rows()) throw DimensionError("whiten: channel/noise size mismatch");
  const CMatrix<Real> w = noise.inv_sqrt * g;
  WhitenedChannel<Real> out;
  out.gram = linalg::hermitian_part(CMatrix<Real>(w * w.adjoint()));
  auto e = linalg::eigh_descending<Real>(out.gram);
  out.eigenvalues = e.values.cwiseMax(Real(0));
  out.eigenvectors = std::move(e.vectors);
  return out;
}

template <typename Real>
WhitenedChannel<Real> whiten(const CMatrix<Real>& g, const CMatrix<Real>& noise_cov) {
  return whiten<Real>(g, NoiseFactors<Real>(noise_cov));
}

/// Memoryless channels only.
template <typename Real>
WhitenedChannel<Real> whiten(const ChannelTaps<Real>& channel) {
  if (!channel.is_flat()) throw PreconditionError("whiten: channel has memory; pass G(omega)");
  return whiten<Real>(channel.taps().front(), channel.noise_cov());
}

/// Non-zero spectrum of the whitened Gram matrix via the small n_u x n_u
/// form W^H W, W = Lambda^{-1/2} G. Descending, clamped at 0.
template <typename Real>
RVector<Real> whitened_eigenvalues(const CMatrix<Real>& g, const NoiseFactors<Real>& noise) {
  const CMatrix<Real> w = noise.inv_sqrt * g;
  RVector<Real> ev = linalg::eigh_descending<Real>(CMatrix<Real>(w.adjoint() * w)).values;
  return ev.cwiseMax(Real(0));
}

namespace detail {

/// log2 |I + V^H G~ V| where V spans the row space of `combiner_sqrt`
/// (= Q H Lambda^{1/2}) and `whitened` = Lambda^{-1/2} G(omega).
template <typename Real>
Real projection_log_det(const CMatrix<Real>& combiner_sqrt, const CMatrix<Real>& whitened,
                        bool& zero_combiner) {
  const CMatrix<Real> v = linalg::row_space_basis<Real>(combiner_sqrt);
  if (v.cols() == 0) {
    zero_combiner = true;
    return Real(0);
  }
  const CMatrix<Real> x = v.adjoint() * whitened;
  CMatrix<Real> m = x * x.adjoint();
  m.diagonal().array() += Real(1);
  return linalg::log2_det_hpd<Real>(m);
}

/// Direct log2 |I + A G G^H A^H (A Lambda A^H)^{-1}| with A = Q H(omega).
template <typename Real>
Real direct_log_det(const CMatrix<Real>& a, const CMatrix<Real>& g, const CMatrix<Real>& lambda) {
  const CMatrix<Real> ag = a * g;
  const CMatrix<Real> noise = a * lambda * a.adjoint();
  CMatrix<Real> m = (ag * ag.adjoint()) * noise.inverse();
  m.diagonal().array() += Real(1);
  return linalg::log2_abs_det<Real>(m);
}

template <typename Real>
Real top_log_sum(const RVector<Real>& ev, Index k) {
  Real s = 0;
  for (Index i = 0; i < std::min<Index>(k, ev.size()); ++i) s += std::log2(Real(1) + ev(i));
  return s;
}

}  // namespace detail

/// Flat-channel sum-rate (1/n_u) log2|I + Q G G^H Q^H (Q Lambda Q^H)^{-1}|,
/// evaluated through the row-space projection of Q Lambda^{1/2}. Q may be
/// any N x n_t matrix; rank-deficient Q gets pseudo-inverse semantics.
template <typename Real>
RateReport<Real> flat_sum_rate(const CMatrix<Real>& q, const CMatrix<Real>& g,
                               const NoiseFactors<Real>& noise, Index n_users) {
  if (q.cols() != g.rows()) throw DimensionError("flat_sum_rate: Q and G sizes differ");
  RateReport<Real> r;
  const Real ld = detail::projection_log_det<Real>(CMatrix<Real>(q * noise.sqrt),
                                                   CMatrix<Real>(noise.inv_sqrt * g), r.zero_combiner);
  r.rate_bps_hz = ld / static_cast<Real>(n_users);
  return r;
}

template <typename Real>
RateReport<Real> flat_sum_rate(const CMatrix<Real>& q, const CMatrix<Real>& g,
                               const CMatrix<Real>& noise_cov, Index n_users) {
  return flat_sum_rate<Real>(q, g, NoiseFactors<Real>(noise_cov), n_users);
}

template <typename Real>
RateReport<Real> flat_sum_rate(const DmaWeights<Real>& w, const ChannelTaps<Real>& channel) {
  if (!channel.is_flat()) throw PreconditionError("flat_sum_rate: channel has memory");
  return flat_sum_rate<Real>(expand_weights(w), channel.taps().front(), channel.noise_cov(),
                             channel.n_users());
}

/// Cross-check route: explicit inverse and LU determinant.
template <typename Real>
Real flat_sum_rate_direct(const CMatrix<Real>& q, const CMatrix<Real>& g,
                          const CMatrix<Real>& noise_cov, Index n_users) {
  return detail::direct_log_det<Real>(q, g, noise_cov) / static_cast<Real>(n_users);
}

/// Per-frequency quantities for repeated sum-rate evaluation of one channel
/// on one grid: G(omega_i), Lambda^{-1/2} G(omega_i), and H(omega_i).
template <typename Real>
class SelectiveEvaluator {
 public:
  SelectiveEvaluator(const ChannelTaps<Real>& channel, const DmaResponse<Real>& response,
                     const FrequencyGrid& grid)
      : noise_(channel.noise_cov()), n_users_(channel.n_users()) {
    if (response.n_ant() != channel.n_ant()) {
      throw DimensionError("response and channel disagree on n_ant");
    }
    for (Index i = 1; i <= grid.size(); ++i) {
      const Real w = grid.omega<Real>(i);
      CMatrix<Real> g = channel.frequency_response(w);
      whitened_.push_back(noise_.inv_sqrt * g);
      g_.push_back(std::move(g));
      h_.push_back(response.diagonal(w));
    }
  }

  RateReport<Real> rate(const CMatrix<Real>& q) const {
    RateReport<Real> r;
    Real acc = 0;
    for (std::size_t i = 0; i < h_.size(); ++i) {
      const CMatrix<Real> qh = q * h_[i].asDiagonal();
      const Real ld = detail::projection_log_det<Real>(CMatrix<Real>(qh * noise_.sqrt), whitened_[i],
                                                       r.zero_combiner);
      r.per_frequency.push_back(ld);
      acc += ld;
    }
    r.rate_bps_hz = acc / (static_cast<Real>(h_.size()) * static_cast<Real>(n_users_));
    return r;
  }

  /// Eq.-(7) integrand evaluated directly (explicit inverse).
  Real rate_direct(const CMatrix<Real>& q) const {
    Real acc = 0;
    for (std::size_t i = 0; i < h_.size(); ++i) {
      acc += detail::direct_log_det<Real>(CMatrix<Real>(q * h_[i].asDiagonal()), g_[i], noise_.cov);
    }
    return acc / (static_cast<Real>(h_.size()) * static_cast<Real>(n_users_));
  }

  const NoiseFactors<Real>& noise() const { return noise_; }
  const std::vector<CMatrix<Real>>& channel_at() const { return g_; }
  const std::vector<CVector<Real>>& response_at() const { return h_; }

 private:
  NoiseFactors<Real> noise_;
  Index n_users_;
  std::vector<CMatrix<Real>> g_;
  std::vector<CMatrix<Real>> whitened_;
  std::vector<CVector<Real>> h_;
};

/// Quadrature sum-rate (1/(B n_u)) sum_i log2|I + ...| on the grid.
template <typename Real>
RateReport<Real> selective_sum_rate(const CMatrix<Real>& q, const ChannelTaps<Real>& channel,
                                    const DmaResponse<Real>& response, const FrequencyGrid& grid) {
  return SelectiveEvaluator<Real>(channel, response, grid).rate(q);
}

template <typename Real>
RateReport<Real> selective_sum_rate(const DmaWeights<Real>& w, const ChannelTaps<Real>& channel,
                                    const DmaResponse<Real>& response, const FrequencyGrid& grid) {
  return selective_sum_rate<Real>(expand_weights(w), channel, response, grid);
}

/// Rate of an ideal unconstrained array: all n_u whitened eigenvalues at
/// every grid frequency.
template <typename Real>
RateReport<Real> fundamental_limit(const ChannelTaps<Real>& channel, const FrequencyGrid& grid) {
  const NoiseFactors<Real> noise(channel.noise_cov());
  const Index nu = channel.n_users();
  RateReport<Real> r;
  Real acc = 0;
  for (Index i = 1; i <= grid.size(); ++i) {
    const auto ev = whitened_eigenvalues<Real>(channel.frequency_response(grid.omega<Real>(i)), noise);
    const Real v = detail::top_log_sum<Real>(ev, nu);
    r.per_frequency.push_back(v);
    acc += v;
  }
  r.rate_bps_hz = acc / (static_cast<Real>(grid.size()) * static_cast<Real>(nu));
  return r;
}

/// Best flat-channel rate over unstructured N_d x n_t combiners.
template <typename Real>
RateReport<Real> optimal_flat_rate(const ChannelTaps<Real>& channel, Index n_strips) {
  if (!channel.is_flat()) throw PreconditionError("optimal_flat_rate: channel has memory");
  const NoiseFactors<Real> noise(channel.noise_cov());
  const auto ev = whitened_eigenvalues<Real>(channel.taps().front(), noise);
  const Index nu = channel.n_users();
  RateReport<Real> r;
  r.rate_bps_hz = detail::top_log_sum<Real>(ev, std::min(n_strips, nu)) / static_cast<Real>(nu);
  return r;
}

/// U D V~^H Lambda^{-1/2}, V~ the top-N_d eigenvectors of the whitened Gram.
template <typename Real>
CMatrix<Real> build_optimal_weights(const ChannelTaps<Real>& channel, Index n_strips,
                                    const CMatrix<Real>& u, const RVector<Real>& d) {
  if (u.rows() != n_strips || u.cols() != n_strips || d.size() != n_strips) {
    throw DimensionError("build_optimal_weights: U and D must be N_d x N_d");
  }
  if (n_strips > channel.n_ant()) throw DimensionError("build_optimal_weights: N_d > n_ant");
  const NoiseFactors<Real> noise(channel.noise_cov());
  if (!channel.is_flat()) throw PreconditionError("build_optimal_weights: channel has memory");
  const auto wc = whiten<Real>(channel.taps().front(), noise);
  const CMatrix<Real> vh = wc.eigenvectors.leftCols(n_strips).adjoint();
  return u * d.asDiagonal() * vh * noise.inv_sqrt;
}

template <typename Real>
void require_nonsingular_response(const DmaResponse<Real>& response, const FrequencyGrid& grid) {
  for (Index i = 1; i <= grid.size(); ++i) {
    const Real w = grid.omega<Real>(i);
    const auto d = response.diagonal(w);
    if (d.size() > 0 && d.cwiseAbs().minCoeff() <= Real(1e-12)) {
      throw PreconditionError("DMA response is singular at omega = " +
                              std::to_string(static_cast<double>(w)));
    }
  }
}

/// Upper bound from frequency-varying weights: the top min(n_u, N_d)
/// whitened eigenvalues at every grid frequency.
template <typename Real>
RateReport<Real> selective_upper_bound(const ChannelTaps<Real>& channel,
                                       const DmaResponse<Real>& response, const FrequencyGrid& grid,
                                       Index n_strips) {
  require_nonsingular_response<Real>(response, grid);
  const NoiseFactors<Real> noise(channel.noise_cov());
  const Index nu = channel.n_users();
  const Index k = std::min(nu, n_strips);
  RateReport<Real> r;
  Real acc = 0;
  for (Index i = 1; i <= grid.size(); ++i) {
    const auto ev = whitened_eigenvalues<Real>(channel.frequency_response(grid.omega<Real>(i)), noise);
    const Real v = detail::top_log_sum<Real>(ev, k);
    r.per_frequency.push_back(v);
    acc += v;
  }
  r.rate_bps_hz = acc / (static_cast<Real>(grid.size()) * static_cast<Real>(nu));
  return r;
}

/// Block-diagonal frequency lifting, kept as its diagonal blocks:
/// channel block i = H(omega_i) G(omega_i), noise block i = H Lambda H^H.
template <typename Real>
struct BarMatrices {
  std::vector<CMatrix<Real>> channel_blocks;
  std::vector<CMatrix<Real>> noise_blocks;

  Index blocks() const { return static_cast<Index>(channel_blocks.size()); }
};

template <typename Real>
BarMatrices<Real> build_bar_matrices(const ChannelTaps<Real>& channel,
                                     const DmaResponse<Real>& response, const FrequencyGrid& grid) {
  BarMatrices<Real> bar;
  for (Index i = 1; i <= grid.size(); ++i) {
    const Real w = grid.omega<Real>(i);
    const CVector<Real> h = response.diagonal(w);
    bar.channel_blocks.push_back(h.asDiagonal() * channel.frequency_response(w));
    bar.noise_blocks.push_back(h.asDiagonal() * channel.noise_cov() * h.conjugate().asDiagonal());
  }
  return bar;
}

/// Single log-det over the lifted system with combiner I_B kron Q, split
/// into its diagonal blocks (the determinant of a block-diagonal matrix is
/// the product of the block determinants).
template <typename Real>
Real lifted_sum_rate(const BarMatrices<Real>& bar, const CMatrix<Real>& q, Index n_users) {
  Real acc = 0;
  for (Index i = 0; i < bar.blocks(); ++i) {
    acc += detail::direct_log_det<Real>(q, bar.channel_blocks[static_cast<std::size_t>(i)],
                                        bar.noise_blocks[static_cast<std::size_t>(i)]);
  }
  return acc / (static_cast<Real>(bar.blocks()) * static_cast<Real>(n_users));
}

}  // namespace dma
