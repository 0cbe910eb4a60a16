#pragma once

#include <algorithm>
#include <limits>
#include <tuple>
#include <vector>

#include "dma/projections.hpp"
#include "dma/rates.hpp"

namespace dma {

struct OptimizerConfig {
  double epsilon = 1e-4;  ///< floor on the diagonal scaling entries
  Index max_iters = 500;
  double rel_tol = 1e-8;  ///< stop when |f_k - f_{k+1}| <= rel_tol * f_k
  Index b_opt = 8;        ///< grid size used by the frequency-selective designer

  void validate() const {
    if (!(epsilon > 0.0)) throw InvalidModel("optimizer epsilon must be > 0");
    if (max_iters < 1) throw InvalidModel("optimizer max_iters must be >= 1");
    if (!(rel_tol > 0.0)) throw InvalidModel("optimizer rel_tol must be > 0");
    if (b_opt < 1) throw InvalidModel("optimizer b_opt must be >= 1");
  }
};

enum class Termination { Converged, MaxIterations };

inline const char* to_string(Termination t) {
  return t == Termination::Converged ? "converged" : "max_iters";
}

/// Objective ||Q - U D V~^H Lambda^{-1/2}||^2 after every iteration, and the
/// final unitary and diagonal factors.
template <typename Real>
struct OptimizerTrace {
  std::vector<Real> objective;
  CMatrix<Real> u;
  RVector<Real> d;
  Termination reason = Termination::MaxIterations;

  Index iterations() const { return static_cast<Index>(objective.size()); }
  Real final_objective() const { return objective.empty() ? Real(0) : objective.back(); }
};

template <typename Real>
struct DesignResult {
  DmaWeights<Real> weights;
  OptimizerTrace<Real> trace;
};

namespace detail {

template <typename Real>
bool converged(const std::vector<Real>& f, double rel_tol) {
  if (f.size() < 2) return f.size() == 1 && f.back() == Real(0);
  const Real prev = f[f.size() - 2];
  const Real cur = f.back();
  return std::abs(prev - cur) <= Real(rel_tol) * std::max(std::abs(prev), std::numeric_limits<Real>::min());
}

}  // namespace detail

/// Rows of V~^H Lambda^{-1/2}: the target subspace the structured Q is
/// fitted to, V~ the top-N_d eigenvectors of the whitened Gram matrix.
template <typename Real>
CMatrix<Real> flat_target(const CMatrix<Real>& g, const NoiseFactors<Real>& noise, Index n_strips) {
  if (n_strips > g.rows()) throw DimensionError("flat_target: N_d > n_ant");
  const auto wc = whiten<Real>(g, noise);
  return wc.eigenvectors.leftCols(n_strips).adjoint() * noise.inv_sqrt;
}

/// Alternating minimization of ||Q - U D A||^2 over feasible structured Q,
/// unitary U and diagonal D >= eps, from U = D = I. `a` is N_d x n_t.
template <typename Real>
DesignResult<Real> fit_flat(const CMatrix<Real>& a, const SystemDims& dims, const WeightSet& set,
                            const OptimizerConfig& cfg) {
  cfg.validate();
  const Index nd = dims.n_strips;
  if (a.rows() != nd || a.cols() != dims.n_ant()) throw DimensionError("fit_flat: target must be N_d x n_ant");
  CMatrix<Real> u = CMatrix<Real>::Identity(nd, nd);
  RVector<Real> d = RVector<Real>::Ones(nd);
  const Real eps = Real(cfg.epsilon);

  OptimizerTrace<Real> trace;
  CMatrix<Real> coeffs;
  trace.reason = Termination::MaxIterations;
  for (Index k = 0; k < cfg.max_iters; ++k) {
    const CMatrix<Real> m = u * d.asDiagonal() * a;
    auto w = project_weights<Real>(m, set, dims);
    const CMatrix<Real> q = expand_weights(w);
    u = procrustes_unitary<Real>(q, CMatrix<Real>(d.asDiagonal() * a));
    d = optimal_diagonal<Real>(CMatrix<Real>(u.adjoint() * q), a, eps).diag;
    trace.objective.push_back((q - u * d.asDiagonal() * a).squaredNorm());
    coeffs = w.coeffs();
    if (detail::converged(trace.objective, cfg.rel_tol)) {
      trace.reason = Termination::Converged;
      break;
    }
  }
  trace.u = std::move(u);
  trace.d = std::move(d);
  return {DmaWeights<Real>(dims, std::move(coeffs), set), std::move(trace)};
}

/// Feasible weights for a memoryless channel with identical element response.
template <typename Real>
DesignResult<Real> design_flat(const ChannelTaps<Real>& channel, const SystemDims& dims,
                               const WeightSet& set, const OptimizerConfig& cfg) {
  if (!channel.is_flat()) throw PreconditionError("design_flat: channel has memory");
  if (channel.n_ant() != dims.n_ant() || channel.n_users() != dims.n_users) {
    throw DimensionError("design_flat: channel does not match system dimensions");
  }
  const NoiseFactors<Real> noise(channel.noise_cov());
  return fit_flat<Real>(flat_target<Real>(channel.taps().front(), noise, dims.n_strips), dims, set, cfg);
}

/// Eigen-structure of the lifted whitened Gram matrix
/// Lambda_bar^{-1/2} G_bar G_bar^H Lambda_bar^{-1/2}. Each selected
/// eigenvector lives in one frequency block, so row r of
/// V~^H Lambda_bar^{-1/2} is `rows.row(r)` placed in block `block[r]`.
template <typename Real>
struct LiftedBasis {
  CMatrix<Real> rows;          ///< K x n_t, K = B * N_d
  std::vector<Index> block;    ///< frequency block of each row
  RVector<Real> eigenvalues;   ///< selected eigenvalues, descending
  Index n_blocks = 0;
};

/// Global top-(B*N_d) selection across blocks; ties go to the lower
/// frequency index, then the lower within-block index.
template <typename Real>
LiftedBasis<Real> lifted_basis(const BarMatrices<Real>& bar, Index n_strips) {
  const Index nb = bar.blocks();
  if (nb < 1) throw PreconditionError("lifted_basis: empty frequency grid");
  const Index nt = bar.channel_blocks.front().rows();
  std::vector<CMatrix<Real>> vecs;
  std::vector<CMatrix<Real>> inv_sqrt;
  std::vector<std::tuple<Real, Index, Index>> cand;
  for (Index i = 0; i < nb; ++i) {
    const auto& gb = bar.channel_blocks[static_cast<std::size_t>(i)];
    const NoiseFactors<Real> noise(bar.noise_blocks[static_cast<std::size_t>(i)]);
    auto wc = whiten<Real>(gb, noise);
    for (Index j = 0; j < nt; ++j) cand.emplace_back(wc.eigenvalues(j), i, j);
    vecs.push_back(std::move(wc.eigenvectors));
    inv_sqrt.push_back(noise.inv_sqrt);
  }
  std::stable_sort(cand.begin(), cand.end(), [](const auto& x, const auto& y) {
    if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
    if (std::get<1>(x) != std::get<1>(y)) return std::get<1>(x) < std::get<1>(y);
    return std::get<2>(x) < std::get<2>(y);
  });
  const Index k = nb * n_strips;
  LiftedBasis<Real> out;
  out.n_blocks = nb;
  out.rows.resize(k, nt);
  out.eigenvalues.resize(k);
  for (Index r = 0; r < k; ++r) {
    const auto [lam, i, j] = cand[static_cast<std::size_t>(r)];
    out.rows.row(r) = vecs[static_cast<std::size_t>(i)].col(j).adjoint() *
                      inv_sqrt[static_cast<std::size_t>(i)];
    out.block.push_back(i);
    out.eigenvalues(r) = lam;
  }
  return out;
}

/// Feasible weights for arbitrary frequency selectivity.
///
/// Same alternation as design_flat, applied to the lifted problem with
/// combiner I_B kron Q on a b_opt-point grid. All products with I_B kron Q
/// are evaluated block by block; the Kronecker matrix is never formed.
template <typename Real>
DesignResult<Real> fit_lifted(const LiftedBasis<Real>& basis, const SystemDims& dims,
                              const WeightSet& set, const OptimizerConfig& cfg) {
  cfg.validate();
  if (basis.rows.cols() != dims.n_ant() || basis.rows.rows() != basis.n_blocks * dims.n_strips) {
    throw DimensionError("fit_lifted: basis does not match system dimensions");
  }
  const Index nd = dims.n_strips;
  const Index ne = dims.n_elems;
  const Index nb = basis.n_blocks;
  const Index k = nb * nd;
  const Real eps = Real(cfg.epsilon);
  const CMatrix<Real>& a = basis.rows;

  // Rows of A grouped by frequency block.
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(nb));
  for (Index r = 0; r < k; ++r) members[static_cast<std::size_t>(basis.block[static_cast<std::size_t>(r)])].push_back(r);
  const RVector<Real> a_norm2 = a.rowwise().squaredNorm();

  CMatrix<Real> u = CMatrix<Real>::Identity(k, k);
  RVector<Real> d = RVector<Real>::Ones(k);
  CMatrix<Real> coeffs;
  CMatrix<Real> y(nd, k);      // column r: Q a_r^H
  CMatrix<Real> prod(k, k);    // (I_B kron Q) (D A)^H

  OptimizerTrace<Real> trace;
  trace.reason = Termination::MaxIterations;
  for (Index it = 0; it < cfg.max_iters; ++it) {
    // Q-step: average the strip-block entries of the diagonal blocks of U D A.
    CMatrix<Real> mean = CMatrix<Real>::Zero(nd, ne);
    for (Index i = 0; i < nb; ++i) {
      for (Index r : members[static_cast<std::size_t>(i)]) {
        const Complex<Real> s = d(r);
        for (Index p = 0; p < nd; ++p) {
          mean.row(p) += (u(i * nd + p, r) * s) * a.block(r, p * ne, 1, ne);
        }
      }
    }
    mean /= static_cast<Real>(nb);
    coeffs = project_coeffs<Real>(mean, set);
    const CMatrix<Real> q = expand_weights(DmaWeights<Real>(dims, coeffs));

    // U-step: column r of the product lives in row block block[r].
    y.noalias() = q * a.adjoint();
    prod.setZero();
    for (Index r = 0; r < k; ++r) {
      const Index i = basis.block[static_cast<std::size_t>(r)];
      prod.block(i * nd, r, nd, 1) = d(r) * y.col(r);
    }
    u = procrustes_from_product<Real>(prod);

    // D-step: Re <row r of U^H (I kron Q), a_r> / ||a_r||^2, floored at eps.
    RVector<Real> num(k);
    for (Index r = 0; r < k; ++r) {
      const Index i = basis.block[static_cast<std::size_t>(r)];
      num(r) = (u.block(i * nd, r, nd, 1).adjoint() * y.col(r))(0, 0).real();
      d(r) = std::max(num(r) / a_norm2(r), eps);
    }

    // ||I kron Q - U D A||^2 = B ||Q||^2 + ||D A||^2 - 2 Re <I kron Q, U D A>.
    const Real f = static_cast<Real>(nb) * coeffs.squaredNorm() +
                   (d.array().square() * a_norm2.array()).sum() - Real(2) * d.dot(num);
    trace.objective.push_back(std::max(f, Real(0)));
    if (detail::converged(trace.objective, cfg.rel_tol)) {
      trace.reason = Termination::Converged;
      break;
    }
  }
  trace.u = std::move(u);
  trace.d = std::move(d);
  return {DmaWeights<Real>(dims, std::move(coeffs), set), std::move(trace)};
}

template <typename Real>
LiftedBasis<Real> selective_target(const ChannelTaps<Real>& channel,
                                   const DmaResponse<Real>& response, Index n_strips, Index b_opt) {
  const FrequencyGrid grid(b_opt);
  require_nonsingular_response<Real>(response, grid);
  return lifted_basis<Real>(build_bar_matrices<Real>(channel, response, grid), n_strips);
}

template <typename Real>
DesignResult<Real> design_selective(const ChannelTaps<Real>& channel,
                                    const DmaResponse<Real>& response, const SystemDims& dims,
                                    const WeightSet& set, const OptimizerConfig& cfg) {
  cfg.validate();
  if (channel.n_ant() != dims.n_ant() || channel.n_users() != dims.n_users) {
    throw DimensionError("design_selective: channel does not match system dimensions");
  }
  return fit_lifted<Real>(selective_target<Real>(channel, response, dims.n_strips, cfg.b_opt), dims,
                          set, cfg);
}

}  // namespace dma
