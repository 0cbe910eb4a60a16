// Independent reference computations used only by the tests. None of these
// call into the library's numerical routines.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "dma/weight_set.hpp"

namespace oracle {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;

/// J0 from its power series; accurate to ~1e-15 for |x| < 10.
inline double bessel_j0(double x) {
  double term = 1.0;
  double sum = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 80; ++k) {
    term *= -q / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (std::abs(term) < 1e-18) break;
  }
  return sum;
}

/// Nearest point of the set among `n` evenly spaced candidates.
inline cd grid_projection(cd m, const dma::WeightSet& set, int n = 1000000) {
  using K = dma::WeightSet::Kind;
  cd best = m;
  double best_d = std::numeric_limits<double>::infinity();
  auto consider = [&](cd c) {
    const double d = std::norm(c - m);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  };
  switch (set.kind()) {
    case K::Unconstrained:
      return m;
    case K::AmplitudeOnly:
      for (int i = 0; i < n; ++i) {
        consider(set.lower() + (set.upper() - set.lower()) * i / (n - 1.0));
      }
      break;
    case K::BinaryAmplitude:
      consider(0.0);
      consider(set.level());
      break;
    case K::LorentzianPhase:
      for (int i = 0; i < n; ++i) {
        const double phi = 2.0 * std::numbers::pi * i / n;
        consider((cd(0, 1) + std::polar(1.0, phi)) / 2.0);
      }
      break;
  }
  return best;
}

/// Largest spacing between neighbouring grid candidates for `set`.
inline double grid_resolution(const dma::WeightSet& set, int n = 1000000) {
  using K = dma::WeightSet::Kind;
  if (set.kind() == K::AmplitudeOnly) return (set.upper() - set.lower()) / (n - 1.0);
  if (set.kind() == K::LorentzianPhase) return std::numbers::pi / n;  // chord of a radius-1/2 circle
  return 0.0;
}

/// log2 det(I + Q G G^H Q^H (Q L Q^H)^{-1}) from Eigen's LU determinant.
inline double log2_rate_direct(const CMat& q, const CMat& g, const CMat& lambda) {
  const CMat s = q * g * g.adjoint() * q.adjoint();
  const CMat n = q * lambda * q.adjoint();
  const CMat m = CMat::Identity(q.rows(), q.rows()) + s * n.inverse();
  return std::log2(std::abs(m.determinant()));
}

/// I_B kron Q materialized densely.
inline CMat kron_identity(const CMat& q, int b) {
  CMat out = CMat::Zero(b * q.rows(), b * q.cols());
  for (int i = 0; i < b; ++i) out.block(i * q.rows(), i * q.cols(), q.rows(), q.cols()) = q;
  return out;
}

/// Mean distance to the centre for the uniform law on the flat-top hexagon
/// of circumradius r minus a disk of radius r0, by polar quadrature.
inline double hexagon_mean_radius(double r, double r0, int steps = 200000) {
  const double apothem = std::numbers::sqrt3 / 2.0 * r;
  const double sector = std::numbers::pi / 3.0;
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double theta = (i + 0.5) * 2.0 * std::numbers::pi / steps;
    // Apothems point at 30 + 60k degrees for a flat-top hexagon.
    const double rel = std::fmod(theta, sector) - sector / 2.0;
    const double rmax = apothem / std::cos(rel);
    num += (rmax * rmax * rmax - r0 * r0 * r0) / 3.0;
    den += (rmax * rmax - r0 * r0) / 2.0;
  }
  return num / den;
}

inline double normal_cdf(double x, double sd) { return 0.5 * std::erfc(-x / (sd * std::numbers::sqrt2)); }

/// Two-sided one-sample Kolmogorov-Smirnov statistic against N(0, sd^2).
inline double ks_statistic(std::vector<double> xs, double sd) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = normal_cdf(xs[i], sd);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

}  // namespace oracle
