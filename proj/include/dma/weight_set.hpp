#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <string_view>

#include "dma/errors.hpp"

namespace dma {

/// Feasible set for a single metasurface element weight.
///
/// - Unconstrained: the whole complex plane.
/// - AmplitudeOnly: the real interval [a, b], 0 <= a < b.
/// - BinaryAmplitude: the two points {0, c}, c > 0.
/// - LorentzianPhase: the circle {(j + e^{j phi}) / 2}, centre j/2, radius 1/2.
class WeightSet {
 public:
  enum class Kind { Unconstrained, AmplitudeOnly, BinaryAmplitude, LorentzianPhase };

  static WeightSet unconstrained() { return WeightSet(Kind::Unconstrained, 0.0, 0.0); }

  static WeightSet amplitude_only(double a, double b) {
    if (!(a >= 0.0) || !(a < b) || !std::isfinite(b)) {
      throw InvalidModel("amplitude-only set requires 0 <= a < b");
    }
    return WeightSet(Kind::AmplitudeOnly, a, b);
  }

  static WeightSet binary(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidModel("binary set requires c > 0");
    return WeightSet(Kind::BinaryAmplitude, c, 0.0);
  }

  static WeightSet lorentzian() { return WeightSet(Kind::LorentzianPhase, 0.0, 0.0); }

  /// Parameter values used in the numerical study of the reference scenario.
  static WeightSet from_label(std::string_view label) {
    if (label == "UC") return unconstrained();
    if (label == "AO") return amplitude_only(0.001, 5.0);
    if (label == "BA") return binary(0.1);
    if (label == "LP") return lorentzian();
    throw InvalidModel("unknown weight set label '" + std::string(label) + "'");
  }

  Kind kind() const { return kind_; }
  /// Lower amplitude bound (AmplitudeOnly) or the non-zero level c (BinaryAmplitude).
  double lower() const { return p0_; }
  double upper() const { return p1_; }
  double level() const { return p0_; }

  /// Short curve label: UC, AO, BA or LP.
  std::string label() const {
    switch (kind_) {
      case Kind::Unconstrained: return "UC";
      case Kind::AmplitudeOnly: return "AO";
      case Kind::BinaryAmplitude: return "BA";
      case Kind::LorentzianPhase: return "LP";
    }
    return "?";
  }

  /// Euclidean distance from z to the set, from the set geometry directly.
  template <typename Real>
  Real membership_distance(std::complex<Real> z) const {
    switch (kind_) {
      case Kind::Unconstrained:
        return Real(0);
      case Kind::AmplitudeOnly: {
        const Real re = z.real();
        const Real dx = re < Real(p0_) ? Real(p0_) - re : (re > Real(p1_) ? re - Real(p1_) : Real(0));
        return std::hypot(dx, z.imag());
      }
      case Kind::BinaryAmplitude:
        return std::min(std::abs(z), std::abs(z - std::complex<Real>(Real(p0_), 0)));
      case Kind::LorentzianPhase:
        return std::abs(std::abs(z - std::complex<Real>(0, Real(0.5))) - Real(0.5));
    }
    return Real(0);
  }

  bool operator==(const WeightSet&) const = default;

 private:
  WeightSet(Kind k, double p0, double p1) : kind_(k), p0_(p0), p1_(p1) {}

  Kind kind_;
  double p0_;
  double p1_;
};

}  // namespace dma
