#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dma/model.hpp"

namespace dma {

/// Pinned random source: std::mt19937_64 for raw 64-bit words, with the
/// uniform and Gaussian conversions spelled out here so that a seed maps to
/// the same numbers on every standard library.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/u53/box-muller";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal (Box-Muller, second variate cached).
  double normal();

  /// Proper complex Gaussian, Var(Re) = Var(Im) = 1/2.
  std::complex<double> complex_normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct ScenarioParams {
  SystemDims dims{10, 10, 10};
  double cell_radius_m = 400.0;
  double exclusion_radius_m = 20.0;
  Index n_taps = 1;  ///< m_g + 1
  double shadow_std_db = 8.0;
  double element_spacing_wavelengths = 0.2;
  double alpha_np = 0.0006;
  double beta_slope = 1.592;
  /// Multiplier on the element index in the microstrip exponent.
  double response_spacing = 1.0;
  /// Microstrip (true) or identical, frequency-flat (false) element response.
  bool microstrip_response = false;
  /// Size of the Jakes blocks in the coupling matrix; 0 means n_elems.
  Index correlation_block = 0;
  double snr_db = 15.0;
  std::uint64_t base_seed = 1;

  void validate() const;
  Index block_size() const { return correlation_block > 0 ? correlation_block : dims.n_elems; }
  /// sigma_W^2 = 10^{-snr/10}.
  double noise_power() const;
};

struct UserPosition {
  double x = 0;
  double y = 0;
  double rho = 0;  ///< distance to the base station
};

/// Toeplitz Jakes correlation J0(2 pi spacing |i - l|). When round-off makes
/// the matrix indefinite, negative eigenvalues are clipped and `clipped` is set.
RMatrix<double> jakes_correlation(Index n_elems, double spacing_wavelengths, bool* clipped = nullptr);

/// Whether (x, y) lies in the flat-top hexagon of circumradius r centred at 0.
bool in_hexagon(double x, double y, double r);

/// Users uniform on the hexagonal cell minus the exclusion disk, by
/// rejection from the bounding box. `proposals` receives the box draws used.
std::vector<UserPosition> place_users(const ScenarioParams& params, Rng& rng,
                                      std::size_t* proposals = nullptr);

/// Shadowing exponents X ~ N(0, std_db^2) in dB, one vector of n_users per
/// tap, drawn tap-major.
std::vector<RVector<double>> draw_shadowing_db(Index n_taps, Index n_users, double std_db, Rng& rng);

/// G[tau] = e^{-tau} sqrt_corr G_R[tau] diag(atten[tau]); one attenuation
/// vector per tap. Exposed separately so that statistics can be checked with
/// fixed correlation/attenuation.
std::vector<CMatrix<double>> draw_taps(const CMatrix<double>& sqrt_corr,
                                       const std::vector<RVector<double>>& atten, Rng& rng);

/// Coupling matrix I kron Sigma_M over the n_ant elements.
CMatrix<double> coupling_matrix(const ScenarioParams& params);

/// Multipath taps plus noise covariance sigma_W^2 * coupling.
ChannelTaps<double> generate_channel(const ScenarioParams& params,
                                     const std::vector<UserPosition>& users, Rng& rng);

/// (H_G(omega))_{ll} = exp(-(alpha + j beta_slope omega) l), l = 1..N_e,
/// replicated over strips. Identity when `microstrip_response` is off.
DmaResponse<double> microstrip_response(const ScenarioParams& params);

struct ScenarioInstance {
  std::vector<UserPosition> users;
  ChannelTaps<double> channel;
  DmaResponse<double> response;
  std::uint64_t seed;
};

/// Trial t draws from the stream seeded with base_seed + t.
ScenarioInstance make_instance(const ScenarioParams& params, std::uint64_t trial);

}  // namespace dma
