#include "dma/scenario.hpp"

#include <cmath>
#include <numbers>

#include "dma/linalg.hpp"

namespace dma {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

std::complex<double> Rng::complex_normal() {
  const double re = normal();
  const double im = normal();
  return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
}

void ScenarioParams::validate() const {
  if (!(exclusion_radius_m >= 0.0) || !(exclusion_radius_m < cell_radius_m)) {
    throw InvalidModel("exclusion radius must be in [0, cell radius)");
  }
  if (!(shadow_std_db >= 0.0)) throw InvalidModel("shadowing std must be >= 0");
  if (n_taps < 1) throw InvalidModel("n_taps must be >= 1");
  if (!(element_spacing_wavelengths > 0.0)) throw InvalidModel("element spacing must be > 0");
  if (correlation_block < 0 || dims.n_ant() % block_size() != 0) {
    throw InvalidModel("correlation block size must divide n_ant");
  }
  if (!std::isfinite(snr_db)) throw InvalidModel("snr_db must be finite");
}

double ScenarioParams::noise_power() const { return std::pow(10.0, -snr_db / 10.0); }

RMatrix<double> jakes_correlation(Index n_elems, double spacing_wavelengths, bool* clipped) {
  if (!(spacing_wavelengths > 0.0)) throw InvalidModel("element spacing must be > 0");
  RMatrix<double> s(n_elems, n_elems);
  for (Index i = 0; i < n_elems; ++i) {
    for (Index l = 0; l < n_elems; ++l) {
      const double x = 2.0 * std::numbers::pi * spacing_wavelengths * static_cast<double>(std::abs(i - l));
      s(i, l) = std::cyl_bessel_j(0.0, x);
    }
  }
  if (clipped) *clipped = false;
  Eigen::SelfAdjointEigenSolver<RMatrix<double>> es(s);
  if (es.eigenvalues().minCoeff() < 0.0) {
    const RVector<double> ev = es.eigenvalues().cwiseMax(0.0);
    s = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    if (clipped) *clipped = true;
  }
  return s;
}

bool in_hexagon(double x, double y, double r) {
  const double ax = std::abs(x);
  const double ay = std::abs(y);
  const double s3 = std::numbers::sqrt3;
  return ay <= s3 / 2.0 * r && s3 * ax + ay <= s3 * r;
}

std::vector<UserPosition> place_users(const ScenarioParams& params, Rng& rng,
                                      std::size_t* proposals) {
  const double r = params.cell_radius_m;
  const double half_h = std::numbers::sqrt3 / 2.0 * r;
  std::vector<UserPosition> users;
  std::size_t tries = 0;
  while (static_cast<Index>(users.size()) < params.dims.n_users) {
    const double x = (2.0 * rng.uniform() - 1.0) * r;
    const double y = (2.0 * rng.uniform() - 1.0) * half_h;
    ++tries;
    if (!in_hexagon(x, y, r)) continue;
    const double rho = std::hypot(x, y);
    if (rho < params.exclusion_radius_m) continue;
    users.push_back({x, y, rho});
  }
  if (proposals) *proposals = tries;
  return users;
}

std::vector<RVector<double>> draw_shadowing_db(Index n_taps, Index n_users, double std_db, Rng& rng) {
  std::vector<RVector<double>> out;
  for (Index t = 0; t < n_taps; ++t) {
    RVector<double> x(n_users);
    for (Index i = 0; i < n_users; ++i) x(i) = std_db * rng.normal();
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<CMatrix<double>> draw_taps(const CMatrix<double>& sqrt_corr,
                                       const std::vector<RVector<double>>& atten, Rng& rng) {
  const Index nt = sqrt_corr.rows();
  std::vector<CMatrix<double>> taps;
  for (std::size_t t = 0; t < atten.size(); ++t) {
    const Index nu = atten[t].size();
    CMatrix<double> gr(nt, nu);
    for (Index j = 0; j < nu; ++j) {
      for (Index i = 0; i < nt; ++i) gr(i, j) = rng.complex_normal();
    }
    const double profile = std::exp(-static_cast<double>(t));
    taps.push_back(profile * sqrt_corr * gr * atten[t].cast<std::complex<double>>().asDiagonal());
  }
  return taps;
}

namespace {

CMatrix<double> block_diag_repeat(const RMatrix<double>& block, Index copies) {
  const Index b = block.rows();
  CMatrix<double> out = CMatrix<double>::Zero(b * copies, b * copies);
  for (Index k = 0; k < copies; ++k) out.block(k * b, k * b, b, b) = block.cast<std::complex<double>>();
  return out;
}

}  // namespace

CMatrix<double> coupling_matrix(const ScenarioParams& params) {
  const Index b = params.block_size();
  return block_diag_repeat(jakes_correlation(b, params.element_spacing_wavelengths),
                           params.dims.n_ant() / b);
}

ChannelTaps<double> generate_channel(const ScenarioParams& params,
                                     const std::vector<UserPosition>& users, Rng& rng) {
  params.validate();
  const Index nu = params.dims.n_users;
  if (static_cast<Index>(users.size()) != nu) throw DimensionError("user count mismatch");
  const Index b = params.block_size();
  const RMatrix<double> sigma_m = jakes_correlation(b, params.element_spacing_wavelengths);
  Eigen::SelfAdjointEigenSolver<RMatrix<double>> es(sigma_m);
  const RMatrix<double> sqrt_m = es.eigenvectors() *
                                 es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                                 es.eigenvectors().transpose();
  const Index copies = params.dims.n_ant() / b;

  auto atten = draw_shadowing_db(params.n_taps, nu, params.shadow_std_db, rng);
  for (auto& a : atten) {
    for (Index i = 0; i < nu; ++i) {
      const double rho = users[static_cast<std::size_t>(i)].rho;
      a(i) = std::pow(10.0, a(i) / 10.0) / (rho * rho);
    }
  }
  auto taps = draw_taps(block_diag_repeat(sqrt_m, copies), atten, rng);
  CMatrix<double> noise = params.noise_power() * block_diag_repeat(sigma_m, copies);
  return ChannelTaps<double>(std::move(taps), std::move(noise));
}

DmaResponse<double> microstrip_response(const ScenarioParams& params) {
  const Index nt = params.dims.n_ant();
  if (!params.microstrip_response) return DmaResponse<double>::identity(nt);
  const Index ne = params.dims.n_elems;
  const Index nd = params.dims.n_strips;
  const double alpha = params.alpha_np;
  const double slope = params.beta_slope;
  const double spacing = params.response_spacing;
  auto eval = [=](double omega) {
    CVector<double> d(nt);
    for (Index l = 0; l < ne; ++l) {
      const double pos = static_cast<double>(l + 1) * spacing;
      const std::complex<double> v = std::exp(-std::complex<double>(alpha, slope * omega) * pos);
      for (Index p = 0; p < nd; ++p) d(p * ne + l) = v;
    }
    return d;
  };
  return DmaResponse<double>::spectral(nt, eval, false);
}

ScenarioInstance make_instance(const ScenarioParams& params, std::uint64_t trial) {
  params.validate();
  const std::uint64_t seed = params.base_seed + trial;
  Rng rng(seed);
  auto users = place_users(params, rng);
  auto channel = generate_channel(params, users, rng);
  return {std::move(users), std::move(channel), microstrip_response(params), seed};
}

}  // namespace dma
