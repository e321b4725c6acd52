#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nudgelab/experiment.hpp"
#include "nudgelab/models.hpp"
#include "oracles.hpp"

using namespace nudgelab;

namespace {

// Grids that keep at most 8 modes per direction.
constexpr int kSineGrid = 16;
constexpr int kTorusGrid = 26;

Field sample(const ModelSpec& s, std::uint64_t tag, double amp = 1.0) { return random_field(s, 21, tag, amp, 0.3); }

}  // namespace

TEST(AllenCahn, MatchesTripleProductOracle) {
  for (ModelId id : {ModelId::ac_weak, ModelId::ac_strong}) {
    const Model m(id, kSineGrid);
    ASSERT_EQ(m.spec().band, 8);
    for (std::uint64_t t = 0; t < 5; ++t) {
      const Field u = sample(m.spec(), t, 2.0);
      Field expect = m.zero();
      expect.coeffs = oracle::allen_cahn(u.coeffs);
      EXPECT_LE(oracle::rel_diff(m.F(u), expect), 1e-12);
    }
  }
}

TEST(AllenCahn, SingleModeCube) {
  // sin^3 = (3 sin x - sin 3x)/4
  const Model m(ModelId::ac_weak, 16);
  Field u = m.zero();
  u[0] = 1.0;
  const Field f = m.F(u);
  EXPECT_NEAR(f[0], 0.25, 1e-14);
  EXPECT_NEAR(f[1], 0.0, 1e-14);
  EXPECT_NEAR(f[2], 0.25, 1e-14);
}

TEST(NavierStokes, MatchesConvolutionOracle) {
  for (ModelId id : {ModelId::nse_weak, ModelId::nse_strong}) {
    const Model m(id, kTorusGrid);
    ASSERT_EQ(m.spec().band, 8);
    for (std::uint64_t t = 0; t < 3; ++t) {
      const Field u = sample(m.spec(), t);
      EXPECT_LE(oracle::rel_diff(m.F(u), oracle::navier_stokes(m.spec(), u)), 1e-12);
    }
  }
}

TEST(QuasiGeostrophic, MatchesConvolutionOracle) {
  const Model m(ModelId::qg, kTorusGrid);
  for (std::uint64_t t = 0; t < 3; ++t) {
    const Field th = sample(m.spec(), t);
    EXPECT_LE(oracle::rel_diff(m.F(th), oracle::quasi_geostrophic(m.spec(), th)), 1e-12);
  }
}

TEST(QuasiGeostrophic, RieszTransformIsDivergenceFreeAndIsometric) {
  const Model m(ModelId::qg, 12);
  const Field th = sample(m.spec(), 4);
  const Field u = m.riesz_perp(th);
  const ModelSpec ns = make_model_spec(ModelId::nse_weak, 12);
  EXPECT_LE(divergence_residual(ns, u), 1e-13);
  EXPECT_NEAR(m.l2_norm(th), norm(ns, u, Space::H), 1e-12);
}

TEST(Magnetohydrodynamics, MatchesConvolutionOracle) {
  const Model m(ModelId::mhd, kTorusGrid);
  for (std::uint64_t t = 0; t < 2; ++t) {
    const Field phi = sample(m.spec(), t);
    EXPECT_LE(oracle::rel_diff(m.F(phi), oracle::mhd(m.spec(), phi)), 1e-12);
  }
}

TEST(Cancellation, WeakPairingVanishes) {
  for (ModelId id : {ModelId::nse_weak, ModelId::qg, ModelId::mhd, ModelId::nse_strong}) {
    const Model m(id, 24);
    const ModelSpec& s = m.spec();
    for (std::uint64_t t = 0; t < 20; ++t) {
      const Field u = sample(s, t, 3.0);
      const Field f = m.F(u);
      // For the strong triple the pairing is ((u.grad)u, Au)_2, which vanishes on the torus.
      const double scale = norm(s, f, Space::Vstar) * norm(s, u, Space::V);
      EXPECT_LE(std::abs(pairing(s, f, u)), 1e-12 * scale) << to_string(id);
    }
  }
}

TEST(Outputs, AreSolenoidalAndDealiased) {
  for (ModelId id : {ModelId::nse_weak, ModelId::mhd}) {
    const Model m(id, 24);
    const Field f = m.F(sample(m.spec(), 1, 2.0));
    EXPECT_LE(divergence_residual(m.spec(), f), 1e-12 * max_abs(f));
  }
}

TEST(Heat, HasNoNonlinearity) {
  const Model m(ModelId::heat, 16);
  EXPECT_EQ(max_abs(m.F(sample(m.spec(), 0))), 0.0);
  EXPECT_EQ(m.kappa(sample(m.spec(), 0)), 0.0);
}

TEST(Kappa, MatchesClosedForms) {
  {
    const Model m(ModelId::ac_weak, 16);
    Field u = m.zero();
    u[1] = 0.5;  // 0.5 sin(2 pi x): ||u||_V^2 = 0.25 * (2pi)^2 / 2
    const double pi = std::numbers::pi;
    EXPECT_NEAR(m.kappa(u), 1.0 + 0.125 * 4 * pi * pi, 1e-12);
  }
  {
    const Model m(ModelId::nse_weak, 12);
    const ModelSpec& s = m.spec();
    const Field e = basis_direction(s, 0, 0, 0);  // ||e||_2 = 1, |k| known
    const double k2 = std::pow(s.wavenumber(0), 2);
    EXPECT_NEAR(m.kappa(e), k2, 1e-12);
  }
}

TEST(Kappa, StrongNavierStokesUsesGridNorms) {
  const Model m(ModelId::nse_strong, 12);
  const ModelSpec& s = m.spec();
  // u = (sin y, 0): ||u||_inf = 1, grad u has the single entry cos y, ||cos y||_3^3 = 2 pi * 2 int |cos|^3 = 2 pi * 8/3
  Field u = m.zero();
  for (std::size_t i = 0; i < s.modes.size(); ++i) {
    if (s.modes[i][0] == 0 && s.modes[i][1] == 1) u[s.index(i, 1, 0)] = 1.0;
  }
  const double l3 = std::cbrt(2 * std::numbers::pi * 8.0 / 3.0);
  EXPECT_NEAR(m.kappa(u), 1.0 + l3 * l3, 2e-2);
}
