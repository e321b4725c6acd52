#include <gtest/gtest.h>

#include <cmath>

#include "nudgelab/experiment.hpp"
#include "nudgelab/noise.hpp"
#include "oracles.hpp"

using namespace nudgelab;

namespace {

NoiseModel make_noise(const Model& m, NoiseKind kind, double sigma, int kq, double p = 0.0, double delta = 0.125) {
  NoiseCoefficient c;
  c.kind = kind;
  c.sigma = sigma;
  c.p = p;
  return NoiseModel(m, c, make_qspec(m.spec(), kq, default_noise_exponent(m.spec())), delta);
}

/// Pointwise product of two scalar torus fields, projected on the band, by direct convolution.
Field product_oracle(const ModelSpec& s, const Field& a, const Field& b) {
  const auto sa = oracle::to_spectra(s, a), sb = oracle::to_spectra(s, b);
  const int K = s.band;
  oracle::Spectrum out(K);
  for (int k1 = -K; k1 <= K; ++k1) {
    for (int k2 = -K; k2 <= K; ++k2) {
      for (int p1 = -K; p1 <= K; ++p1) {
        for (int p2 = -K; p2 <= K; ++p2) {
          const int q1 = k1 - p1, q2 = k2 - p2;
          if (std::abs(q1) > K || std::abs(q2) > K) continue;
          out.at(k1, k2) += sa[0].at(p1, p2) * sb[0].at(q1, q2);
        }
      }
    }
  }
  return oracle::from_spectra(s, {out});
}

}  // namespace

TEST(QSpec, RankAndSpectrum) {
  const ModelSpec s = make_model_spec(ModelId::ac_weak, 32);
  const QSpec q = make_qspec(s, 5, 1.0);
  ASSERT_EQ(q.rank(), 5u);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(q.directions[j].lambda, 1.0 / (1.0 + (j + 1.0) * (j + 1.0)));
  const ModelSpec t = make_model_spec(ModelId::nse_weak, 12);
  const QSpec qt = make_qspec(t, 1, 1.5);
  EXPECT_EQ(qt.rank(), 4u);  // modes (1,0) and (0,1), cos and sin, one solenoidal direction each
  for (std::size_t j = 0; j < qt.rank(); ++j) {
    EXPECT_NEAR(norm(t, qt.direction_field(t, j), Space::H), 1.0, 1e-14);
    EXPECT_LE(divergence_residual(t, qt.direction_field(t, j)), 1e-14);
  }
  EXPECT_THROW(make_qspec(s, -1, 1.0), std::invalid_argument);
}

TEST(Increment, CovarianceIsDtTimesLambdaSquared) {
  const ModelSpec s = make_model_spec(ModelId::ac_weak, 16);
  const QSpec q = make_qspec(s, 3, 1.0);
  const CounterNormal rng(5, Stream::noise);
  const double dt = 0.01;
  const int n = 40000;
  std::vector<double> var(3, 0.0);
  double cross = 0.0;
  for (int k = 0; k < n; ++k) {
    const Field dw = sample_increment(s, q, rng, static_cast<std::uint64_t>(k), dt);
    for (std::size_t j = 0; j < 3; ++j) {
      const double c = inner_h(s, dw, q.direction_field(s, j));
      var[j] += c * c / n;
    }
    cross += inner_h(s, dw, q.direction_field(s, 0)) * inner_h(s, dw, q.direction_field(s, 1)) / n;
  }
  for (std::size_t j = 0; j < 3; ++j) {
    const double expect = dt * std::pow(q.directions[j].lambda, 2);
    EXPECT_NEAR(var[j], expect, 5.0 * expect * std::sqrt(2.0 / n));
  }
  EXPECT_NEAR(cross, 0.0, 5.0 * dt * q.directions[0].lambda * q.directions[1].lambda / std::sqrt(n));
}

TEST(Increment, DeterministicPerSeedAndStep) {
  const ModelSpec s = make_model_spec(ModelId::qg, 12);
  const QSpec q = make_qspec(s, 3, 1.5);
  const CounterNormal a(9, Stream::noise), b(9, Stream::noise), c(10, Stream::noise);
  EXPECT_EQ(sample_increment(s, q, a, 17, 0.1).coeffs, sample_increment(s, q, b, 17, 0.1).coeffs);
  EXPECT_NE(sample_increment(s, q, a, 17, 0.1).coeffs, sample_increment(s, q, c, 17, 0.1).coeffs);
  EXPECT_NE(sample_increment(s, q, a, 17, 0.1).coeffs, sample_increment(s, q, a, 18, 0.1).coeffs);
}

TEST(Coefficient, ScalingWithDelta) {
  const Model m(ModelId::ac_weak, 16);
  EXPECT_DOUBLE_EQ(make_noise(m, NoiseKind::additive, 2.0, 3, 0.5, 0.25).sigma_delta(), 1.0);
  EXPECT_DOUBLE_EQ(make_noise(m, NoiseKind::additive, 2.0, 3, 0.0, 0.25).sigma_delta(), 2.0);
  EXPECT_TRUE(make_noise(m, NoiseKind::additive, 0.0, 3).silent());
  EXPECT_TRUE(make_noise(m, NoiseKind::additive, 1.0, 0).silent());
}

TEST(Coefficient, AdditiveAndStateScaled) {
  const Model m(ModelId::ac_strong, 16);
  const ModelSpec& s = m.spec();
  const Field u = random_field(s, 1, 0, 0.7, 1.0);
  const Field dw = random_field(s, 1, 1, 1.0, 1.0);
  const NoiseModel add = make_noise(m, NoiseKind::additive, 0.3, 4);
  const NoiseModel sc = make_noise(m, NoiseKind::state_scaled, 0.3, 4);
  EXPECT_LE(oracle::rel_diff(add.apply_G(u, dw), 0.3 * dw), 1e-15);
  EXPECT_LE(oracle::rel_diff(sc.apply_G(u, dw), (0.3 * 0.7) * dw), 1e-14);
  EXPECT_NEAR(add.hs_norm_sq(u), 0.09 * add.q().trace(), 1e-15);
  EXPECT_NEAR(sc.hs_norm_sq(u), 0.09 * 0.49 * sc.q().trace(), 1e-14);
  EXPECT_EQ(sc.hs_norm_sq(s.zero()), 0.0);
}

TEST(Coefficient, AttractorVanishing) {
  const Model m(ModelId::ac_weak, 16);
  const ModelSpec& s = m.spec();
  NoiseCoefficient c;
  c.kind = NoiseKind::attractor_vanishing;
  c.sigma = 1.0;
  c.attractor = random_field(s, 2, 0, 0.5, 1.0);
  const NoiseModel nm(m, c, make_qspec(s, 3, 1.0), 0.125);
  EXPECT_EQ(nm.hs_norm_sq(*c.attractor), 0.0);
  EXPECT_GT(nm.hs_norm_sq(s.zero()), 0.0);
}

TEST(Coefficient, PointwiseMatchesProductOracle) {
  const Model m(ModelId::qg, 13 + 1);
  const ModelSpec& s = m.spec();
  const NoiseModel nm = make_noise(m, NoiseKind::pointwise_multiplicative, 0.5, 2);
  const Field u = random_field(s, 3, 0, 1.0, 0.5);
  const Field dw = random_field(s, 3, 1, 1.0, 0.5);
  EXPECT_LE(oracle::rel_diff(nm.apply_G(u, dw), 0.5 * product_oracle(s, u, dw)), 1e-12);
  double hs = 0.0;
  for (std::size_t j = 0; j < nm.q().rank(); ++j) {
    const double h = 0.5 * norm(s, product_oracle(s, u, nm.q().direction_field(s, j)), Space::H);
    hs += std::pow(nm.q().directions[j].lambda * h, 2);
  }
  EXPECT_NEAR(nm.hs_norm_sq(u), hs, 1e-12 * hs);
}

TEST(Coefficient, LinearInIncrement) {
  const Model m(ModelId::nse_weak, 12);
  const ModelSpec& s = m.spec();
  const NoiseModel nm = make_noise(m, NoiseKind::pointwise_multiplicative, 1.0, 3);
  const Field u = random_field(s, 4, 0, 1.0, 0.5);
  const Field a = random_field(s, 4, 1, 1.0, 0.5), b = random_field(s, 4, 2, 1.0, 0.5);
  const Field lhs = nm.apply_G(u, 2.0 * a + b);
  const Field rhs = 2.0 * nm.apply_G(u, a) + nm.apply_G(u, b);
  EXPECT_LE(oracle::rel_diff(lhs, rhs), 1e-13);
  EXPECT_LE(divergence_residual(s, lhs), 1e-13);
}

TEST(Helpers, GammaAndRunningMax) {
  EXPECT_EQ(gamma_u_sup({1.0, 3.0, 2.0}), 3.0);
  EXPECT_EQ(running_max({1.0, 3.0, 2.0, 4.0}), (std::vector<double>{1.0, 3.0, 3.0, 4.0}));
  EXPECT_THROW(gamma_u_sup({}), std::invalid_argument);
}
