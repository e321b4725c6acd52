#pragma once

// Q-Wiener increments and multiplicative observation-noise coefficients.
//
// Q is diagonal in the model basis: direction j is an H-unit basis element
// e_j (solenoidal directions k^perp/|k| on the torus) with Q e_j = lambda_j^2 e_j,
// lambda_j = (1 + |k|^2)^(-s), truncated at integer wavenumber K_Q.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "field.hpp"
#include "models.hpp"
#include "rng.hpp"

namespace nudgelab {

struct NoiseDirection {
  std::size_t mode = 0;
  int trig = 0;
  int d = 0;
  int nnz = 0;
  std::array<std::size_t, 2> index{};
  std::array<double, 2> value{};
  double lambda = 0.0;
};

struct QSpec {
  std::vector<NoiseDirection> directions;
  double exponent = 1.0;
  int rank_cutoff = 0;  // K_Q

  std::size_t rank() const { return directions.size(); }

  double trace() const {
    double s = 0.0;
    for (const auto& d : directions) s += d.lambda * d.lambda;
    return s;
  }

  Field direction_field(const ModelSpec& spec, std::size_t j) const {
    Field e = spec.zero();
    const auto& d = directions[j];
    for (int q = 0; q < d.nnz; ++q) e[d.index[static_cast<std::size_t>(q)]] = d.value[static_cast<std::size_t>(q)];
    return e;
  }
};

inline double default_noise_exponent(const ModelSpec& spec) { return spec.dims == 1 ? 1.0 : 1.5; }

/// Diagonal Q with lambda = (1+|k|^2)^(-exponent) on integer wavenumbers |k| <= kq.
inline QSpec make_qspec(const ModelSpec& spec, int kq, double exponent) {
  if (kq < 0) throw std::invalid_argument("noise rank cutoff K_Q must be nonnegative");
  if (!(exponent >= 0.0)) throw std::invalid_argument("noise spectrum exponent must be nonnegative");
  QSpec q;
  q.exponent = exponent;
  q.rank_cutoff = kq;
  const int per_slot = directions_per_slot(spec);
  for (std::size_t m = 0; m < spec.modes.size(); ++m) {
    const double k = spec.wavenumber(m);
    if (k > kq + 1e-12) continue;
    const double lambda = std::pow(1.0 + k * k, -exponent);
    for (int trig = 0; trig < spec.trig_count; ++trig) {
      for (int d = 0; d < per_slot; ++d) {
        const Field e = basis_direction(spec, m, trig, d);
        NoiseDirection dir;
        dir.mode = m;
        dir.trig = trig;
        dir.d = d;
        dir.lambda = lambda;
        for (std::size_t i = 0; i < e.size(); ++i) {
          if (e[i] != 0.0) {
            dir.index[static_cast<std::size_t>(dir.nnz)] = i;
            dir.value[static_cast<std::size_t>(dir.nnz)] = e[i];
            ++dir.nnz;
          }
        }
        q.directions.push_back(dir);
      }
    }
  }
  return q;
}

/// Sum_j lambda_j sqrt(dt) xi_j e_j with xi_j = rng.normal(step, j).
inline Field sample_increment(const ModelSpec& spec, const QSpec& q, const CounterNormal& rng, std::uint64_t step,
                              double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  Field dw = spec.zero();
  const double sdt = std::sqrt(dt);
  for (std::size_t j = 0; j < q.directions.size(); ++j) {
    const auto& d = q.directions[j];
    if (d.lambda == 0.0) continue;
    const double amp = d.lambda * sdt * rng.normal(step, static_cast<std::uint32_t>(j));
    for (int p = 0; p < d.nnz; ++p) dw[d.index[static_cast<std::size_t>(p)]] += amp * d.value[static_cast<std::size_t>(p)];
  }
  return dw;
}

enum class NoiseKind { additive, state_scaled, pointwise_multiplicative, attractor_vanishing };

inline std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::additive: return "additive";
    case NoiseKind::state_scaled: return "state_scaled";
    case NoiseKind::pointwise_multiplicative: return "pointwise_multiplicative";
    case NoiseKind::attractor_vanishing: return "attractor_vanishing";
  }
  return "unknown";
}

inline std::optional<NoiseKind> parse_noise_kind(std::string_view name) {
  for (NoiseKind k : {NoiseKind::additive, NoiseKind::state_scaled, NoiseKind::pointwise_multiplicative,
                      NoiseKind::attractor_vanishing}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

struct NoiseCoefficient {
  NoiseKind kind = NoiseKind::additive;
  double sigma = 0.0;
  double p = 0.0;                   // sigma_delta = sigma * delta^p
  std::optional<Field> attractor;   // a for attractor_vanishing; zero when unset
};

class NoiseModel {
 public:
  NoiseModel(const Model& model, NoiseCoefficient coef, QSpec q, double delta)
      : model_(model), coef_(std::move(coef)), q_(std::move(q)) {
    if (!(coef_.sigma >= 0.0)) throw std::invalid_argument("noise sigma must be nonnegative");
    if (!(delta > 0.0)) throw std::invalid_argument("noise scale delta must be positive");
    sigma_delta_ = coef_.sigma * std::pow(delta, coef_.p);
    if (coef_.attractor) model_.spec().require(*coef_.attractor);
    if (coef_.kind == NoiseKind::pointwise_multiplicative) {
      for (std::size_t j = 0; j < q_.rank(); ++j) direction_grids_.push_back(model_.to_grid(q_.direction_field(model_.spec(), j)));
    }
  }

  const Model& model() const { return model_; }
  const NoiseCoefficient& coefficient() const { return coef_; }
  const QSpec& q() const { return q_; }
  double sigma_delta() const { return sigma_delta_; }
  bool silent() const { return sigma_delta_ == 0.0 || q_.trace() == 0.0; }

  Field sample_increment(const CounterNormal& rng, std::uint64_t step, double dt) const {
    return nudgelab::sample_increment(model_.spec(), q_, rng, step, dt);
  }

  /// G_delta(u) applied to the increment dw; linear in dw for every kind.
  Field apply_G(const Field& u, const Field& dw) const {
    const ModelSpec& spec = model_.spec();
    spec.require(u);
    spec.require(dw);
    if (coef_.kind == NoiseKind::pointwise_multiplicative) {
      const auto ug = model_.to_grid(u);
      auto wg = model_.to_grid(dw);
      for (std::size_t p = 0; p < wg.size(); ++p) wg[p] *= ug[p];
      return sigma_delta_ * model_.from_grid(wg);
    }
    return (sigma_delta_ * scalar_factor(u)) * dw;
  }

  /// ||G_delta(u)||^2_{L_2^0} = sum_j lambda_j^2 ||G_delta(u) e_j||_H^2.
  double hs_norm_sq(const Field& u) const {
    const ModelSpec& spec = model_.spec();
    spec.require(u);
    if (coef_.kind != NoiseKind::pointwise_multiplicative) {
      const double s = sigma_delta_ * scalar_factor(u);
      return s * s * q_.trace();
    }
    const auto ug = model_.to_grid(u);
    double total = 0.0;
    for (std::size_t j = 0; j < q_.rank(); ++j) {
      const double lam = q_.directions[j].lambda;
      if (lam == 0.0) continue;
      std::vector<double> g = direction_grids_[j];
      for (std::size_t p = 0; p < g.size(); ++p) g[p] *= ug[p];
      const double h = sigma_delta_ * norm(spec, model_.from_grid(g), Space::H);
      total += lam * lam * h * h;
    }
    return total;
  }

 private:
  double scalar_factor(const Field& u) const {
    switch (coef_.kind) {
      case NoiseKind::additive: return 1.0;
      case NoiseKind::state_scaled: return norm(model_.spec(), u, Space::H);
      case NoiseKind::attractor_vanishing:
        return coef_.attractor ? norm(model_.spec(), u - *coef_.attractor, Space::H) : norm(model_.spec(), u, Space::H);
      case NoiseKind::pointwise_multiplicative: break;
    }
    return 1.0;
  }

  Model model_;
  NoiseCoefficient coef_;
  QSpec q_;
  double sigma_delta_ = 0.0;
  std::vector<std::vector<double>> direction_grids_;
};

inline Field apply_G(const NoiseModel& noise, const Field& u, const Field& dw) { return noise.apply_G(u, dw); }

inline double hs_norm_sq(const NoiseModel& noise, const Field& u) { return noise.hs_norm_sq(u); }

/// Gamma_u = sup_t ||G_delta(u(t))||^2 over a recorded series.
inline double gamma_u_sup(const std::vector<double>& series) {
  if (series.empty()) throw std::invalid_argument("gamma_u_sup needs a nonempty series");
  return *std::max_element(series.begin(), series.end());
}

/// Running maximum of a series.
inline std::vector<double> running_max(const std::vector<double>& series) {
  std::vector<double> out(series.size());
  double m = -INFINITY;
  for (std::size_t i = 0; i < series.size(); ++i) out[i] = m = std::max(m, series[i]);
  return out;
}

}  // namespace nudgelab
