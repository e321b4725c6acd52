#pragma once

// The concrete models: spectral layout and norm weights, pseudo-spectral
// nonlinearities and the kappa monitors.
//
//   heat        u_t - nu u_xx = 0                     sine basis on (0,1)
//   ac_weak     u_t - nu u_xx = u - u^3               H = L^2,  V = H^1_0
//   ac_strong   same equation                         H = H^1_0, V = H^2 n H^1_0
//   nse_weak    u_t - nu P Lap u = -P (u.grad) u      torus, H = L^2_sigma
//   nse_strong  same kernel                           torus, H = H^1_sigma
//   qg          theta_t - nu Lap theta = -R^perp theta . grad theta
//   mhd         (u, h) with the Lorentz / induction coupling
//
// Cubic products use the 1/2 rule (band K = n/2 on n sine nodes), quadratic
// products the 2/3 rule (band K = (n-1)/3 on the n x n torus grid).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "field.hpp"
#include "spectral.hpp"

namespace nudgelab {

using spectral::Complex;

struct KappaSample {
  double t = 0.0;
  double kappa = 0.0;
};

inline bool is_sine_model(ModelId id) {
  return id == ModelId::heat || id == ModelId::ac_weak || id == ModelId::ac_strong;
}

inline bool is_strong_model(ModelId id) { return id == ModelId::ac_strong || id == ModelId::nse_strong; }

inline ModelSpec make_model_spec(ModelId id, int grid, double nu = 1.0,
                                 NormConvention norms = NormConvention::homogeneous) {
  if (!(nu > 0.0)) throw std::invalid_argument("viscosity nu must be positive");
  if (norms == NormConvention::inhomogeneous && is_strong_model(id)) {
    throw std::invalid_argument("inhomogeneous norms are only defined for the weak triples");
  }
  ModelSpec s;
  s.id = id;
  s.norms = norms;
  s.nu = nu;
  s.grid = grid;
  const bool inhom = norms == NormConvention::inhomogeneous;
  const double pi = std::numbers::pi;

  if (is_sine_model(id)) {
    if (grid < 2) throw std::invalid_argument("sine models need at least 2 grid points");
    s.dims = 1;
    s.trig_count = 1;
    s.components = 1;
    s.band = grid / 2;
    s.dealias_fraction = 0.5;
    s.domain_length = 1.0;
    for (int k = 1; k <= s.band; ++k) s.modes.push_back({k, 0});
    for (const auto& mode : s.modes) {
      const double kp = pi * mode[0];
      double h2 = 0.5, v2 = 0.0;
      if (id == ModelId::ac_strong) {
        h2 = 0.5 * kp * kp;
        v2 = 0.5 * kp * kp * kp * kp;
      } else {
        v2 = inhom ? 0.5 * (1.0 + kp * kp) : 0.5 * kp * kp;
      }
      s.a_symbol.push_back(nu * kp * kp);
      s.weight_h.push_back(std::sqrt(h2));
      s.weight_v.push_back(std::sqrt(v2));
      s.weight_vstar.push_back(h2 / std::sqrt(v2));
    }
  } else {
    if (grid < 4 || grid % 2 != 0) throw std::invalid_argument("torus models need an even grid of at least 4");
    s.dims = 2;
    s.trig_count = 2;
    s.components = id == ModelId::qg ? 1 : (id == ModelId::mhd ? 4 : 2);
    s.solenoidal = id != ModelId::qg;
    s.band = (grid - 1) / 3;
    s.dealias_fraction = 2.0 / 3.0;
    s.domain_length = 2.0 * pi;
    if (s.band < 1) throw std::invalid_argument("torus grid too small to retain any mode");
    for (int k2 = 0; k2 <= s.band; ++k2) {
      for (int k1 = -s.band; k1 <= s.band; ++k1) {
        if (k2 > 0 || k1 > 0) s.modes.push_back({k1, k2});
      }
    }
    const double basis = 2.0 * pi * pi;  // integral of cos^2(k.x) over the torus
    for (std::size_t m = 0; m < s.modes.size(); ++m) {
      const double kk = static_cast<double>(s.modes[m][0] * s.modes[m][0] + s.modes[m][1] * s.modes[m][1]);
      double h2 = basis, v2 = 0.0;
      if (id == ModelId::nse_strong) {
        h2 = basis * kk;
        v2 = basis * kk * kk;
      } else {
        v2 = inhom ? basis * (1.0 + kk) : basis * kk;
      }
      for (int c = 0; c < s.trig_count * s.components; ++c) {
        s.a_symbol.push_back(nu * kk);
        s.weight_h.push_back(std::sqrt(h2));
        s.weight_v.push_back(std::sqrt(v2));
        s.weight_vstar.push_back(h2 / std::sqrt(v2));
      }
    }
  }

  double alpha = INFINITY;
  for (std::size_t i = 0; i < s.dof(); ++i) {
    alpha = std::min(alpha, s.a_symbol[i] * s.weight_h[i] * s.weight_h[i] / (s.weight_v[i] * s.weight_v[i]));
  }
  s.alpha = alpha;
  s.validate();
  return s;
}

class Model {
 public:
  Model(ModelId id, int grid, double nu = 1.0, NormConvention norms = NormConvention::homogeneous)
      : spec_(make_model_spec(id, grid, nu, norms)) {
    if (is_sine_model(id)) {
      sine_.emplace(grid);
    } else {
      torus_.emplace(grid);
    }
  }

  const ModelSpec& spec() const { return spec_; }
  ModelId id() const { return spec_.id; }
  Field zero() const { return spec_.zero(); }
  int grid() const { return spec_.grid; }

  /// Collocation points per component (n on (0,1), n^2 on the torus).
  std::size_t grid_points() const {
    return sine_ ? static_cast<std::size_t>(spec_.grid) : torus_->grid_size();
  }

  const spectral::SineTransform& sine() const { return *sine_; }
  const spectral::TorusTransform& torus() const { return *torus_; }

  /// Grid values, component-major.
  std::vector<double> to_grid(const Field& f) const {
    spec_.require(f);
    if (sine_) return sine_->synthesize(f.coeffs);
    std::vector<double> out;
    out.reserve(grid_points() * static_cast<std::size_t>(spec_.components));
    for (int c = 0; c < spec_.components; ++c) {
      const auto g = torus_->to_grid(component_spectrum(f, c));
      out.insert(out.end(), g.begin(), g.end());
    }
    return out;
  }

  /// Band-truncated projection of grid values (Leray-projected for solenoidal models).
  Field from_grid(const std::vector<double>& values) const {
    const std::size_t np = grid_points();
    if (values.size() != np * static_cast<std::size_t>(spec_.components)) {
      throw ModelMismatch("grid value count does not match the model grid");
    }
    Field f = zero();
    if (sine_) {
      f.coeffs = sine_->analyze(values, spec_.dof());
      return f;
    }
    for (int c = 0; c < spec_.components; ++c) {
      std::vector<double> g(values.begin() + static_cast<std::ptrdiff_t>(c * np),
                            values.begin() + static_cast<std::ptrdiff_t>((c + 1) * np));
      store_component(torus_->to_spectrum(g), c, f);
    }
    return project_solenoidal(spec_, f);
  }

  /// Complex spectrum (e^{i k.x} coefficients) of one component of a torus field.
  std::vector<Complex> component_spectrum(const Field& f, int comp) const {
    return layout_spectrum(f.coeffs, spec_.components, comp);
  }

  /// Writes the retained band of a spectrum into component `comp` of f.
  void store_component(const std::vector<Complex>& spec, int comp, Field& f) const {
    for (std::size_t m = 0; m < spec_.modes.size(); ++m) {
      const Complex c = spec[torus_->slot(spec_.modes[m][0], spec_.modes[m][1])];
      f[spec_.index(m, 0, comp)] = 2.0 * c.real();
      f[spec_.index(m, 1, comp)] = -2.0 * c.imag();
    }
  }

  Field F(const Field& u) const {
    spec_.require(u);
    switch (spec_.id) {
      case ModelId::heat: return zero();
      case ModelId::ac_weak:
      case ModelId::ac_strong: return allen_cahn(u);
      case ModelId::nse_weak:
      case ModelId::nse_strong: return navier_stokes(u);
      case ModelId::qg: return quasi_geostrophic(u);
      case ModelId::mhd: return magnetohydrodynamic(u);
    }
    return zero();
  }

  /// R^perp theta = i k^perp/|k| theta_k, returned in the velocity layout of nse_weak.
  Field riesz_perp(const Field& theta) const {
    if (spec_.id != ModelId::qg) throw ModelMismatch("riesz_perp needs a scalar torus (qg) field");
    spec_.require(theta);
    Field out{ModelId::nse_weak, spec_.grid, std::vector<double>(spec_.modes.size() * 4, 0.0)};
    for (std::size_t m = 0; m < spec_.modes.size(); ++m) {
      const double k1 = spec_.modes[m][0], k2 = spec_.modes[m][1];
      const double kn = std::sqrt(k1 * k1 + k2 * k2);
      const double p1 = -k2 / kn, p2 = k1 / kn;
      const double a = theta[spec_.index(m, 0, 0)];
      const double b = theta[spec_.index(m, 1, 0)];
      // cos part <- b k^perp/|k|, sin part <- -a k^perp/|k|
      out[(m * 2 + 0) * 2 + 0] = b * p1;
      out[(m * 2 + 0) * 2 + 1] = b * p2;
      out[(m * 2 + 1) * 2 + 0] = -a * p1;
      out[(m * 2 + 1) * 2 + 1] = -a * p2;
    }
    return out;
  }

  /// Model kappa_u with the multiplicative constant fixed to 1.
  double kappa(const Field& u) const {
    spec_.require(u);
    switch (spec_.id) {
      case ModelId::heat: return 0.0;
      case ModelId::ac_weak: {
        const double v = norm(spec_, u, Space::V);
        return 1.0 + v * v;
      }
      case ModelId::ac_strong: {
        const double h = norm(spec_, u, Space::H);
        const double v = norm(spec_, u, Space::V);
        return 1.0 + (1.0 + h * h) * v * v;
      }
      case ModelId::nse_weak:
      case ModelId::qg: return l2_grad_product(u, 0, spec_.components);
      case ModelId::mhd: return l2_grad_product(u, 0, 2) + l2_grad_product(u, 2, 4);
      case ModelId::nse_strong: return strong_nse_kappa(u);
    }
    return 0.0;
  }

  KappaSample kappa_monitor(const Field& u, double t) const { return {t, kappa(u)}; }

  /// ||u||_2 on the physical domain, independent of the model's H weights.
  double l2_norm(const Field& u) const {
    spec_.require(u);
    const double basis = sine_ ? 0.5 : 2.0 * std::numbers::pi * std::numbers::pi;
    double s = 0.0;
    for (double c : u.coeffs) s += basis * c * c;
    return std::sqrt(s);
  }

 private:
  std::vector<Complex> layout_spectrum(const std::vector<double>& coeffs, int components, int comp) const {
    std::vector<Complex> spec(torus_->spectrum_size(), Complex(0.0, 0.0));
    const auto at = [&](std::size_t m, int trig) {
      return coeffs[(m * 2 + static_cast<std::size_t>(trig)) * static_cast<std::size_t>(components) +
                    static_cast<std::size_t>(comp)];
    };
    for (std::size_t m = 0; m < spec_.modes.size(); ++m) {
      const int k1 = spec_.modes[m][0];
      const int k2 = spec_.modes[m][1];
      const Complex c(0.5 * at(m, 0), -0.5 * at(m, 1));
      spec[torus_->slot(k1, k2)] = c;
      if (k2 == 0) spec[torus_->slot(-k1, 0)] = std::conj(c);
    }
    return spec;
  }

  Field allen_cahn(const Field& u) const {
    std::vector<double> g = sine_->synthesize(u.coeffs);
    for (double& x : g) x = x * x * x;
    const std::vector<double> cubic = sine_->analyze(g, spec_.dof());
    Field out = u;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= cubic[i];
    return out;
  }

  struct VectorGrid {
    std::vector<double> value[2];
    std::vector<double> grad[2][2];  // grad[i][j] = d_j a_i
  };

  VectorGrid vector_grid(const Field& f, int first_comp) const {
    VectorGrid g;
    for (int i = 0; i < 2; ++i) {
      const auto spec = component_spectrum(f, first_comp + i);
      g.value[i] = torus_->to_grid(spec);
      for (int j = 0; j < 2; ++j) g.grad[i][j] = torus_->to_grid(torus_->derivative(spec, j));
    }
    return g;
  }

  /// out_i += sign * (b . grad) a_i on the grid.
  static void accumulate_advection(const VectorGrid& a, const VectorGrid& b, double sign,
                                   std::vector<double> (&out)[2]) {
    for (int i = 0; i < 2; ++i) {
      for (std::size_t p = 0; p < out[i].size(); ++p) {
        out[i][p] += sign * (b.value[0][p] * a.grad[i][0][p] + b.value[1][p] * a.grad[i][1][p]);
      }
    }
  }

  void store_vector(std::vector<double> (&grid)[2], int first_comp, Field& f) const {
    for (int i = 0; i < 2; ++i) store_component(torus_->to_spectrum(grid[i]), first_comp + i, f);
  }

  Field navier_stokes(const Field& u) const {
    const VectorGrid g = vector_grid(u, 0);
    std::vector<double> acc[2] = {std::vector<double>(grid_points(), 0.0), std::vector<double>(grid_points(), 0.0)};
    accumulate_advection(g, g, -1.0, acc);
    Field out = zero();
    store_vector(acc, 0, out);
    return project_solenoidal(spec_, out);
  }

  Field magnetohydrodynamic(const Field& phi) const {
    const VectorGrid u = vector_grid(phi, 0);
    const VectorGrid h = vector_grid(phi, 2);
    const std::size_t np = grid_points();
    std::vector<double> fu[2] = {std::vector<double>(np, 0.0), std::vector<double>(np, 0.0)};
    std::vector<double> fh[2] = {std::vector<double>(np, 0.0), std::vector<double>(np, 0.0)};
    accumulate_advection(u, u, -1.0, fu);
    accumulate_advection(h, h, +1.0, fu);
    accumulate_advection(h, u, -1.0, fh);
    accumulate_advection(u, h, +1.0, fh);
    Field out = zero();
    store_vector(fu, 0, out);
    store_vector(fh, 2, out);
    return project_solenoidal(spec_, out);
  }

  Field quasi_geostrophic(const Field& theta) const {
    const auto spec = component_spectrum(theta, 0);
    const auto d1 = torus_->to_grid(torus_->derivative(spec, 0));
    const auto d2 = torus_->to_grid(torus_->derivative(spec, 1));
    const Field r = riesz_perp(theta);
    const auto r1 = torus_->to_grid(layout_spectrum(r.coeffs, 2, 0));
    const auto r2 = torus_->to_grid(layout_spectrum(r.coeffs, 2, 1));
    std::vector<double> g(grid_points());
    for (std::size_t p = 0; p < g.size(); ++p) g[p] = -(r1[p] * d1[p] + r2[p] * d2[p]);
    Field out = zero();
    store_component(torus_->to_spectrum(g), 0, out);
    return out;
  }

  double l2_grad_product(const Field& u, int first, int last) const {
    const double basis = 2.0 * std::numbers::pi * std::numbers::pi;
    double l2 = 0.0, grad = 0.0;
    for (std::size_t m = 0; m < spec_.modes.size(); ++m) {
      const double kk = spec_.modes[m][0] * spec_.modes[m][0] + spec_.modes[m][1] * spec_.modes[m][1];
      for (int trig = 0; trig < spec_.trig_count; ++trig) {
        for (int c = first; c < last; ++c) {
          const double x = u[spec_.index(m, trig, c)];
          l2 += basis * x * x;
          grad += basis * kk * x * x;
        }
      }
    }
    return l2 * grad;
  }

  double strong_nse_kappa(const Field& u) const {
    const VectorGrid g = vector_grid(u, 0);
    double sup = 0.0, cube = 0.0;
    for (std::size_t p = 0; p < grid_points(); ++p) {
      sup = std::max(sup, g.value[0][p] * g.value[0][p] + g.value[1][p] * g.value[1][p]);
      double frob = 0.0;
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) frob += g.grad[i][j][p] * g.grad[i][j][p];
      }
      cube += std::pow(frob, 1.5);
    }
    const double cell = std::pow(2.0 * std::numbers::pi / spec_.grid, 2);
    return sup + std::pow(cube * cell, 2.0 / 3.0);
  }

  ModelSpec spec_;
  std::optional<spectral::SineTransform> sine_;
  std::optional<spectral::TorusTransform> torus_;
};

inline Field apply_F(const Model& model, const Field& f) { return model.F(f); }

inline Field ac_weak_F(const Model& model, const Field& u) {
  if (model.id() != ModelId::ac_weak) throw ModelMismatch("ac_weak_F needs an ac_weak model");
  return model.F(u);
}

inline Field ac_strong_F(const Model& model, const Field& u) {
  if (model.id() != ModelId::ac_strong) throw ModelMismatch("ac_strong_F needs an ac_strong model");
  return model.F(u);
}

inline Field nse_weak_F(const Model& model, const Field& u) {
  if (model.id() != ModelId::nse_weak) throw ModelMismatch("nse_weak_F needs an nse_weak model");
  return model.F(u);
}

inline Field nse_strong_F(const Model& model, const Field& u) {
  if (model.id() != ModelId::nse_strong) throw ModelMismatch("nse_strong_F needs an nse_strong model");
  return model.F(u);
}

inline Field qg_F(const Model& model, const Field& theta) {
  if (model.id() != ModelId::qg) throw ModelMismatch("qg_F needs a qg model");
  return model.F(theta);
}

inline Field mhd_F(const Model& model, const Field& phi) {
  if (model.id() != ModelId::mhd) throw ModelMismatch("mhd_F needs an mhd model");
  return model.F(phi);
}

/// Band-truncated Leray projection of a 2-component grid field.
inline Field leray_project(const Model& model, const std::vector<double>& grid_values) {
  if (model.spec().components != 2 || !model.spec().solenoidal) {
    throw ModelMismatch("leray_project needs a two-component solenoidal model");
  }
  return model.from_grid(grid_values);
}

inline KappaSample kappa_monitor(const Model& model, const Field& u, double t) { return model.kappa_monitor(u, t); }

}  // namespace nudgelab
