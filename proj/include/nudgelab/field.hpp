#pragma once

// Gelfand-triple state representation: spectral coefficient vectors, the
// diagonal H / V / V* norm weights, the duality pairing and the linear part A.
//
// Coefficient layout, shared by every model:
//
//   index(m, trig, comp) = (m * trig_count + trig) * components + comp
//
// where m enumerates the retained modes, trig selects cos (0) or sin (1) on
// the torus (trig_count = 2; the 1D sine basis has trig_count = 1) and comp
// is the vector component. Torus modes are the half-plane wavevectors
// (k2 > 0, or k2 == 0 and k1 > 0), so the mean mode never appears and every
// field is real by construction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nudgelab {

enum class ModelId { heat, ac_weak, ac_strong, nse_weak, nse_strong, qg, mhd };

inline std::string_view to_string(ModelId id) {
  switch (id) {
    case ModelId::heat: return "heat";
    case ModelId::ac_weak: return "ac_weak";
    case ModelId::ac_strong: return "ac_strong";
    case ModelId::nse_weak: return "nse_weak";
    case ModelId::nse_strong: return "nse_strong";
    case ModelId::qg: return "qg";
    case ModelId::mhd: return "mhd";
  }
  return "unknown";
}

inline std::optional<ModelId> parse_model_id(std::string_view name) {
  for (ModelId id : {ModelId::heat, ModelId::ac_weak, ModelId::ac_strong, ModelId::nse_weak,
                     ModelId::nse_strong, ModelId::qg, ModelId::mhd}) {
    if (to_string(id) == name) return id;
  }
  return std::nullopt;
}

enum class Space { H, V, Vstar };

/// Weak triples can use the homogeneous norm ||grad u|| on V or the full H^1 norm.
enum class NormConvention { homogeneous, inhomogeneous };

class ModelMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Field {
  ModelId model = ModelId::heat;
  int basis_size = 0;  // collocation grid size N per dimension
  std::vector<double> coeffs;

  std::size_t size() const { return coeffs.size(); }
  double operator[](std::size_t i) const { return coeffs[i]; }
  double& operator[](std::size_t i) { return coeffs[i]; }
};

inline void require_same_model(const Field& a, const Field& b) {
  if (a.model != b.model || a.basis_size != b.basis_size || a.coeffs.size() != b.coeffs.size()) {
    throw ModelMismatch("fields belong to different models or truncations");
  }
}

inline Field operator+(Field a, const Field& b) {
  require_same_model(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline Field operator-(Field a, const Field& b) {
  require_same_model(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

inline Field operator*(double s, Field a) {
  for (double& c : a.coeffs) c *= s;
  return a;
}

/// y += s * x
inline void axpy(double s, const Field& x, Field& y) {
  require_same_model(x, y);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

inline double max_abs(const Field& f) {
  double m = 0.0;
  for (double c : f.coeffs) m = std::max(m, std::abs(c));
  return m;
}

struct ModelSpec {
  ModelId id = ModelId::heat;
  NormConvention norms = NormConvention::homogeneous;
  double nu = 1.0;
  double alpha = 1.0;  // coercivity constant: <A f, f> >= alpha ||f||_V^2
  int grid = 0;        // collocation points per dimension
  int band = 0;        // largest retained integer wavenumber per dimension
  double dealias_fraction = 0.5;
  int dims = 1;
  int trig_count = 1;
  int components = 1;
  bool solenoidal = false;
  double domain_length = 1.0;
  std::vector<std::array<int, 2>> modes;
  // Per-coefficient data.
  std::vector<double> a_symbol;
  std::vector<double> weight_h;
  std::vector<double> weight_v;
  std::vector<double> weight_vstar;

  std::size_t dof() const { return modes.size() * static_cast<std::size_t>(trig_count * components); }

  std::size_t index(std::size_t m, int trig, int comp) const {
    return (m * static_cast<std::size_t>(trig_count) + static_cast<std::size_t>(trig)) *
               static_cast<std::size_t>(components) +
           static_cast<std::size_t>(comp);
  }

  std::size_t mode_of(std::size_t i) const {
    return i / static_cast<std::size_t>(trig_count * components);
  }

  /// Integer wavenumber magnitude |k| of mode m (sine index k in 1D).
  double wavenumber(std::size_t m) const {
    const auto& k = modes[m];
    return std::sqrt(static_cast<double>(k[0] * k[0] + k[1] * k[1]));
  }

  /// Physical wavenumber: k*pi on (0,1), |k| on the 2*pi torus.
  double physical_wavenumber(std::size_t m) const {
    return dims == 1 ? std::numbers::pi * modes[m][0] : wavenumber(m);
  }

  /// Physical wavenumber of the unit index, used to convert a scale delta into a cutoff.
  double unit_wavenumber() const { return dims == 1 ? std::numbers::pi : 1.0; }

  std::size_t minimal_mode() const {
    std::size_t best = 0;
    for (std::size_t m = 1; m < modes.size(); ++m) {
      if (wavenumber(m) < wavenumber(best)) best = m;
    }
    return best;
  }

  Field zero() const { return Field{id, grid, std::vector<double>(dof(), 0.0)}; }

  void require(const Field& f) const {
    if (f.model != id) {
      throw ModelMismatch("field of model '" + std::string(to_string(f.model)) + "' used with model '" +
                          std::string(to_string(id)) + "'");
    }
    if (f.basis_size != grid) {
      throw ModelMismatch("field basis size " + std::to_string(f.basis_size) + " does not match grid " +
                          std::to_string(grid));
    }
    if (f.size() != dof()) {
      throw ModelMismatch("coefficient length " + std::to_string(f.size()) + " does not match " +
                          std::to_string(dof()) + " degrees of freedom");
    }
  }

  const std::vector<double>& weights(Space space) const {
    switch (space) {
      case Space::H: return weight_h;
      case Space::V: return weight_v;
      case Space::Vstar: return weight_vstar;
    }
    return weight_h;
  }

  /// Checks the mode-wise interpolation identity w_V * w_V* = w_H^2 and a > 0.
  void validate() const {
    const std::size_t n = dof();
    if (a_symbol.size() != n || weight_h.size() != n || weight_v.size() != n || weight_vstar.size() != n) {
      throw std::logic_error("model spec arrays do not match its degrees of freedom");
    }
    if (!(alpha > 0.0)) throw std::logic_error("coercivity constant must be positive");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(a_symbol[i] > 0.0)) throw std::logic_error("A symbol must be positive on every retained mode");
      const double lhs = weight_v[i] * weight_vstar[i];
      const double rhs = weight_h[i] * weight_h[i];
      if (std::abs(lhs - rhs) > 1e-12 * rhs) {
        throw std::logic_error("norm weights violate w_V * w_V* = w_H^2 at coefficient " + std::to_string(i));
      }
    }
  }

  /// Smallest c with ||f||_{V*} <= c ||f||_H for every f (mode-wise weight ratio).
  double embedding_vstar_h() const {
    double c = 0.0;
    for (std::size_t i = 0; i < dof(); ++i) c = std::max(c, weight_vstar[i] / weight_h[i]);
    return c;
  }

  /// Smallest c with ||f||_H <= c ||f||_V for every f.
  double embedding_h_v() const {
    double c = 0.0;
    for (std::size_t i = 0; i < dof(); ++i) c = std::max(c, weight_h[i] / weight_v[i]);
    return c;
  }
};

inline double norm(const ModelSpec& spec, const Field& f, Space space) {
  spec.require(f);
  const auto& w = spec.weights(space);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double x = w[i] * f[i];
    s += x * x;
  }
  return std::sqrt(s);
}

inline double inner_h(const ModelSpec& spec, const Field& f, const Field& g) {
  spec.require(f);
  spec.require(g);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += spec.weight_h[i] * spec.weight_h[i] * f[i] * g[i];
  return s;
}

/// <f, g>_{V*,V}. In the weak triples this is the L^2 product extended to V*; in
/// the strong triples it is (f, A g)_2 with the unscaled A. Both reduce to the
/// same per-mode weights w_H^2, which is the compatibility identity with (.,.)_H.
inline double pairing(const ModelSpec& spec, const Field& f, const Field& g) {
  spec.require(f);
  spec.require(g);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    s += spec.weight_vstar[i] * spec.weight_v[i] * f[i] * g[i];
  }
  return s;
}

/// Leray projection on the torus: removes the component of each mode along k.
inline Field project_solenoidal(const ModelSpec& spec, Field f) {
  spec.require(f);
  if (!spec.solenoidal) return f;
  for (std::size_t m = 0; m < spec.modes.size(); ++m) {
    const double k1 = spec.modes[m][0];
    const double k2 = spec.modes[m][1];
    const double kk = k1 * k1 + k2 * k2;
    for (int trig = 0; trig < spec.trig_count; ++trig) {
      for (int block = 0; block < spec.components; block += 2) {
        const std::size_t i1 = spec.index(m, trig, block);
        const std::size_t i2 = i1 + 1;
        const double dot = (k1 * f[i1] + k2 * f[i2]) / kk;
        f[i1] -= dot * k1;
        f[i2] -= dot * k2;
      }
    }
  }
  return f;
}

/// Mode-wise A (Leray-projected for solenoidal models).
inline Field apply_A(const ModelSpec& spec, const Field& f) {
  Field out = project_solenoidal(spec, f);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= spec.a_symbol[i];
  return out;
}

/// Number of independent directions per (mode, trig): one per scalar component,
/// one (k^perp/|k|) per solenoidal two-component block.
inline int directions_per_slot(const ModelSpec& spec) {
  return spec.solenoidal ? spec.components / 2 : spec.components;
}

/// Unit-H-norm basis direction for (mode m, trig, d) with d < directions_per_slot.
inline Field basis_direction(const ModelSpec& spec, std::size_t m, int trig, int d) {
  Field e = spec.zero();
  if (spec.solenoidal) {
    const double k1 = spec.modes[m][0], k2 = spec.modes[m][1];
    const double kn = std::sqrt(k1 * k1 + k2 * k2);
    const std::size_t i1 = spec.index(m, trig, 2 * d);
    e[i1] = -k2 / kn / spec.weight_h[i1];
    e[i1 + 1] = k1 / kn / spec.weight_h[i1 + 1];
  } else {
    const std::size_t i = spec.index(m, trig, d);
    e[i] = 1.0 / spec.weight_h[i];
  }
  return e;
}

/// max_k |k . u_k| over all solenoidal blocks; 0 for scalar models.
inline double divergence_residual(const ModelSpec& spec, const Field& f) {
  spec.require(f);
  if (!spec.solenoidal) return 0.0;
  double worst = 0.0;
  for (std::size_t m = 0; m < spec.modes.size(); ++m) {
    for (int trig = 0; trig < spec.trig_count; ++trig) {
      for (int block = 0; block < spec.components; block += 2) {
        const std::size_t i1 = spec.index(m, trig, block);
        worst = std::max(worst, std::abs(spec.modes[m][0] * f[i1] + spec.modes[m][1] * f[i1 + 1]));
      }
    }
  }
  return worst;
}

}  // namespace nudgelab
