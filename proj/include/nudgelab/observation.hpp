#pragma once

// Observation operators I_delta = L_delta M_delta.
//
// modal:  keeps the modes with physical wavenumber <= pi/delta (so delta is the
//         smallest resolved half-wavelength); diagonal and idempotent.
// volume: M_delta takes averages over cells of width delta, L_delta embeds the
//         piecewise-constant interpolant back into the retained spectral band
//         (componentwise, then Leray-projected for solenoidal models).

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "field.hpp"
#include "rng.hpp"

namespace nudgelab {

enum class ObservationKind { modal, volume };

inline std::string_view to_string(ObservationKind kind) { return kind == ObservationKind::modal ? "modal" : "volume"; }

/// Largest retained integer wavenumber index for the modal operator.
inline int modal_cutoff(const ModelSpec& spec, double delta) {
  return static_cast<int>(std::floor(std::numbers::pi / (delta * spec.unit_wavenumber()) + 1e-9));
}

/// Scale delta whose modal cutoff is exactly the integer index k.
inline double delta_for_cutoff(const ModelSpec& spec, int k) {
  return std::numbers::pi / (spec.unit_wavenumber() * k);
}

class ObservationOperator {
 public:
  ObservationOperator(const ModelSpec& spec, ObservationKind kind, double delta)
      : spec_(spec), kind_(kind), delta_(delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("observation scale delta must be positive");
    if (delta > spec.domain_length * (1.0 + 1e-12)) {
      throw std::invalid_argument("observation scale delta exceeds the domain size");
    }
    if (kind == ObservationKind::modal) {
      cutoff_ = modal_cutoff(spec, delta);
      mask_.assign(spec.dof(), 0.0);
      const double kmax = std::numbers::pi / delta * (1.0 + 1e-12);
      for (std::size_t i = 0; i < spec.dof(); ++i) {
        if (spec.physical_wavenumber(spec.mode_of(i)) <= kmax) mask_[i] = 1.0;
      }
    } else {
      const double ratio = spec.domain_length / delta;
      cells_ = static_cast<int>(std::lround(ratio));
      if (cells_ < 1 || std::abs(ratio - cells_) > 1e-9 * ratio) {
        throw std::invalid_argument("volume observations need delta to divide the domain length");
      }
      width_ = spec.domain_length / cells_;
      if (spec.dims == 1) build_sine_cells();
      else build_torus_factors();
    }
  }

  ObservationKind kind() const { return kind_; }
  double delta() const { return delta_; }
  int cutoff() const { return cutoff_; }
  int cells() const { return cells_; }
  const ModelSpec& spec() const { return spec_; }

  /// True when I_delta is diagonal in the model basis (mask() then holds it).
  bool diagonal() const { return kind_ == ObservationKind::modal; }
  const std::vector<double>& mask() const { return mask_; }

  Field apply(const Field& f) const {
    spec_.require(f);
    if (kind_ == ObservationKind::modal) {
      Field out = f;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask_[i];
      return out;
    }
    return interpolate(measure(f));
  }

  /// M_delta: modal -> retained coefficients; volume -> cell averages
  /// (component-major, cells row-major with x1 slowest).
  std::vector<double> measure(const Field& f) const {
    spec_.require(f);
    if (kind_ == ObservationKind::modal) {
      std::vector<double> out;
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (mask_[i] != 0.0) out.push_back(f[i]);
      }
      return out;
    }
    return spec_.dims == 1 ? sine_averages(f) : torus_averages(f);
  }

  /// L_delta: inverse embedding of measure().
  Field interpolate(const std::vector<double>& data) const {
    Field out = spec_.zero();
    if (kind_ == ObservationKind::modal) {
      std::size_t j = 0;
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (mask_[i] != 0.0) {
          if (j >= data.size()) throw std::invalid_argument("too few modal observations");
          out[i] = data[j++];
        }
      }
      return out;
    }
    return spec_.dims == 1 ? sine_embed(data) : torus_embed(data);
  }

  /// Cell averages of a function given pointwise (1D), by 8-point Gauss-Legendre per cell.
  std::vector<double> cell_averages(const std::function<double(double)>& fn) const {
    require_volume();
    std::vector<double> out(static_cast<std::size_t>(cells_), 0.0);
    for (int j = 0; j < cells_; ++j) {
      const double a = j * width_;
      for (int q = 0; q < 8; ++q) {
        const double x = a + 0.5 * width_ * (1.0 + kGaussNodes[q]);
        out[static_cast<std::size_t>(j)] += 0.5 * kGaussWeights[q] * fn(x);
      }
    }
    return out;
  }

  /// Cell averages of a function on the torus (row-major cells, x1 slowest).
  std::vector<double> cell_averages(const std::function<double(double, double)>& fn) const {
    require_volume();
    std::vector<double> out(static_cast<std::size_t>(cells_) * cells_, 0.0);
    for (int j1 = 0; j1 < cells_; ++j1) {
      for (int j2 = 0; j2 < cells_; ++j2) {
        double s = 0.0;
        for (int q1 = 0; q1 < 8; ++q1) {
          for (int q2 = 0; q2 < 8; ++q2) {
            const double x1 = (j1 + 0.5 * (1.0 + kGaussNodes[q1])) * width_;
            const double x2 = (j2 + 0.5 * (1.0 + kGaussNodes[q2])) * width_;
            s += 0.25 * kGaussWeights[q1] * kGaussWeights[q2] * fn(x1, x2);
          }
        }
        out[static_cast<std::size_t>(j1) * cells_ + j2] = s;
      }
    }
    return out;
  }

 private:
  using Cx = std::complex<double>;

  static constexpr double kGaussNodes[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                            -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                            0.7966664774136267,  0.9602898564975363};
  static constexpr double kGaussWeights[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                              0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                              0.2223810344533745, 0.1012285362903763};

  void require_volume() const {
    if (kind_ != ObservationKind::volume) throw std::logic_error("cell averages need a volume operator");
  }

  // 1D: avg_j = sum_k c_k A[j][k], A[j][k] = (cos(k pi a_j) - cos(k pi b_j)) / (k pi h).
  void build_sine_cells() {
    const std::size_t K = spec_.modes.size();
    cell_matrix_.assign(static_cast<std::size_t>(cells_) * K, 0.0);
    for (int j = 0; j < cells_; ++j) {
      const double a = j * width_, b = (j + 1) * width_;
      for (std::size_t m = 0; m < K; ++m) {
        const double kp = std::numbers::pi * spec_.modes[m][0];
        cell_matrix_[static_cast<std::size_t>(j) * K + m] = (std::cos(kp * a) - std::cos(kp * b)) / (kp * width_);
      }
    }
  }

  std::vector<double> sine_averages(const Field& f) const {
    const std::size_t K = spec_.modes.size();
    std::vector<double> out(static_cast<std::size_t>(cells_), 0.0);
    for (int j = 0; j < cells_; ++j) {
      double s = 0.0;
      for (std::size_t m = 0; m < K; ++m) s += cell_matrix_[static_cast<std::size_t>(j) * K + m] * f[m];
      out[static_cast<std::size_t>(j)] = s;
    }
    return out;
  }

  // c_k = 2 int_0^1 p(x) sin(k pi x) dx for the piecewise-constant p.
  Field sine_embed(const std::vector<double>& avg) const {
    if (avg.size() != static_cast<std::size_t>(cells_)) throw std::invalid_argument("cell average count mismatch");
    const std::size_t K = spec_.modes.size();
    Field out = spec_.zero();
    for (int j = 0; j < cells_; ++j) {
      for (std::size_t m = 0; m < K; ++m) {
        out[m] += 2.0 * width_ * avg[static_cast<std::size_t>(j)] * cell_matrix_[static_cast<std::size_t>(j) * K + m];
      }
    }
    return out;
  }

  // E(k, j) = cell average of e^{i k x} over [j h, (j+1) h], for k in [-band, band].
  void build_torus_factors() {
    const int B = spec_.band;
    const std::size_t width = static_cast<std::size_t>(2 * B + 1);
    factors_.assign(width * static_cast<std::size_t>(cells_), Cx(0.0, 0.0));
    for (int k = -B; k <= B; ++k) {
      for (int j = 0; j < cells_; ++j) {
        Cx e(1.0, 0.0);
        if (k != 0) {
          const double kh = k * width_;
          e = std::exp(Cx(0.0, k * j * width_)) * (std::exp(Cx(0.0, kh)) - 1.0) / Cx(0.0, kh);
        }
        factors_[static_cast<std::size_t>(k + B) * cells_ + j] = e;
      }
    }
  }

  Cx factor(int k, int j) const {
    return factors_[static_cast<std::size_t>(k + spec_.band) * cells_ + j];
  }

  std::vector<double> torus_averages(const Field& f) const {
    const int B = spec_.band;
    const std::size_t W = static_cast<std::size_t>(2 * B + 1);
    const std::size_t nc = static_cast<std::size_t>(cells_) * cells_;
    std::vector<double> out(nc * static_cast<std::size_t>(spec_.components), 0.0);
    for (int comp = 0; comp < spec_.components; ++comp) {
      // Full complex coefficient square C[k1][k2].
      std::vector<Cx> C(W * W, Cx(0.0, 0.0));
      for (std::size_t m = 0; m < spec_.modes.size(); ++m) {
        const int k1 = spec_.modes[m][0], k2 = spec_.modes[m][1];
        const Cx c(0.5 * f[spec_.index(m, 0, comp)], -0.5 * f[spec_.index(m, 1, comp)]);
        C[static_cast<std::size_t>(k1 + B) * W + static_cast<std::size_t>(k2 + B)] = c;
        C[static_cast<std::size_t>(-k1 + B) * W + static_cast<std::size_t>(-k2 + B)] = std::conj(c);
      }
      std::vector<Cx> T(static_cast<std::size_t>(cells_) * W, Cx(0.0, 0.0));
      for (int j1 = 0; j1 < cells_; ++j1) {
        for (int k1 = -B; k1 <= B; ++k1) {
          const Cx e = factor(k1, j1);
          for (std::size_t q = 0; q < W; ++q) {
            T[static_cast<std::size_t>(j1) * W + q] += e * C[static_cast<std::size_t>(k1 + B) * W + q];
          }
        }
      }
      for (int j1 = 0; j1 < cells_; ++j1) {
        for (int j2 = 0; j2 < cells_; ++j2) {
          Cx s(0.0, 0.0);
          for (int k2 = -B; k2 <= B; ++k2) {
            s += T[static_cast<std::size_t>(j1) * W + static_cast<std::size_t>(k2 + B)] * factor(k2, j2);
          }
          out[static_cast<std::size_t>(comp) * nc + static_cast<std::size_t>(j1) * cells_ + j2] = s.real();
        }
      }
    }
    return out;
  }

  Field torus_embed(const std::vector<double>& avg) const {
    const int B = spec_.band;
    const std::size_t nc = static_cast<std::size_t>(cells_) * cells_;
    if (avg.size() != nc * static_cast<std::size_t>(spec_.components)) {
      throw std::invalid_argument("cell average count mismatch");
    }
    const double scale = width_ * width_ / (4.0 * std::numbers::pi * std::numbers::pi);
    Field out = spec_.zero();
    const std::size_t W2 = static_cast<std::size_t>(B + 1);
    for (int comp = 0; comp < spec_.components; ++comp) {
      const double* a = avg.data() + static_cast<std::size_t>(comp) * nc;
      // D[j1][k2] = sum_j2 a[j1][j2] conj(E(k2, j2)), k2 = 0..B
      std::vector<Cx> D(static_cast<std::size_t>(cells_) * W2, Cx(0.0, 0.0));
      for (int j1 = 0; j1 < cells_; ++j1) {
        for (int k2 = 0; k2 <= B; ++k2) {
          Cx s(0.0, 0.0);
          for (int j2 = 0; j2 < cells_; ++j2) s += a[static_cast<std::size_t>(j1) * cells_ + j2] * std::conj(factor(k2, j2));
          D[static_cast<std::size_t>(j1) * W2 + static_cast<std::size_t>(k2)] = s;
        }
      }
      for (std::size_t m = 0; m < spec_.modes.size(); ++m) {
        const int k1 = spec_.modes[m][0], k2 = spec_.modes[m][1];
        Cx g(0.0, 0.0);
        for (int j1 = 0; j1 < cells_; ++j1) {
          g += D[static_cast<std::size_t>(j1) * W2 + static_cast<std::size_t>(k2)] * std::conj(factor(k1, j1));
        }
        g *= scale;
        out[spec_.index(m, 0, comp)] = 2.0 * g.real();
        out[spec_.index(m, 1, comp)] = -2.0 * g.imag();
      }
    }
    return project_solenoidal(spec_, out);
  }

  ModelSpec spec_;
  ObservationKind kind_;
  double delta_;
  int cutoff_ = 0;
  int cells_ = 0;
  double width_ = 0.0;
  std::vector<double> mask_;
  std::vector<double> cell_matrix_;
  std::vector<Cx> factors_;
};

inline Field apply_observation(const ObservationOperator& op, const Field& f) { return op.apply(f); }

/// ||f - I f||_{V*} / (delta ||f||_H); the sup over g of the pairing quotient.
inline double interp_quotient(const ObservationOperator& op, const Field& f) {
  const ModelSpec& spec = op.spec();
  const double h = norm(spec, f, Space::H);
  if (h == 0.0) return 0.0;
  return norm(spec, f - op.apply(f), Space::Vstar) / (op.delta() * h);
}

/// Measured C_I: max of the pairing quotient <f - I f, g> / (delta ||f||_H ||g||_V)
/// over every single-mode probe and `samples` random fields, each paired with
/// its maximizing g (the V-Riesz representative of f - I f).
inline double estimate_interp_constant(const ObservationOperator& op, int samples, std::uint64_t seed = 0) {
  if (samples < 1) throw std::invalid_argument("samples must be at least 1");
  const ModelSpec& spec = op.spec();
  double best = 0.0;
  const int per_slot = directions_per_slot(spec);
  for (std::size_t m = 0; m < spec.modes.size(); ++m) {
    for (int trig = 0; trig < spec.trig_count; ++trig) {
      for (int d = 0; d < per_slot; ++d) best = std::max(best, interp_quotient(op, basis_direction(spec, m, trig, d)));
    }
  }
  const CounterNormal rng(seed, Stream::probe);
  for (int s = 0; s < samples; ++s) {
    Field f = spec.zero();
    for (std::size_t i = 0; i < f.size(); ++i) {
      f[i] = rng.normal(static_cast<std::uint64_t>(s), static_cast<std::uint32_t>(i)) / spec.weight_h[i];
    }
    f = project_solenoidal(spec, f);
    best = std::max(best, interp_quotient(op, f));
  }
  return best;
}

/// eta_0 = 2 alpha / C_I^2, the admissible bound on mu delta^2.
inline double eta0(double alpha, double c_i) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(c_i > 0.0)) throw std::invalid_argument("C_I must be positive");
  return 2.0 * alpha / (c_i * c_i);
}

}  // namespace nudgelab
