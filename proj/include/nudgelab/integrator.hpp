#pragma once

// IMEX Euler-Maruyama for the reference equation, the nudged system and the
// stochastic convolution. A is treated implicitly (diagonal solve), F and the
// nudging term explicitly (or implicitly for diagonal observation operators),
// and the noise coefficient is evaluated at the left endpoint.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "field.hpp"
#include "models.hpp"
#include "noise.hpp"
#include "observation.hpp"
#include "rng.hpp"

namespace nudgelab {

struct StepConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  double mu = 0.0;
  bool implicit_nudging = false;
  double blowup_guard = 1e12;
  int stride = 10;

  std::size_t steps() const { return static_cast<std::size_t>(std::llround(t_end / dt)); }

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(t_end >= dt)) throw std::invalid_argument("t_end must be at least dt");
    if (!(mu >= 0.0)) throw std::invalid_argument("mu must be >= 0");
    if (!(blowup_guard > 0.0)) throw std::invalid_argument("blowup_guard must be positive");
    if (stride < 1) throw std::invalid_argument("stride must be at least 1");
  }
};

class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(std::size_t step, double t, const std::string& what)
      : std::runtime_error(what + " at step " + std::to_string(step) + " (t = " + std::to_string(t) + ")"),
        step_(step),
        t_(t) {}
  std::size_t step() const { return step_; }
  double time() const { return t_; }

 private:
  std::size_t step_;
  double t_;
};

/// Monitors the discrete L^2(0,t;V) norm; trips on overflow or non-finite state.
class BlowUpGuard {
 public:
  explicit BlowUpGuard(double threshold) : threshold_(threshold) {}

  void add(const ModelSpec& spec, const Field& f, double dt, std::size_t step, double t) {
    const double v = norm(spec, f, Space::V);
    accumulated_ += dt * v * v;
    if (!std::isfinite(v) || !(std::sqrt(accumulated_) <= threshold_)) {
      throw BlowUpError(step, t, "blow-up guard tripped: L2(0,t;V) accumulator exceeded " + std::to_string(threshold_));
    }
  }

  double value() const { return std::sqrt(accumulated_); }

 private:
  double threshold_;
  double accumulated_ = 0.0;
};

class Stepper {
 public:
  Stepper(const Model& model, const ObservationOperator& obs, const NoiseModel& noise, StepConfig cfg)
      : model_(model), obs_(obs), noise_(noise), cfg_(cfg) {
    cfg_.validate();
    const ModelSpec& spec = model_.spec();
    if (obs_.spec().id != spec.id || obs_.spec().grid != spec.grid) {
      throw ModelMismatch("observation operator built for a different model");
    }
    if (cfg_.implicit_nudging && !obs_.diagonal()) {
      throw std::invalid_argument("implicit nudging needs a modal (diagonal) observation operator");
    }
    den_ref_.resize(spec.dof());
    den_nudge_.resize(spec.dof());
    for (std::size_t i = 0; i < spec.dof(); ++i) {
      den_ref_[i] = 1.0 + cfg_.dt * spec.a_symbol[i];
      den_nudge_[i] = cfg_.implicit_nudging ? den_ref_[i] + cfg_.dt * cfg_.mu * obs_.mask()[i] : den_ref_[i];
    }
  }

  const Model& model() const { return model_; }
  const ObservationOperator& observation() const { return obs_; }
  const NoiseModel& noise() const { return noise_; }
  const StepConfig& config() const { return cfg_; }

  /// u+ = (I + dt A)^{-1} (u + dt F(u))
  Field step_reference(const Field& u) const {
    const Field fu = model_.F(u);
    Field out = u;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (u[i] + cfg_.dt * fu[i]) / den_ref_[i];
    return out;
  }

  /// v+ from the nudged equation with reference state u (left endpoint) and
  /// noise increment dw; dw may be empty when the noise is silent.
  Field step_assimilated(const Field& u, const Field& v, const Field& dw) const {
    const Field fv = model_.F(v);
    const double dt = cfg_.dt, mu = cfg_.mu;
    Field rhs = v;
    if (cfg_.implicit_nudging) {
      const Field iu = obs_.apply(u);
      for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = (v[i] + dt * fv[i]) + dt * mu * iu[i];
    } else {
      const Field diff = obs_.apply(v) - obs_.apply(u);
      for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = (v[i] + dt * fv[i]) - dt * mu * diff[i];
    }
    if (!dw.coeffs.empty() && !noise_.silent()) axpy(mu, noise_.apply_G(u, dw), rhs);
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] /= den_nudge_[i];
    return rhs;
  }

  /// Z+ = (I + dt A)^{-1} (Z + mu G(u) dw)
  Field step_convolution(const Field& z, const Field& u, const Field& dw) const {
    Field rhs = z;
    if (!dw.coeffs.empty() && !noise_.silent()) axpy(cfg_.mu, noise_.apply_G(u, dw), rhs);
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] /= den_ref_[i];
    return rhs;
  }

  /// One step of the random equation for vhat = v - Z:
  /// vhat+ = (I + dt A)^{-1} (vhat + dt [F(vhat + Z) - mu I vhat + mu I (u - Z)]).
  Field step_shifted(const Field& vhat, const Field& z, const Field& u) const {
    if (cfg_.implicit_nudging) throw std::logic_error("shifted form is defined for explicit nudging");
    const Field f = model_.F(vhat + z);
    const Field iv = obs_.apply(vhat);
    const Field iuz = obs_.apply(u - z);
    Field out = vhat;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = (vhat[i] + cfg_.dt * (f[i] - cfg_.mu * iv[i] + cfg_.mu * iuz[i])) / den_ref_[i];
    }
    return out;
  }

  Field increment(const CounterNormal& rng, std::uint64_t step) const {
    if (noise_.silent()) return Field{model_.id(), model_.grid(), {}};
    return noise_.sample_increment(rng, step, cfg_.dt);
  }

 private:
  Model model_;
  ObservationOperator obs_;
  NoiseModel noise_;
  StepConfig cfg_;
  std::vector<double> den_ref_;
  std::vector<double> den_nudge_;
};

struct ErrorSeries {
  std::vector<double> t;
  std::vector<double> w_h;
  std::vector<double> w_vstar;
  std::vector<double> u_h;
  std::vector<double> v_h;
  std::vector<double> hs_norm_sq;
  std::vector<double> kappa;
  std::vector<double> dy_h;  // ||I u dt + G(u) dW||_H per step (only when requested)

  std::size_t size() const { return t.size(); }
};

struct PairRun {
  ErrorSeries series;
  Field u_final;
  Field v_final;
  std::vector<Field> u_states;  // only when keep_states
  std::vector<Field> v_states;
};

struct RunOptions {
  bool record_y = false;
  bool keep_states = false;
};

inline void record_sample(const Stepper& s, ErrorSeries& out, double t, const Field& u, const Field& v) {
  const ModelSpec& spec = s.model().spec();
  const Field w = u - v;
  out.t.push_back(t);
  out.w_h.push_back(norm(spec, w, Space::H));
  out.w_vstar.push_back(norm(spec, w, Space::Vstar));
  out.u_h.push_back(norm(spec, u, Space::H));
  out.v_h.push_back(norm(spec, v, Space::H));
  out.hs_norm_sq.push_back(s.noise().hs_norm_sq(u));
  out.kappa.push_back(s.model().kappa(u));
}

/// Runs the reference/assimilated pair; noise for this member is keyed by `seed`.
inline PairRun simulate_pair(const Stepper& s, const Field& u0, const Field& v0, std::uint64_t seed,
                             RunOptions opts = {}) {
  const ModelSpec& spec = s.model().spec();
  spec.require(u0);
  spec.require(v0);
  const StepConfig& cfg = s.config();
  const std::size_t n = cfg.steps();
  const CounterNormal rng(seed, Stream::noise);
  PairRun run;
  Field u = u0, v = v0;
  BlowUpGuard gu(cfg.blowup_guard), gv(cfg.blowup_guard);
  record_sample(s, run.series, 0.0, u, v);
  if (opts.record_y) run.series.dy_h.push_back(0.0);
  if (opts.keep_states) {
    run.u_states.push_back(u);
    run.v_states.push_back(v);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k + 1) * cfg.dt;
    const Field dw = s.increment(rng, k);
    Field vn = s.step_assimilated(u, v, dw);
    if (opts.record_y) {
      Field dy = cfg.dt * s.observation().apply(u);
      if (!dw.coeffs.empty()) dy = dy + s.noise().apply_G(u, dw);
      run.series.dy_h.push_back(norm(spec, dy, Space::H));
    }
    Field un = s.step_reference(u);
    gu.add(spec, un, cfg.dt, k + 1, t);
    gv.add(spec, vn, cfg.dt, k + 1, t);
    u = std::move(un);
    v = std::move(vn);
    record_sample(s, run.series, t, u, v);
    if (opts.keep_states) {
      run.u_states.push_back(u);
      run.v_states.push_back(v);
    }
  }
  run.u_final = u;
  run.v_final = v;
  return run;
}

/// Reference trajectory alone (states at every step, including t = 0).
inline std::vector<Field> reference_trajectory(const Stepper& s, const Field& u0) {
  const StepConfig& cfg = s.config();
  std::vector<Field> out{u0};
  BlowUpGuard guard(cfg.blowup_guard);
  Field u = u0;
  for (std::size_t k = 0; k < cfg.steps(); ++k) {
    u = s.step_reference(u);
    guard.add(s.model().spec(), u, cfg.dt, k + 1, static_cast<double>(k + 1) * cfg.dt);
    out.push_back(u);
  }
  return out;
}

/// Z(t) = mu int_0^t e^{-(t-s)A} G(u(s)) dW_s along a stored reference
/// trajectory, driven by the same noise stream as simulate_pair with `seed`.
inline std::vector<Field> stochastic_convolution(const Stepper& s, const std::vector<Field>& u_traj,
                                                 std::uint64_t seed) {
  if (u_traj.empty()) throw std::invalid_argument("reference trajectory is empty");
  const CounterNormal rng(seed, Stream::noise);
  std::vector<Field> z{s.model().zero()};
  for (std::size_t k = 0; k + 1 < u_traj.size(); ++k) {
    z.push_back(s.step_convolution(z.back(), u_traj[k], s.increment(rng, k)));
  }
  return z;
}

}  // namespace nudgelab
