#pragma once

// Run configuration and its assembly into a ready-to-step experiment.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "field.hpp"
#include "integrator.hpp"
#include "models.hpp"
#include "noise.hpp"
#include "observation.hpp"
#include "rng.hpp"

namespace nudgelab {

struct RunConfig {
  struct ModelSection {
    ModelId id = ModelId::ac_weak;
    int n = 0;  // 0: 128 on (0,1), 48 on the torus
    double nu = 1.0;
    NormConvention norms = NormConvention::homogeneous;
  } model;
  struct ObservationSection {
    ObservationKind kind = ObservationKind::modal;
    std::optional<double> delta;  // default: modal cutoff 8
    std::optional<int> k;         // alternative: integer modal cutoff
  } observation;
  struct NoiseSection {
    NoiseKind kind = NoiseKind::additive;
    double sigma = 0.0;
    double p = 0.0;
    std::optional<double> exponent;  // default 1.0 (1D) / 1.5 (2D)
    std::optional<int> kq;           // default K(delta)
  } noise;
  struct NudgingSection {
    double mu = 50.0;
    bool implicit = false;
  } nudging;
  struct TimeSection {
    double dt = 1e-3;
    double t_end = 4.0;
    int stride = 10;
    double blowup_guard = 1e12;
  } time;
  struct EnsembleSection {
    int members = 1;
    std::uint64_t seed = 1;
    int threads = 0;  // 0: hardware concurrency
  } ensemble;
  struct InitialSection {
    std::uint64_t seed = 7;
    double u_norm = 1.0;
    double w_norm = 1.0;
    double slope = 1.0;
    bool synchronized = false;
  } initial;
  struct OutputSection {
    std::string dir;
    bool emit_y = false;
  } output;
  struct SweepSection {
    std::vector<double> mu;
    std::vector<double> delta;
  } sweep;
};

inline int default_grid(ModelId id) { return is_sine_model(id) ? 128 : 48; }

/// Fills every model-dependent default with its concrete value.
inline RunConfig resolve(RunConfig cfg) {
  if (cfg.model.n == 0) cfg.model.n = default_grid(cfg.model.id);
  const ModelSpec spec = make_model_spec(cfg.model.id, cfg.model.n, cfg.model.nu, cfg.model.norms);
  if (cfg.observation.k) {
    cfg.observation.delta = delta_for_cutoff(spec, *cfg.observation.k);
    cfg.observation.k.reset();
  }
  if (!cfg.observation.delta) cfg.observation.delta = delta_for_cutoff(spec, 8);
  if (!cfg.noise.exponent) cfg.noise.exponent = default_noise_exponent(spec);
  if (!cfg.noise.kq) cfg.noise.kq = std::min(modal_cutoff(spec, *cfg.observation.delta), spec.band);
  return cfg;
}

/// Constraint violations of a config (all of them, not only the first).
inline std::vector<std::string> validate(const RunConfig& cfg) {
  std::vector<std::string> errors;
  const auto check = [&](bool ok, const std::string& message) {
    if (!ok) errors.push_back(message);
  };
  check(cfg.model.n >= 0, "model.n must be >= 0");
  check(cfg.model.nu > 0.0, "model.nu must be > 0");
  if (cfg.observation.delta) check(*cfg.observation.delta > 0.0, "observation.delta must be > 0");
  if (cfg.observation.k) check(*cfg.observation.k >= 1, "observation.k must be >= 1");
  check(!(cfg.observation.delta && cfg.observation.k), "observation.delta and observation.k are mutually exclusive");
  check(cfg.noise.sigma >= 0.0, "noise.sigma must be >= 0");
  check(cfg.noise.p == 0.0 || cfg.noise.p == 0.5, "noise.p must be 0 or 0.5");
  if (cfg.noise.exponent) check(*cfg.noise.exponent >= 0.0, "noise.exponent must be >= 0");
  if (cfg.noise.kq) check(*cfg.noise.kq >= 0, "noise.kq must be >= 0");
  check(cfg.nudging.mu >= 0.0, "mu must be >= 0");
  check(!(cfg.nudging.implicit && cfg.observation.kind != ObservationKind::modal),
        "nudging.implicit requires observation.kind = modal");
  check(cfg.time.dt > 0.0, "time.dt must be > 0");
  check(cfg.time.t_end >= cfg.time.dt, "time.t_end must be >= time.dt");
  check(cfg.time.stride >= 1, "time.stride must be >= 1");
  check(cfg.time.blowup_guard > 0.0, "time.blowup_guard must be > 0");
  check(cfg.ensemble.members >= 1, "ensemble.members must be >= 1");
  check(cfg.ensemble.threads >= 0, "ensemble.threads must be >= 0");
  check(cfg.initial.u_norm >= 0.0, "initial.u_norm must be >= 0");
  check(cfg.initial.w_norm >= 0.0, "initial.w_norm must be >= 0");
  for (double mu : cfg.sweep.mu) check(mu >= 0.0, "sweep.mu entries must be >= 0");
  for (double d : cfg.sweep.delta) check(d > 0.0, "sweep.delta entries must be > 0");
  if (!errors.empty()) return errors;
  // Constraints that need the model itself.
  try {
    const RunConfig r = resolve(cfg);
    const ModelSpec spec = make_model_spec(r.model.id, r.model.n, r.model.nu, r.model.norms);
    const ObservationOperator op(spec, r.observation.kind, *r.observation.delta);
    if (r.observation.kind == ObservationKind::modal && op.cutoff() < 1) {
      errors.push_back("observation.delta too large: no mode is observed");
    }
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }
  return errors;
}

/// Random field with spectral slope (1+|k|^2)^(-slope) and the given H norm.
inline Field random_field(const ModelSpec& spec, std::uint64_t seed, std::uint64_t tag, double h_norm, double slope) {
  const CounterNormal rng(seed, Stream::initial);
  Field f = spec.zero();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double k = spec.wavenumber(spec.mode_of(i));
    f[i] = rng.normal(tag, static_cast<std::uint32_t>(i)) * std::pow(1.0 + k * k, -slope) / spec.weight_h[i];
  }
  f = project_solenoidal(spec, f);
  const double h = norm(spec, f, Space::H);
  return h > 0.0 ? (h_norm / h) * f : f;
}

struct Setup {
  Stepper stepper;
  Field u0;
  Field v0;
};

inline Setup build_setup(const RunConfig& raw) {
  const RunConfig cfg = resolve(raw);
  const Model model(cfg.model.id, cfg.model.n, cfg.model.nu, cfg.model.norms);
  const ModelSpec& spec = model.spec();
  const double delta = *cfg.observation.delta;
  const ObservationOperator obs(spec, cfg.observation.kind, delta);
  NoiseCoefficient coef;
  coef.kind = cfg.noise.kind;
  coef.sigma = cfg.noise.sigma;
  coef.p = cfg.noise.p;
  const NoiseModel noise(model, coef, make_qspec(spec, *cfg.noise.kq, *cfg.noise.exponent), delta);
  StepConfig step;
  step.dt = cfg.time.dt;
  step.t_end = cfg.time.t_end;
  step.mu = cfg.nudging.mu;
  step.implicit_nudging = cfg.nudging.implicit;
  step.blowup_guard = cfg.time.blowup_guard;
  step.stride = cfg.time.stride;
  Field u0 = random_field(spec, cfg.initial.seed, 0, cfg.initial.u_norm, cfg.initial.slope);
  Field v0 = u0;
  if (!cfg.initial.synchronized) {
    v0 = u0 - random_field(spec, cfg.initial.seed, 1, cfg.initial.w_norm, cfg.initial.slope);
  }
  return Setup{Stepper(model, obs, noise, step), std::move(u0), std::move(v0)};
}

}  // namespace nudgelab
