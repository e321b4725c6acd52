#pragma once

// Monte Carlo ensembles, rate and floor estimation, sweeps and the
// assumption verifier.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "experiment.hpp"
#include "field.hpp"
#include "integrator.hpp"
#include "models.hpp"
#include "observation.hpp"
#include "rng.hpp"

namespace nudgelab {

// ---------------------------------------------------------------- ensembles

struct EnsembleResult {
  std::vector<double> times;
  std::vector<double> mean_w_h2;
  std::vector<double> mean_w_vstar2;
  std::vector<double> se_w_h2;
  std::vector<double> se_w_vstar2;
  int members = 0;
  int completed = 0;
  int blowups = 0;
  bool partial = false;
  std::vector<std::uint64_t> member_seeds;
  std::vector<int> blown_members;
  std::vector<std::string> blowup_messages;
  std::vector<std::optional<ErrorSeries>> member_series;  // empty slot: blown-up member
};

inline int resolve_threads(int requested, int members) {
  int t = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(t, 1, std::max(1, members));
}

/// Runs fn(i) for i in [0, count) on `threads` workers; each index is handled once.
template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// M members with seeds derive_member_seed(master_seed, m); aggregated in
/// member order, so the result does not depend on the schedule.
inline EnsembleResult run_ensemble(const Setup& setup, int members, std::uint64_t master_seed, int threads = 0,
                                   RunOptions opts = {}) {
  if (members < 1) throw std::invalid_argument("ensemble needs at least one member");
  EnsembleResult r;
  r.members = members;
  r.member_series.resize(static_cast<std::size_t>(members));
  r.blowup_messages.resize(static_cast<std::size_t>(members));
  for (int m = 0; m < members; ++m) r.member_seeds.push_back(derive_member_seed(master_seed, static_cast<std::uint64_t>(m)));
  opts.keep_states = false;
  parallel_for(members, resolve_threads(threads, members), [&](int m) {
    const auto idx = static_cast<std::size_t>(m);
    try {
      r.member_series[idx] = simulate_pair(setup.stepper, setup.u0, setup.v0, r.member_seeds[idx], opts).series;
    } catch (const BlowUpError& e) {
      r.blowup_messages[idx] = e.what();
    }
  });
  std::size_t len = 0;
  for (int m = 0; m < members; ++m) {
    const auto& s = r.member_series[static_cast<std::size_t>(m)];
    if (s) {
      ++r.completed;
      len = s->size();
      if (r.times.empty()) r.times = s->t;
    } else {
      ++r.blowups;
      r.blown_members.push_back(m);
    }
  }
  r.partial = r.blowups > 0;
  r.mean_w_h2.assign(len, 0.0);
  r.mean_w_vstar2.assign(len, 0.0);
  r.se_w_h2.assign(len, 0.0);
  r.se_w_vstar2.assign(len, 0.0);
  if (r.completed == 0) return r;
  const double M = r.completed;
  for (std::size_t i = 0; i < len; ++i) {
    double sh = 0.0, sv = 0.0;
    for (const auto& s : r.member_series) {
      if (!s) continue;
      sh += s->w_h[i] * s->w_h[i];
      sv += s->w_vstar[i] * s->w_vstar[i];
    }
    const double mh = sh / M, mv = sv / M;
    double qh = 0.0, qv = 0.0;
    for (const auto& s : r.member_series) {
      if (!s) continue;
      const double dh = s->w_h[i] * s->w_h[i] - mh;
      const double dv = s->w_vstar[i] * s->w_vstar[i] - mv;
      qh += dh * dh;
      qv += dv * dv;
    }
    r.mean_w_h2[i] = mh;
    r.mean_w_vstar2[i] = mv;
    if (r.completed > 1) {
      r.se_w_h2[i] = std::sqrt(qh / (M - 1.0) / M);
      r.se_w_vstar2[i] = std::sqrt(qv / (M - 1.0) / M);
    }
  }
  return r;
}

// ---------------------------------------------------------------- rate fits

class FitError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct RateFit {
  double gamma = 0.0;      // -slope of log(series)
  double intercept = 0.0;  // log value at t = 0
  double t0 = 0.0;
  double t1 = 0.0;
  double residual = 0.0;   // RMS of the log-residuals
  std::size_t samples = 0;
};

/// Least-squares line through log(values) over [t0, t1].
inline RateFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& values, double t0,
                              double t1) {
  if (times.size() != values.size()) throw std::invalid_argument("times and values differ in length");
  if (!(t1 > t0)) throw std::invalid_argument("fit window must have t1 > t0");
  if (times.empty() || t0 < times.front() - 1e-12 || t1 > times.back() + 1e-12) {
    throw std::invalid_argument("fit window lies outside the simulated horizon");
  }
  std::vector<double> x, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t0 - 1e-12 || times[i] > t1 + 1e-12) continue;
    if (!(values[i] > 0.0)) {
      throw FitError("nonpositive value at t = " + std::to_string(times[i]) +
                     " inside the fit window; shrink the window to end before this time");
    }
    x.push_back(times[i]);
    y.push_back(std::log(values[i]));
  }
  if (x.size() < 2) throw FitError("fit window holds fewer than 2 samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  RateFit fit;
  fit.gamma = -slope;
  fit.intercept = my - slope * mx;
  fit.t0 = t0;
  fit.t1 = t1;
  fit.samples = x.size();
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.intercept + slope * x[i]);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

/// [0.1, 0.9] * T_sync, T_sync = first time the series drops below max(10 floor, 1e-12).
inline std::pair<double, double> default_fit_window(const std::vector<double>& times, const std::vector<double>& values,
                                                    double floor = 0.0) {
  const double threshold = std::max(10.0 * floor, 1e-12);
  double t_sync = times.back();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (values[i] < threshold) {
      t_sync = times[i];
      break;
    }
  }
  return {0.1 * t_sync, 0.9 * t_sync};
}

inline RateFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& values, double floor = 0.0) {
  const auto [t0, t1] = default_fit_window(times, values, floor);
  return fit_decay_rate(times, values, t0, t1);
}

// ---------------------------------------------------------------- floors and tails

struct NoiseFloor {
  double floor = 0.0;
  double se = 0.0;
  std::size_t samples = 0;
};

inline std::vector<std::size_t> window_indices(const std::vector<double>& times, double t0, double t1) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= t0 - 1e-12 && times[i] <= t1 + 1e-12) idx.push_back(i);
  }
  if (idx.size() < 10) throw std::invalid_argument("noise-floor window holds fewer than 10 samples");
  return idx;
}

/// Tail time-average of a single mean series; SE from 10 batch means.
inline NoiseFloor estimate_noise_floor(const std::vector<double>& times, const std::vector<double>& mean_series,
                                       double t0, double t1) {
  const auto idx = window_indices(times, t0, t1);
  NoiseFloor nf;
  nf.samples = idx.size();
  double s = 0.0;
  for (std::size_t i : idx) s += mean_series[i];
  nf.floor = s / static_cast<double>(idx.size());
  const std::size_t batches = 10, per = idx.size() / batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    double bs = 0.0;
    for (std::size_t j = b * per; j < (b + 1) * per; ++j) bs += mean_series[idx[j]];
    means.push_back(bs / static_cast<double>(per));
  }
  const double mb = std::accumulate(means.begin(), means.end(), 0.0) / batches;
  double q = 0.0;
  for (double m : means) q += (m - mb) * (m - mb);
  nf.se = std::sqrt(q / (batches - 1.0) / batches);
  return nf;
}

/// Tail time-average of the ensemble mean of ||w||_H^2; SE across members.
inline NoiseFloor estimate_noise_floor(const EnsembleResult& r, double t0, double t1) {
  if (r.completed == 0) throw std::invalid_argument("ensemble has no completed members");
  const auto idx = window_indices(r.times, t0, t1);
  std::vector<double> per_member;
  for (const auto& s : r.member_series) {
    if (!s) continue;
    double acc = 0.0;
    for (std::size_t i : idx) acc += s->w_h[i] * s->w_h[i];
    per_member.push_back(acc / static_cast<double>(idx.size()));
  }
  NoiseFloor nf;
  nf.samples = idx.size() * per_member.size();
  const double M = static_cast<double>(per_member.size());
  nf.floor = std::accumulate(per_member.begin(), per_member.end(), 0.0) / M;
  if (per_member.size() > 1) {
    double q = 0.0;
    for (double v : per_member) q += (v - nf.floor) * (v - nf.floor);
    nf.se = std::sqrt(q / (M - 1.0) / M);
  }
  return nf;
}

/// max_{t >= N} ||w_t||_H on one path.
inline double tail_sup(const ErrorSeries& s, double N) {
  if (s.size() == 0) throw std::invalid_argument("empty error series");
  if (N > s.t.back()) throw std::invalid_argument("tail start N lies beyond the horizon");
  double m = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.t[i] >= N - 1e-12) m = std::max(m, s.w_h[i]);
  }
  return m;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------- constants

/// alpha-hat: min over single-mode probes of <A e, e> / ||e||_V^2, through apply_A and pairing.
inline double estimate_alpha(const ModelSpec& spec, std::size_t* probes = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  const int per_slot = directions_per_slot(spec);
  for (std::size_t m = 0; m < spec.modes.size(); ++m) {
    for (int trig = 0; trig < spec.trig_count; ++trig) {
      for (int d = 0; d < per_slot; ++d) {
        const Field e = basis_direction(spec, m, trig, d);
        const double v = norm(spec, e, Space::V);
        best = std::min(best, pairing(spec, apply_A(spec, e), e) / (v * v));
        ++count;
      }
    }
  }
  if (probes) *probes = count;
  return best;
}

/// eta0 from measured constants; +inf when nothing is left unobserved (C_I = 0).
inline double eta0_or_inf(double alpha, double c_i) {
  return c_i > 0.0 ? eta0(alpha, c_i) : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------- sweep

struct SweepCell {
  double mu = 0.0;
  double delta = 0.0;
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double fit_residual = std::numeric_limits<double>::quiet_NaN();
  double floor = std::numeric_limits<double>::quiet_NaN();
  double floor_se = std::numeric_limits<double>::quiet_NaN();
  int members = 0;
  int blowups = 0;
  bool invalid = false;
  double alpha_hat = 0.0;
  double c_i_hat = 0.0;
  double eta0_hat = 0.0;
  bool exceeds_eta0 = false;  // mu delta^2 > eta0_hat
  std::string error;
};

inline constexpr int kInterpSamples = 64;

/// One cell: ensemble, default-window rate fit and the tail floor over the last 20 % of the horizon.
inline SweepCell evaluate_cell(const RunConfig& cfg, int threads) {
  SweepCell cell;
  const RunConfig r = resolve(cfg);
  cell.mu = r.nudging.mu;
  cell.delta = *r.observation.delta;
  try {
    const Setup setup = build_setup(r);
    const ModelSpec& spec = setup.stepper.model().spec();
    cell.alpha_hat = estimate_alpha(spec);
    cell.c_i_hat = estimate_interp_constant(setup.stepper.observation(), kInterpSamples, r.ensemble.seed);
    cell.eta0_hat = eta0_or_inf(cell.alpha_hat, cell.c_i_hat);
    cell.exceeds_eta0 = cell.mu * cell.delta * cell.delta > cell.eta0_hat;
    const EnsembleResult e = run_ensemble(setup, r.ensemble.members, r.ensemble.seed, threads);
    cell.members = e.members;
    cell.blowups = e.blowups;
    cell.invalid = e.blowups * 10 > e.members;
    if (cell.invalid || e.completed == 0) {
      cell.error = "more than 10% of members blew up";
      return cell;
    }
    const double T = e.times.back();
    const NoiseFloor nf = estimate_noise_floor(e, 0.8 * T, T);
    cell.floor = nf.floor;
    cell.floor_se = nf.se;
    const RateFit fit = fit_decay_rate(e.times, e.mean_w_h2, nf.floor);
    cell.gamma = fit.gamma;
    cell.fit_residual = fit.residual;
  } catch (const std::exception& ex) {
    cell.error = ex.what();
  }
  return cell;
}

inline std::vector<SweepCell> sweep(const RunConfig& base, const std::vector<double>& mus,
                                    const std::vector<double>& deltas, int threads = 0) {
  if (mus.empty() || deltas.empty()) throw std::invalid_argument("sweep grid must have at least one mu and one delta");
  std::vector<SweepCell> cells;
  for (double delta : deltas) {
    for (double mu : mus) {
      RunConfig cfg = base;
      cfg.nudging.mu = mu;
      cfg.observation.delta = delta;
      cfg.observation.k.reset();
      if (!base.noise.kq) cfg.noise.kq.reset();
      cells.push_back(evaluate_cell(cfg, threads));
    }
  }
  return cells;
}

// ---------------------------------------------------------------- assumptions

struct AssumptionEntry {
  std::string name;
  double value = 0.0;
  double bound = std::numeric_limits<double>::quiet_NaN();
  std::optional<bool> pass;
  std::string method;
  std::size_t samples = 0;
};

struct AssumptionReport {
  double alpha_hat = 0.0;
  double c_i_hat = 0.0;
  double eta0_hat = 0.0;
  double m0 = 0.0;
  double m1 = 0.0;
  std::vector<AssumptionEntry> entries;

  bool all_pass() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass.value_or(true); });
  }
  const AssumptionEntry* find(const std::string& name) const {
    for (const auto& e : entries) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }
};

struct Envelope {
  double m0 = 0.0;
  double m1 = 0.0;
  std::size_t pairs = 0;
};

/// (M0, M1) minimizing M0 T + M1 subject to int_s^t kappa <= M0 (t - s) + M1 on
/// all pairs of a coarse grid (at most `grid_points` times). The optimum value is
/// I(0,T); among the optimal pairs the one with the largest M0 is returned, i.e.
/// the steepest envelope that is still optimal.
inline Envelope fit_kappa_envelope(const std::vector<double>& times, const std::vector<double>& kappa,
                                   std::size_t grid_points = 200) {
  if (times.size() != kappa.size() || times.size() < 2) throw std::invalid_argument("need a kappa series");
  std::vector<double> integral(times.size(), 0.0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    integral[i] = integral[i - 1] + 0.5 * (kappa[i] + kappa[i - 1]) * (times[i] - times[i - 1]);
  }
  const std::size_t stride = std::max<std::size_t>(1, (times.size() - 1) / (grid_points - 1));
  std::vector<std::size_t> grid;
  for (std::size_t i = 0; i < times.size(); i += stride) grid.push_back(i);
  if (grid.back() != times.size() - 1) grid.push_back(times.size() - 1);
  const double T = times.back() - times.front();
  const double total = integral.back();
  Envelope env;
  double m0 = total / T;
  for (std::size_t a = 0; a < grid.size(); ++a) {
    for (std::size_t b = a + 1; b < grid.size(); ++b) {
      const double len = times[grid[b]] - times[grid[a]];
      ++env.pairs;
      if (T - len <= 1e-12 * T) continue;
      m0 = std::min(m0, (total - (integral[grid[b]] - integral[grid[a]])) / (T - len));
    }
  }
  env.m0 = std::max(0.0, m0);
  env.m1 = std::max(0.0, total - env.m0 * T);
  return env;
}

struct A2Exponents {
  double beta = 0.75;
  double rho = 1.0;
};

inline A2Exponents a2_exponents(ModelId id) {
  if (id == ModelId::ac_weak || id == ModelId::ac_strong) return {2.0 / 3.0, 2.0};
  return {0.75, 1.0};
}

/// ||f||_{V_beta} with the interpolated weight w_V*^(1-beta) w_V^beta.
inline double norm_beta(const ModelSpec& spec, const Field& f, double beta) {
  spec.require(f);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double w = std::pow(spec.weight_vstar[i], 1.0 - beta) * std::pow(spec.weight_v[i], beta);
    s += w * w * f[i] * f[i];
  }
  return std::sqrt(s);
}

/// Copies the coefficients of f onto the matching modes of a finer model.
inline Field embed_field(const ModelSpec& from, const Field& f, const ModelSpec& to) {
  Field out = to.zero();
  for (std::size_t m = 0; m < from.modes.size(); ++m) {
    const auto it = std::find(to.modes.begin(), to.modes.end(), from.modes[m]);
    if (it == to.modes.end()) continue;
    const auto mt = static_cast<std::size_t>(it - to.modes.begin());
    for (int trig = 0; trig < from.trig_count; ++trig) {
      for (int c = 0; c < from.components; ++c) out[to.index(mt, trig, c)] = f[from.index(m, trig, c)];
    }
  }
  return out;
}

/// max over random pairs of ||F(u)-F(v)||_{V*} / ((1+||u||^rho+||v||^rho) ||u-v||) in V_beta.
inline double a2_ratio(const Model& model, const std::vector<std::pair<Field, Field>>& pairs) {
  const ModelSpec& spec = model.spec();
  const A2Exponents ex = a2_exponents(spec.id);
  double best = 0.0;
  for (const auto& [u, v] : pairs) {
    const double num = norm(spec, model.F(u) - model.F(v), Space::Vstar);
    const double den = (1.0 + std::pow(norm_beta(spec, u, ex.beta), ex.rho) + std::pow(norm_beta(spec, v, ex.beta), ex.rho)) *
                       norm_beta(spec, u - v, ex.beta);
    if (den > 0.0) best = std::max(best, num / den);
  }
  return best;
}

/// C^(1) constant declared for the one-sided growth bound <F(x),x> <= eps ||x||_V^2 + C1 ||x||_H^2.
inline double declared_growth_constant(ModelId id) {
  return (id == ModelId::ac_weak || id == ModelId::ac_strong) ? 1.0 : 0.0;
}

inline bool has_cancellation(ModelId id) {
  return id == ModelId::nse_weak || id == ModelId::nse_strong || id == ModelId::qg || id == ModelId::mhd;
}

struct VerifyOptions {
  int random_fields = 100;
  int coercivity_fields = 1000;
  int a2_pairs = 20;
  std::uint64_t seed = 11;
};

inline AssumptionReport verify_assumptions(const Setup& setup, const ErrorSeries& trajectory, VerifyOptions opt = {}) {
  const Stepper& st = setup.stepper;
  const Model& model = st.model();
  const ModelSpec& spec = model.spec();
  const ObservationOperator& obs = st.observation();
  AssumptionReport rep;

  // coercivity
  std::size_t probes = 0;
  rep.alpha_hat = estimate_alpha(spec, &probes);
  rep.entries.push_back({"alpha_hat", rep.alpha_hat, spec.alpha, std::abs(rep.alpha_hat - spec.alpha) <= 1e-9 * spec.alpha,
                         "min single-mode Rayleigh quotient <Ae,e>/||e||_V^2 vs declared alpha", probes});
  double coerc = std::numeric_limits<double>::infinity();
  for (int s = 0; s < opt.coercivity_fields; ++s) {
    const Field f = random_field(spec, opt.seed, 1000 + static_cast<std::uint64_t>(s), 1.0, 0.0);
    const double v = norm(spec, f, Space::V);
    coerc = std::min(coerc, pairing(spec, apply_A(spec, f), f) / (v * v));
  }
  rep.entries.push_back({"coercivity_min_ratio", coerc, spec.alpha, coerc >= spec.alpha * (1.0 - 1e-9),
                         "min <Af,f>/||f||_V^2 over random fields", static_cast<std::size_t>(opt.coercivity_fields)});

  // Interpolation bound and threshold
  rep.c_i_hat = estimate_interp_constant(obs, kInterpSamples, opt.seed);
  rep.eta0_hat = eta0_or_inf(rep.alpha_hat, rep.c_i_hat);
  rep.entries.push_back({"C_I_hat", rep.c_i_hat, std::numeric_limits<double>::quiet_NaN(), std::nullopt,
                         "max ||f - I f||_V* / (delta ||f||_H) over single-mode probes and random fields",
                         spec.dof() + static_cast<std::size_t>(kInterpSamples)});
  const double mud2 = st.config().mu * obs.delta() * obs.delta();
  rep.entries.push_back({"mu_delta2_vs_eta0", mud2, rep.eta0_hat, mud2 <= rep.eta0_hat,
                         "mu delta^2 <= eta0_hat = 2 alpha_hat / C_I_hat^2", 1});

  // growth budget: eps_hat = sup (<F(x),x> - C1 ||x||_H^2)_+ / ||x||_V^2
  const double c1 = declared_growth_constant(spec.id);
  double eps = 0.0;
  double cancel = 0.0;
  for (int s = 0; s < opt.random_fields; ++s) {
    const double amp = 0.25 * (1 + s % 8);
    const Field x = random_field(spec, opt.seed, 5000 + static_cast<std::uint64_t>(s), amp, 1.0);
    const Field fx = model.F(x);
    const double p = pairing(spec, fx, x);
    const double h = norm(spec, x, Space::H), v = norm(spec, x, Space::V);
    eps = std::max(eps, std::max(0.0, p - c1 * h * h) / (v * v));
    if (has_cancellation(spec.id)) {
      const double scale = norm(spec, fx, Space::Vstar) * v;
      if (scale > 0.0) cancel = std::max(cancel, std::abs(p) / scale);
    }
  }
  rep.entries.push_back({"growth_eps_hat", eps, spec.alpha / 4.0, eps < spec.alpha / 4.0,
                         "sum eps_j < alpha/4 budget; eps_hat = sup (<F(x),x> - C1 ||x||_H^2)_+ / ||x||_V^2, C1 = " +
                             std::to_string(c1),
                         static_cast<std::size_t>(opt.random_fields)});
  if (has_cancellation(spec.id)) {
    rep.entries.push_back({"cancellation_residual", cancel, 1e-10, cancel <= 1e-10,
                           "max |<F(x),x>| / (||F(x)||_V* ||x||_V) over random fields",
                           static_cast<std::size_t>(opt.random_fields)});
  }

  // boundedness at N and 2N
  {
    const Model fine(spec.id, 2 * spec.grid, spec.nu, spec.norms);
    std::vector<std::pair<Field, Field>> coarse_pairs, fine_pairs;
    for (int s = 0; s < opt.a2_pairs; ++s) {
      const Field u = random_field(spec, opt.seed, 9000 + 2 * static_cast<std::uint64_t>(s), 1.0, 1.0);
      const Field v = random_field(spec, opt.seed, 9001 + 2 * static_cast<std::uint64_t>(s), 1.0, 1.0);
      coarse_pairs.emplace_back(u, v);
      fine_pairs.emplace_back(embed_field(spec, u, fine.spec()), embed_field(spec, v, fine.spec()));
    }
    const double rn = a2_ratio(model, coarse_pairs);
    const double r2n = a2_ratio(fine, fine_pairs);
    const double growth = (rn > 0.0 && r2n > 0.0) ? std::max(rn / r2n, r2n / rn) : 1.0;
    const A2Exponents ex = a2_exponents(spec.id);
    rep.entries.push_back({"bound_ratio_N", rn, std::numeric_limits<double>::quiet_NaN(), std::nullopt,
                           "max ||F(u)-F(v)||_V* / ((1+||u||^rho+||v||^rho)||u-v||) in V_beta, beta = " +
                               std::to_string(ex.beta) + ", rho = " + std::to_string(ex.rho),
                           static_cast<std::size_t>(opt.a2_pairs)});
    rep.entries.push_back({"bound_ratio_2N", r2n, std::numeric_limits<double>::quiet_NaN(), std::nullopt,
                           "same ratio on the 2N truncation", static_cast<std::size_t>(opt.a2_pairs)});
    rep.entries.push_back({"bound_ratio_change", growth, 1.5, growth <= 1.5, "max(r_N/r_2N, r_2N/r_N)",
                           static_cast<std::size_t>(2 * opt.a2_pairs)});
  }

  // envelope of int kappa along the reference trajectory
  const Envelope env = fit_kappa_envelope(trajectory.t, trajectory.kappa);
  rep.m0 = env.m0;
  rep.m1 = env.m1;
  rep.entries.push_back({"kappa_M0", env.m0, std::numeric_limits<double>::quiet_NaN(), std::nullopt,
                         "optimal envelope of int_s^t kappa <= M0 (t-s) + M1 (largest optimal M0)", env.pairs});
  rep.entries.push_back({"kappa_M1", env.m1, std::numeric_limits<double>::quiet_NaN(), std::nullopt,
                         "same envelope", env.pairs});
  if (has_cancellation(spec.id) && spec.id != ModelId::nse_strong) {
    const double T = trajectory.t.back() - trajectory.t.front();
    const double bound = 1e-2 * env.m1 / T;
    rep.entries.push_back({"kappa_M0_vanishes", env.m0, bound, env.m0 <= bound,
                           "M0 <= 1e-2 M1 / T (energy-bounded kappa)", env.pairs});
  }
  return rep;
}

// ---------------------------------------------------------------- stochastic convolution

struct ConvolutionProbe {
  std::size_t direction = 0;  // index into the QSpec
  double t = 0.0;
  double sample_var = 0.0;    // mean over paths of <Z(t), e_j>_H^2
  double se = 0.0;
  double theory = std::numeric_limits<double>::quiet_NaN();  // additive kind only
  double z_score = std::numeric_limits<double>::quiet_NaN();
};

struct ConvolutionCheck {
  int paths = 0;
  std::vector<ConvolutionProbe> probes;
  double sup_mean_T = 0.0;     // E sup_{t<=T} ||Z||_H^2
  double sup_mean_2T = 0.0;
  double hs_integral_T = 0.0;  // int_0^T ||G(u)||^2_{L_2^0} dt
  double hs_integral_2T = 0.0;
  double c_hat_T = 0.0;        // E sup ||Z||^2 / (mu^2 int ||G||^2)
  double c_hat_2T = 0.0;
  bool silent = false;
};

/// E <Z(t), e_j>^2 = mu^2 sigma_delta^2 lambda_j^2 (1 - e^{-2 a t}) / (2 a) for additive noise.
inline double ou_variance(double mu, double sigma_delta, double lambda, double a, double t) {
  return mu * mu * sigma_delta * sigma_delta * lambda * lambda * (1.0 - std::exp(-2.0 * a * t)) / (2.0 * a);
}

/// Monte Carlo over `paths` convolution paths on [0, 2T] (T = the config horizon).
/// `probe_directions` index the noise directions, `probe_times` must lie in (0, T].
inline ConvolutionCheck convolution_check(const Setup& setup, int paths, const std::vector<std::size_t>& probe_directions,
                                          const std::vector<double>& probe_times, std::uint64_t seed, int threads = 0) {
  if (paths < 2) throw std::invalid_argument("convolution check needs at least 2 paths");
  StepConfig cfg = setup.stepper.config();
  const double T = cfg.t_end;
  cfg.t_end = 2.0 * T;
  const Stepper st(setup.stepper.model(), setup.stepper.observation(), setup.stepper.noise(), cfg);
  const ModelSpec& spec = st.model().spec();
  const NoiseModel& noise = st.noise();
  const QSpec& q = noise.q();
  for (std::size_t d : probe_directions) {
    if (d >= q.rank()) throw std::invalid_argument("probe direction outside the noise rank");
  }
  std::vector<std::size_t> probe_steps;
  for (double t : probe_times) {
    if (!(t > 0.0) || t > T + 1e-12) throw std::invalid_argument("probe times must lie in (0, T]");
    probe_steps.push_back(static_cast<std::size_t>(std::llround(t / cfg.dt)));
  }
  const std::size_t n_half = static_cast<std::size_t>(std::llround(T / cfg.dt));
  const auto u_traj = reference_trajectory(st, setup.u0);

  ConvolutionCheck out;
  out.paths = paths;
  out.silent = noise.silent();
  for (std::size_t k = 0; k + 1 < u_traj.size(); ++k) {
    const double g = noise.hs_norm_sq(u_traj[k]) * cfg.dt;
    if (k < n_half) out.hs_integral_T += g;
    out.hs_integral_2T += g;
  }

  const std::size_t np = probe_directions.size() * probe_steps.size();
  std::vector<std::vector<double>> coords(static_cast<std::size_t>(paths), std::vector<double>(np, 0.0));
  std::vector<double> sup_T(static_cast<std::size_t>(paths), 0.0), sup_2T(static_cast<std::size_t>(paths), 0.0);
  const auto coordinate = [&](const Field& z, std::size_t j) {
    const Field e = q.direction_field(spec, j);
    return inner_h(spec, z, e);
  };
  parallel_for(paths, resolve_threads(threads, paths), [&](int p) {
    const auto pi = static_cast<std::size_t>(p);
    const CounterNormal rng(derive_member_seed(seed, pi), Stream::noise);
    Field z = spec.zero();
    for (std::size_t k = 0; k + 1 < u_traj.size(); ++k) {
      z = st.step_convolution(z, u_traj[k], st.increment(rng, k));
      const double h = norm(spec, z, Space::H);
      if (k + 1 <= n_half) sup_T[pi] = std::max(sup_T[pi], h * h);
      sup_2T[pi] = std::max(sup_2T[pi], h * h);
      for (std::size_t a = 0; a < probe_steps.size(); ++a) {
        if (probe_steps[a] != k + 1) continue;
        for (std::size_t b = 0; b < probe_directions.size(); ++b) {
          const double c = coordinate(z, probe_directions[b]);
          coords[pi][a * probe_directions.size() + b] = c * c;
        }
      }
    }
  });

  const double M = paths;
  for (std::size_t a = 0; a < probe_steps.size(); ++a) {
    for (std::size_t b = 0; b < probe_directions.size(); ++b) {
      const std::size_t idx = a * probe_directions.size() + b;
      double s = 0.0;
      for (const auto& c : coords) s += c[idx];
      const double mean = s / M;
      double qd = 0.0;
      for (const auto& c : coords) qd += (c[idx] - mean) * (c[idx] - mean);
      ConvolutionProbe pr;
      pr.direction = probe_directions[b];
      pr.t = static_cast<double>(probe_steps[a]) * cfg.dt;
      pr.sample_var = mean;
      pr.se = std::sqrt(qd / (M - 1.0) / M);
      if (noise.coefficient().kind == NoiseKind::additive) {
        const auto& dir = q.directions[pr.direction];
        const double a_sym = spec.a_symbol[dir.index[0]];
        pr.theory = ou_variance(cfg.mu, noise.sigma_delta(), dir.lambda, a_sym, pr.t);
        pr.z_score = pr.se > 0.0 ? (pr.sample_var - pr.theory) / pr.se : (pr.sample_var == pr.theory ? 0.0 : INFINITY);
      }
      out.probes.push_back(pr);
    }
  }
  out.sup_mean_T = std::accumulate(sup_T.begin(), sup_T.end(), 0.0) / M;
  out.sup_mean_2T = std::accumulate(sup_2T.begin(), sup_2T.end(), 0.0) / M;
  const double mu2 = cfg.mu * cfg.mu;
  out.c_hat_T = out.hs_integral_T > 0.0 && mu2 > 0.0 ? out.sup_mean_T / (mu2 * out.hs_integral_T) : 0.0;
  out.c_hat_2T = out.hs_integral_2T > 0.0 && mu2 > 0.0 ? out.sup_mean_2T / (mu2 * out.hs_integral_2T) : 0.0;
  return out;
}

}  // namespace nudgelab
