// Acceptance gate: one PASS/FAIL line per criterion; nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nudgelab/nudgelab.hpp"
#include "nudgelab/cli.hpp"
#include "oracles.hpp"

using namespace nudgelab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

RunConfig base(ModelId id, int n) {
  RunConfig c;
  c.model.id = id;
  c.model.n = n;
  return c;
}

// ---------------------------------------------------------------- 1

Outcome zero_noise_synchronization() {
  std::ostringstream d;
  bool pass = true;
  const auto check = [&](const char* label, RunConfig cfg, double bound) {
    const auto t0 = std::chrono::steady_clock::now();
    const Setup s = build_setup(cfg);
    const PairRun run = simulate_pair(s.stepper, s.u0, s.v0, derive_member_seed(cfg.ensemble.seed, 0));
    const auto& w = run.series.w_h;
    std::vector<double> w2(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) w2[i] = w[i] * w[i];
    const RateFit fit = fit_decay_rate(run.series.t, w2);
    const double ratio = w.back() / w.front();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = fit.gamma > 0.0 && ratio <= bound;
    pass = pass && ok;
    d << label << ": gamma_fit " << num(fit.gamma) << ", |w(T)|/|w(0)| " << num(ratio) << " (<= " << num(bound) << "), "
      << num(secs) << " s; ";
  };
  RunConfig ac = base(ModelId::ac_weak, 128);
  ac.observation.k = 8;
  ac.nudging.mu = 50;
  ac.time.dt = 1e-3;
  ac.time.t_end = 4;
  check("weak AC", ac, 1e-6);
  RunConfig acs = ac;
  acs.model.id = ModelId::ac_strong;
  check("strong AC", acs, 1e-4);
  RunConfig ns = base(ModelId::nse_strong, 64);
  ns.observation.k = 8;
  ns.nudging.mu = 100;
  ns.time.dt = 1e-3;
  ns.time.t_end = 2;
  check("strong NSE 64^2", ns, 1e-4);
  return {pass, d.str()};
}

// ---------------------------------------------------------------- 2

Outcome noise_floor_scaling() {
  RunConfig cfg = base(ModelId::ac_weak, 128);
  cfg.observation.k = 8;
  cfg.nudging.mu = 50;
  cfg.time.dt = 1e-3;
  cfg.time.t_end = 4;
  cfg.noise.kind = NoiseKind::additive;
  cfg.ensemble.members = 64;
  const auto floor_of = [&](double sigma) {
    RunConfig c = cfg;
    c.noise.sigma = sigma;
    const EnsembleResult r = run_ensemble(build_setup(c), c.ensemble.members, c.ensemble.seed);
    return estimate_noise_floor(r, 0.8 * c.time.t_end, c.time.t_end);
  };
  const double sigma = 0.01;
  const NoiseFloor f0 = floor_of(0.0), f1 = floor_of(sigma), f2 = floor_of(2 * sigma);
  const double ratio = f2.floor / f1.floor;
  const bool pass = ratio >= 3.0 && ratio <= 5.0 && f1.floor >= 1e3 * f0.floor;
  return {pass, "floor(sigma) " + num(f1.floor) + " +- " + num(f1.se) + ", floor(2 sigma) " + num(f2.floor) +
                    ", ratio " + num(ratio) + " (in [3,5]), floor(0) " + num(f0.floor)};
}

// ---------------------------------------------------------------- 3

Outcome vstar_ordering() {
  std::size_t samples = 0, violations = 0;
  for (ModelId id : {ModelId::heat, ModelId::ac_weak, ModelId::ac_strong, ModelId::nse_weak, ModelId::nse_strong,
                     ModelId::qg, ModelId::mhd}) {
    for (NormConvention nc : {NormConvention::homogeneous, NormConvention::inhomogeneous}) {
      if (nc == NormConvention::inhomogeneous && is_strong_model(id)) continue;
      RunConfig cfg = base(id, is_sine_model(id) ? 64 : 24);
      cfg.model.norms = nc;
      cfg.noise.sigma = 0.2;
      cfg.observation.k = 4;
      cfg.nudging.mu = 20;
      cfg.time.t_end = 0.5;
      cfg.ensemble.members = 4;
      const Setup s = build_setup(cfg);
      const double c_emb = s.stepper.model().spec().embedding_vstar_h();
      const EnsembleResult r = run_ensemble(s, cfg.ensemble.members, 3);
      for (const auto& m : r.member_series) {
        if (!m) continue;
        for (std::size_t i = 0; i < m->size(); ++i) {
          ++samples;
          if (m->w_vstar[i] > c_emb * m->w_h[i] * (1.0 + 1e-12)) ++violations;
        }
      }
    }
  }
  return {violations == 0 && samples > 0,
          std::to_string(violations) + " violations over " + std::to_string(samples) + " sampled states"};
}

// ---------------------------------------------------------------- 4

Outcome tail_convergence() {
  RunConfig cfg = base(ModelId::ac_strong, 128);
  cfg.observation.k = 8;
  cfg.nudging.mu = 50;
  cfg.time.dt = 1e-3;
  cfg.time.t_end = 12;
  cfg.initial.u_norm = 0.5;
  cfg.noise.kind = NoiseKind::state_scaled;
  cfg.noise.sigma = 0.5;
  cfg.ensemble.members = 32;
  const Setup s = build_setup(cfg);
  const EnsembleResult r = run_ensemble(s, cfg.ensemble.members, cfg.ensemble.seed);
  std::vector<double> med;
  for (double N : {2.0, 4.0, 8.0}) {
    std::vector<double> v;
    for (const auto& m : r.member_series) {
      if (m) v.push_back(tail_sup(*m, N));
    }
    med.push_back(median(v));
  }
  const bool monotone = med[1] < med[0] && med[2] < med[1];
  const double ratio = med[2] / med[0];
  const bool pass = r.blowups == 0 && monotone && ratio <= 0.5;
  return {pass, "median tail_sup at N=2,4,8: " + num(med[0]) + ", " + num(med[1]) + ", " + num(med[2]) +
                    "; ratio(8)/(2) " + num(ratio) + ", blow-ups " + std::to_string(r.blowups)};
}

// ---------------------------------------------------------------- 5

Outcome convolution_isometry() {
  RunConfig cfg = base(ModelId::heat, 16);
  cfg.noise.kind = NoiseKind::additive;
  cfg.noise.sigma = 1.0;
  cfg.noise.kq = 3;
  cfg.nudging.mu = 2.0;
  cfg.time.dt = 1e-5;
  cfg.time.t_end = 0.1;
  const Setup s = build_setup(cfg);
  const QSpec& q = s.stepper.noise().q();
  const ModelSpec& spec = s.stepper.model().spec();
  const ConvolutionCheck chk = convolution_check(s, 10000, {0, 1, 2}, {0.01, 0.03, 0.1}, 2024);
  double worst = 0.0;
  for (const auto& p : chk.probes) {
    const auto& dir = q.directions[p.direction];
    const double a = spec.a_symbol[dir.index[0]];
    const double theory = oracle::ou_variance(cfg.nudging.mu * cfg.noise.sigma * dir.lambda, a, p.t);
    worst = std::max(worst, std::abs(p.sample_var - theory) / p.se);
  }
  const bool stable = std::isfinite(chk.c_hat_T) && std::isfinite(chk.c_hat_2T) && chk.c_hat_T > 0.0;
  return {worst <= 3.0 && chk.probes.size() == 9 && stable,
          "max |var - theory| / se over 9 probes = " + num(worst) + " (<= 3), 10^4 paths; c_hat(T) " +
              num(chk.c_hat_T) + ", c_hat(2T) " + num(chk.c_hat_2T)};
}

// ---------------------------------------------------------------- 6

Outcome cancellation() {
  std::ostringstream d;
  bool pass = true;
  for (ModelId id : {ModelId::nse_weak, ModelId::qg, ModelId::mhd, ModelId::nse_strong}) {
    const Model m(id, 32);
    const ModelSpec& s = m.spec();
    double worst = 0.0;
    for (std::uint64_t t = 0; t < 100; ++t) {
      const Field u = random_field(s, 77, t, 0.5 + 0.05 * static_cast<double>(t), 0.5);
      const Field f = m.F(u);
      worst = std::max(worst, std::abs(pairing(s, f, u)) / (norm(s, f, Space::Vstar) * norm(s, u, Space::V)));
    }
    pass = pass && worst <= 1e-10;
    d << to_string(id) << " " << num(worst) << "; ";
  }
  return {pass, "max relative residual over 100 fields: " + d.str()};
}

// ---------------------------------------------------------------- 7

Outcome oracle_equivalence() {
  std::ostringstream d;
  bool pass = true;
  const auto compare = [&](const char* label, double err, double bound) {
    pass = pass && err <= bound;
    d << label << " " << num(err) << "; ";
  };
  for (ModelId id : {ModelId::ac_weak, ModelId::ac_strong}) {
    const Model m(id, 16);
    double worst = 0.0;
    for (std::uint64_t t = 0; t < 5; ++t) {
      const Field u = random_field(m.spec(), 5, t, 2.0, 0.2);
      Field ref = m.zero();
      ref.coeffs = oracle::allen_cahn(u.coeffs);
      worst = std::max(worst, oracle::rel_diff(m.F(u), ref));
    }
    compare(std::string(to_string(id)).c_str(), worst, 1e-12);
  }
  const auto torus = [&](ModelId id, const std::function<Field(const ModelSpec&, const Field&)>& ref) {
    const Model m(id, 26);
    double worst = 0.0;
    for (std::uint64_t t = 0; t < 3; ++t) {
      const Field u = random_field(m.spec(), 6, t, 1.0, 0.2);
      worst = std::max(worst, oracle::rel_diff(m.F(u), ref(m.spec(), u)));
    }
    compare(std::string(to_string(id)).c_str(), worst, 1e-12);
  };
  torus(ModelId::nse_weak, oracle::navier_stokes);
  torus(ModelId::nse_strong, oracle::navier_stokes);
  torus(ModelId::qg, oracle::quasi_geostrophic);
  torus(ModelId::mhd, oracle::mhd);

  // IMEX at dt against dt/100 on the 8-mode sine truncation.
  RunConfig cfg = base(ModelId::ac_weak, 16);
  cfg.model.nu = 0.1;
  cfg.nudging.mu = 0.0;
  cfg.time.t_end = 1.0;
  const auto traj = [&](double dt) {
    RunConfig c = cfg;
    c.time.dt = dt;
    const Setup s = build_setup(c);
    return reference_trajectory(s.stepper, s.u0);
  };
  const auto coarse = traj(1e-4), fine = traj(1e-6);
  double worst = 0.0;
  for (std::size_t k = 0; k < coarse.size(); k += 10) worst = std::max(worst, oracle::rel_diff(coarse[k], fine[100 * k]));
  compare("IMEX dt vs dt/100", worst, 1e-3);
  return {pass, d.str()};
}

// ---------------------------------------------------------------- 8

Outcome threshold_formula() {
  bool exact = true;
  for (double a : {0.1, 1.0, 0.9079}) {
    for (double c : {0.25, 1.0, 3.7}) exact = exact && eta0(a, c) == 2.0 * a / (c * c);
  }
  RunConfig cfg = base(ModelId::ac_weak, 64);
  cfg.time.t_end = 0.2;
  const std::vector<double> mus{1.0, 100.0, 3000.0}, deltas{0.5, 0.125, 1.0 / 32};
  const auto cells = sweep(cfg, mus, deltas);
  std::ostringstream csv;
  write_sweep_csv(csv, cells);
  std::size_t flagged = 0, mismatched = 0;
  for (const auto& c : cells) {
    const double eta = 2.0 * c.alpha_hat / (c.c_i_hat * c.c_i_hat);
    const bool should = c.mu * c.delta * c.delta > eta;
    if (should != c.exceeds_eta0) ++mismatched;
    flagged += c.exceeds_eta0;
  }
  // The CSV carries the same flags.
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  std::size_t csv_flags = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cols.push_back(cell);
    if (cols.size() > 13 && cols[13] == "1") ++csv_flags;
  }
  const bool pass = exact && mismatched == 0 && flagged > 0 && flagged < cells.size() && csv_flags == flagged;
  return {pass, std::string("eta0 exact: ") + (exact ? "yes" : "no") + "; " + std::to_string(flagged) + " of " +
                    std::to_string(cells.size()) + " cells flagged, " + std::to_string(mismatched) + " mismatches"};
}

// ---------------------------------------------------------------- 9

Outcome assumption_verifier() {
  std::ostringstream d;
  bool pass = true;
  VerifyOptions opt;
  opt.coercivity_fields = 100;
  opt.random_fields = 30;
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    RunConfig cfg = base(ModelId::nse_weak, 32);
    cfg.model.nu = 0.5;
    cfg.observation.k = 4;
    cfg.time.t_end = 4.0;
    cfg.initial.seed = seed;
    const Setup s = build_setup(cfg);
    const PairRun run = simulate_pair(s.stepper, s.u0, s.u0, 0);
    const AssumptionReport rep = verify_assumptions(s, run.series, opt);
    const double T = run.series.t.back();
    const bool ok = rep.m0 <= 1e-2 * rep.m1 / T && std::abs(rep.alpha_hat - s.stepper.model().spec().alpha) <= 1e-9;
    pass = pass && ok;
    d << "nse seed " << seed << ": M0 " << num(rep.m0) << " vs 1e-2 M1/T " << num(1e-2 * rep.m1 / T) << "; ";
  }
  {
    RunConfig cfg = base(ModelId::heat, 64);
    cfg.time.t_end = 1.0;
    const Setup s = build_setup(cfg);
    const PairRun run = simulate_pair(s.stepper, s.u0, s.u0, 0);
    const AssumptionReport rep = verify_assumptions(s, run.series, opt);
    pass = pass && rep.m0 == 0.0 && rep.m1 == 0.0;
    d << "F = 0: (" << num(rep.m0) << ", " << num(rep.m1) << "); ";
  }
  double worst_alpha = 0.0;
  for (ModelId id : {ModelId::heat, ModelId::ac_weak, ModelId::ac_strong, ModelId::nse_weak, ModelId::nse_strong,
                     ModelId::qg, ModelId::mhd}) {
    for (NormConvention nc : {NormConvention::homogeneous, NormConvention::inhomogeneous}) {
      if (nc == NormConvention::inhomogeneous && is_strong_model(id)) continue;
      const ModelSpec s = make_model_spec(id, is_sine_model(id) ? 64 : 24, 0.7, nc);
      worst_alpha = std::max(worst_alpha, std::abs(estimate_alpha(s) - s.alpha));
    }
  }
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double inh = estimate_alpha(make_model_spec(ModelId::ac_weak, 64, 1.0, NormConvention::inhomogeneous));
  worst_alpha = std::max(worst_alpha, std::abs(inh - pi2 / (1 + pi2)));
  pass = pass && worst_alpha <= 1e-9;
  d << "max |alpha_hat - alpha| " << num(worst_alpha);
  return {pass, d.str()};
}

// ---------------------------------------------------------------- 10

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "nudgelab_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<std::string> configs = {
      "model.id = ac_weak\nmodel.n = 64\nnoise.kind = pointwise_multiplicative\nnoise.sigma = 0.3\n"
      "time.t_end = 0.5\nensemble.members = 6\n",
      "model.id = qg\nmodel.n = 24\nobservation.k = 3\nnoise.sigma = 0.05\ntime.t_end = 0.2\n"
      "ensemble.members = 5\noutput.emit_y = true\n"};
  bool pass = true;
  std::size_t compared = 0;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const fs::path dir = root / std::to_string(c);
    fs::create_directories(dir);
    std::ostringstream out, err;
    const auto run = [&](const std::string& text, const std::string& name) {
      write_file(dir / (name + ".conf"), text);
      cli::Options opt;
      opt.config_path = (dir / (name + ".conf")).string();
      opt.out_dir = (dir / name).string();
      return cli::simulate(opt, out, err);
    };
    pass = pass && run(configs[c] + "ensemble.threads = 1\n", "serial") == 0;
    pass = pass && run(configs[c] + "ensemble.threads = 4\n", "parallel") == 0;
    pass = pass && run(configs[c] + "ensemble.threads = 1\n", "repeat") == 0;
    std::string manifest = read_file(dir / "parallel" / "manifest.txt");
    pass = pass && run(manifest, "replay") == 0;
    for (const char* f : {"series.csv", "ensemble.csv", "tails.csv"}) {
      const std::string ref = read_file(dir / "serial" / f);
      for (const char* other : {"parallel", "repeat", "replay"}) {
        ++compared;
        if (read_file(dir / other / f) != ref) pass = false;
      }
    }
  }
  return {pass, std::to_string(compared) + " artifact pairs compared byte-for-byte (serial, 4 threads, repeat, "
                                           "manifest replay)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"zero-noise synchronization", zero_noise_synchronization},
      {"noise-floor scaling", noise_floor_scaling},
      {"V* ordering", vstar_ordering},
      {"almost-sure tail convergence", tail_convergence},
      {"stochastic convolution isometry", convolution_isometry},
      {"cancellation identities", cancellation},
      {"oracle equivalence", oracle_equivalence},
      {"threshold formula", threshold_formula},
      {"assumption verifier", assumption_verifier},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << "): " << o.detail
              << " [" << num(secs) << " s]" << std::endl;
  }
  std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
