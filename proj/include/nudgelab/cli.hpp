#pragma once

// Subcommand bodies behind the nudgelab executable.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "experiment.hpp"
#include "harness.hpp"
#include "integrator.hpp"
#include "io.hpp"

namespace nudgelab::cli {

enum ExitCode { ok = 0, config_error = 1, runtime_guard = 2, check_failure = 3 };

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<int> members;
  std::optional<std::uint64_t> seed;
  bool check = false;
  std::string grid;
  int paths = 10000;
};

inline constexpr const char* kOutDirEnv = "NUDGELAB_OUT_DIR";

/// --out-dir, then output.dir, then $NUDGELAB_OUT_DIR, then ./nudgelab_out.
inline std::filesystem::path output_dir(const Options& opt, const RunConfig& cfg) {
  if (!opt.out_dir.empty()) return opt.out_dir;
  if (!cfg.output.dir.empty()) return cfg.output.dir;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "nudgelab_out";
}

/// Loads the config and applies command-line overrides; errors go to `err`.
inline std::optional<RunConfig> load(const Options& opt, std::ostream& err) {
  std::string text;
  try {
    text = read_file(opt.config_path);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return std::nullopt;
  }
  ParsedConfig p = parse_config(text);
  if (opt.members) p.config.ensemble.members = *opt.members;
  if (opt.seed) p.config.ensemble.seed = *opt.seed;
  if (opt.members || opt.seed) p.errors = validate(p.config);
  if (!p.ok()) {
    for (const auto& e : p.errors) err << "config error: " << e << "\n";
    return std::nullopt;
  }
  return resolve(p.config);
}

struct Constants {
  double alpha = 0.0;
  double c_i = 0.0;
  double eta0 = 0.0;
};

inline Constants measure_constants(const Setup& setup, const RunConfig& cfg, std::ostream& err) {
  Constants c;
  c.alpha = estimate_alpha(setup.stepper.model().spec());
  c.c_i = estimate_interp_constant(setup.stepper.observation(), kInterpSamples, cfg.ensemble.seed);
  c.eta0 = eta0_or_inf(c.alpha, c.c_i);
  const double mud2 = cfg.nudging.mu * *cfg.observation.delta * *cfg.observation.delta;
  if (mud2 > c.eta0) {
    err << "warning: mu delta^2 = " << fmt(mud2) << " exceeds eta0_hat = " << fmt(c.eta0)
        << "; synchronization is not guaranteed\n";
  }
  return c;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const BlowUpError& e) {
    err << "runtime guard: " << e.what() << "\n";
    return runtime_guard;
  } catch (const ConfigError& e) {
    for (const auto& m : e.errors()) err << "config error: " << m << "\n";
    return config_error;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return runtime_guard;
  }
}

inline int simulate(const Options& opt, std::ostream& out, std::ostream& err) {
  const auto cfg = load(opt, err);
  if (!cfg) return config_error;
  return guarded(err, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto dir = output_dir(opt, *cfg);
    std::filesystem::create_directories(dir);
    const Setup setup = build_setup(*cfg);
    const Constants c = measure_constants(setup, *cfg, err);
    RunManifest man{*cfg, "simulate", c.alpha, c.c_i, c.eta0, 0.0, {}};
    RunOptions ro;
    ro.record_y = cfg->output.emit_y;
    double w0 = 0.0, wT = 0.0;
    if (cfg->ensemble.members == 1) {
      man.member_seeds.push_back(derive_member_seed(cfg->ensemble.seed, 0));
      const PairRun run = simulate_pair(setup.stepper, setup.u0, setup.v0, man.member_seeds[0], ro);
      std::ostringstream csv;
      write_series_csv(csv, run.series, cfg->time.stride, ro.record_y);
      write_file(dir / "series.csv", csv.str());
      w0 = run.series.w_h.front() * run.series.w_h.front();
      wT = run.series.w_h.back() * run.series.w_h.back();
    } else {
      const EnsembleResult r = run_ensemble(setup, cfg->ensemble.members, cfg->ensemble.seed, cfg->ensemble.threads, ro);
      man.member_seeds = r.member_seeds;
      if (r.completed == 0) throw BlowUpError(0, 0.0, "every ensemble member blew up: " + r.blowup_messages.front());
      if (r.partial) {
        err << "warning: " << r.blowups << " of " << r.members << " members blew up; result is partial\n";
      }
      std::ostringstream ens, tails;
      write_ensemble_csv(ens, r, cfg->time.stride);
      write_tail_csv(tails, r);
      write_file(dir / "ensemble.csv", ens.str());
      write_file(dir / "tails.csv", tails.str());
      for (const auto& s : r.member_series) {
        if (!s) continue;
        std::ostringstream csv;
        write_series_csv(csv, *s, cfg->time.stride, ro.record_y);
        write_file(dir / "series.csv", csv.str());
        break;
      }
      w0 = r.mean_w_h2.front();
      wT = r.mean_w_h2.back();
    }
    man.wall_seconds = seconds_since(t0);
    write_file(dir / "manifest.txt", manifest_text(man));
    out << "wrote " << dir.string() << "\n";
    out << "E||w(0)||_H^2 = " << fmt(w0) << ", E||w(T)||_H^2 = " << fmt(wT) << "\n";
    if (opt.check && !(wT < w0)) {
      err << "check failed: the error did not decrease over the horizon\n";
      return static_cast<int>(check_failure);
    }
    return static_cast<int>(ok);
  });
}

inline int sweep(const Options& opt, std::ostream& out, std::ostream& err) {
  const auto cfg = load(opt, err);
  if (!cfg) return config_error;
  SweepGrid grid{cfg->sweep.mu, cfg->sweep.delta};
  if (!opt.grid.empty()) {
    try {
      grid = parse_grid(opt.grid);
    } catch (const ConfigError& e) {
      for (const auto& m : e.errors()) err << "grid error: " << m << "\n";
      return config_error;
    }
  }
  if (grid.mu.empty()) grid.mu = {cfg->nudging.mu};
  if (grid.delta.empty()) grid.delta = {*cfg->observation.delta};
  return guarded(err, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto dir = output_dir(opt, *cfg);
    std::filesystem::create_directories(dir);
    RunConfig base = *cfg;
    base.noise.kq.reset();
    const auto cells = nudgelab::sweep(base, grid.mu, grid.delta, cfg->ensemble.threads);
    std::ostringstream csv;
    write_sweep_csv(csv, cells);
    write_file(dir / "sweep.csv", csv.str());
    write_file(dir / "plot_sweep.py", sweep_plot_script());
    int invalid = 0;
    for (const auto& c : cells) {
      if (c.exceeds_eta0) {
        err << "warning: cell mu = " << fmt(c.mu) << ", delta = " << fmt(c.delta) << " has mu delta^2 > eta0_hat\n";
      }
      if (c.invalid || !c.error.empty()) {
        ++invalid;
        err << "cell mu = " << fmt(c.mu) << ", delta = " << fmt(c.delta) << ": " << c.error << "\n";
      }
    }
    RunConfig recorded = *cfg;
    recorded.sweep.mu = grid.mu;
    recorded.sweep.delta = grid.delta;
    RunManifest man{recorded, "sweep", cells.front().alpha_hat, cells.front().c_i_hat, cells.front().eta0_hat,
                    seconds_since(t0), {}};
    for (int m = 0; m < cfg->ensemble.members; ++m) {
      man.member_seeds.push_back(derive_member_seed(cfg->ensemble.seed, static_cast<std::uint64_t>(m)));
    }
    write_file(dir / "manifest.txt", manifest_text(man));
    out << "wrote " << dir.string() << " (" << cells.size() << " cells)\n";
    if (opt.check && invalid > 0) return static_cast<int>(check_failure);
    return static_cast<int>(ok);
  });
}

inline int verify(const Options& opt, std::ostream& out, std::ostream& err) {
  const auto cfg = load(opt, err);
  if (!cfg) return config_error;
  return guarded(err, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto dir = output_dir(opt, *cfg);
    std::filesystem::create_directories(dir);
    const Setup setup = build_setup(*cfg);
    const Constants c = measure_constants(setup, *cfg, err);
    RunConfig quiet = *cfg;
    quiet.noise.sigma = 0.0;
    const Setup reference = build_setup(quiet);
    const PairRun run = simulate_pair(reference.stepper, reference.u0, reference.u0, 0);
    const AssumptionReport rep = verify_assumptions(setup, run.series);
    const std::string text = report_text(rep);
    write_file(dir / "report.txt", text);
    std::ostringstream csv;
    write_assumptions_csv(csv, rep);
    write_file(dir / "assumptions.csv", csv.str());
    write_file(dir / "manifest.txt",
               manifest_text(RunManifest{*cfg, "verify", c.alpha, c.c_i, c.eta0, seconds_since(t0), {}}));
    out << text;
    if (opt.check && !rep.all_pass()) return static_cast<int>(check_failure);
    return static_cast<int>(ok);
  });
}

inline int convolution_check(const Options& opt, std::ostream& out, std::ostream& err) {
  const auto cfg = load(opt, err);
  if (!cfg) return config_error;
  return guarded(err, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto dir = output_dir(opt, *cfg);
    std::filesystem::create_directories(dir);
    const Setup setup = build_setup(*cfg);
    const Constants c = measure_constants(setup, *cfg, err);
    const std::size_t rank = setup.stepper.noise().q().rank();
    std::vector<std::size_t> dirs;
    for (std::size_t j = 0; j < std::min<std::size_t>(3, rank); ++j) dirs.push_back(j * std::max<std::size_t>(1, rank / 3));
    const double T = cfg->time.t_end;
    const std::vector<double> times{T / 10.0, T / 3.0, T};
    const ConvolutionCheck chk =
        nudgelab::convolution_check(setup, opt.paths, dirs, times, cfg->ensemble.seed, cfg->ensemble.threads);
    const std::string text = convolution_report(chk);
    write_file(dir / "convolution.txt", text);
    std::ostringstream csv;
    write_convolution_csv(csv, chk);
    write_file(dir / "convolution.csv", csv.str());
    write_file(dir / "manifest.txt",
               manifest_text(RunManifest{*cfg, "convolution-check", c.alpha, c.c_i, c.eta0, seconds_since(t0), {}}));
    out << text;
    if (opt.check) {
      for (const auto& p : chk.probes) {
        if (!std::isnan(p.z_score) && std::abs(p.z_score) > 3.0) return static_cast<int>(check_failure);
      }
    }
    return static_cast<int>(ok);
  });
}

}  // namespace nudgelab::cli
