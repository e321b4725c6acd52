#pragma once

// CSV tables, manifests and plain-text reports.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "harness.hpp"
#include "integrator.hpp"

namespace nudgelab {

inline constexpr const char* kVersion = "1.0.0";

/// 17 significant digits in scientific notation.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline void write_series_csv(std::ostream& o, const ErrorSeries& s, int stride, bool emit_y) {
  if (stride < 1) throw std::invalid_argument("stride must be at least 1");
  if (emit_y && s.dy_h.size() != s.size()) throw std::invalid_argument("series was recorded without y increments");
  o << "t,w_H,w_Vstar,u_H,v_H,hs_norm_sq,kappa" << (emit_y ? ",dy_H" : "") << "\n";
  for (std::size_t i = 0; i < s.size(); i += static_cast<std::size_t>(stride)) {
    o << fmt(s.t[i]) << ',' << fmt(s.w_h[i]) << ',' << fmt(s.w_vstar[i]) << ',' << fmt(s.u_h[i]) << ','
      << fmt(s.v_h[i]) << ',' << fmt(s.hs_norm_sq[i]) << ',' << fmt(s.kappa[i]);
    if (emit_y) o << ',' << fmt(s.dy_h[i]);
    o << "\n";
  }
}

inline void write_ensemble_csv(std::ostream& o, const EnsembleResult& r, int stride) {
  o << "t,mean_w_H2,se_w_H2,mean_w_Vstar2,se_w_Vstar2\n";
  for (std::size_t i = 0; i < r.times.size(); i += static_cast<std::size_t>(stride)) {
    o << fmt(r.times[i]) << ',' << fmt(r.mean_w_h2[i]) << ',' << fmt(r.se_w_h2[i]) << ',' << fmt(r.mean_w_vstar2[i])
      << ',' << fmt(r.se_w_vstar2[i]) << "\n";
  }
}

/// Per-member tail sups at N = 0, T/8, T/4, T/2.
inline void write_tail_csv(std::ostream& o, const EnsembleResult& r) {
  o << "member,seed,status,tail_sup_0,tail_sup_T8,tail_sup_T4,tail_sup_T2\n";
  for (std::size_t m = 0; m < r.member_series.size(); ++m) {
    o << m << ',' << r.member_seeds[m] << ',';
    const auto& s = r.member_series[m];
    if (!s) {
      o << "blowup,nan,nan,nan,nan\n";
      continue;
    }
    const double T = s->t.back();
    o << "ok," << fmt(tail_sup(*s, 0.0)) << ',' << fmt(tail_sup(*s, T / 8)) << ',' << fmt(tail_sup(*s, T / 4)) << ','
      << fmt(tail_sup(*s, T / 2)) << "\n";
  }
}

struct RunManifest {
  RunConfig config;
  std::string command;
  double alpha_hat = 0.0;
  double c_i_hat = 0.0;
  double eta0_hat = 0.0;
  double wall_seconds = 0.0;
  std::vector<std::uint64_t> member_seeds;
};

/// Resolved config (reloadable as is) followed by comment lines with the measurements.
inline std::string manifest_text(const RunManifest& m) {
  std::ostringstream o;
  o << to_text(m.config);
  o << "# version = " << kVersion << "\n";
  o << "# command = " << m.command << "\n";
  o << "# alpha_hat = " << fmt(m.alpha_hat) << "\n";
  o << "# C_I_hat = " << fmt(m.c_i_hat) << "\n";
  o << "# eta0_hat = " << fmt(m.eta0_hat) << "\n";
  o << "# wall_seconds = " << fmt(m.wall_seconds) << "\n";
  o << "# member_seeds =";
  for (std::size_t i = 0; i < m.member_seeds.size(); ++i) o << (i ? ", " : " ") << m.member_seeds[i];
  o << "\n";
  return o.str();
}

inline void write_sweep_csv(std::ostream& o, const std::vector<SweepCell>& cells) {
  o << "mu,delta,mu_delta2,gamma_fit,fit_residual,floor,floor_se,members,blowups,invalid,alpha_hat,C_I_hat,eta0_hat,"
       "exceeds_eta0,eta0_mu_at_delta,error\n";
  for (const auto& c : cells) {
    std::string err = c.error;
    for (char& ch : err) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    const double mu_line = c.eta0_hat / (c.delta * c.delta);
    o << fmt(c.mu) << ',' << fmt(c.delta) << ',' << fmt(c.mu * c.delta * c.delta) << ',' << fmt(c.gamma) << ','
      << fmt(c.fit_residual) << ',' << fmt(c.floor) << ',' << fmt(c.floor_se) << ',' << c.members << ',' << c.blowups
      << ',' << (c.invalid ? 1 : 0) << ',' << fmt(c.alpha_hat) << ',' << fmt(c.c_i_hat) << ',' << fmt(c.eta0_hat) << ','
      << (c.exceeds_eta0 ? 1 : 0) << ',' << fmt(mu_line) << ',' << err << "\n";
  }
}

inline std::string sweep_plot_script() {
  return R"(import csv, sys
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "sweep.csv")))
mu = [float(r["mu"]) for r in rows]
delta = [float(r["delta"]) for r in rows]
gamma = [float(r["gamma_fit"]) for r in rows]
fig, ax = plt.subplots()
sc = ax.scatter(delta, mu, c=gamma, cmap="viridis")
fig.colorbar(sc, label="gamma_fit")
for r in rows:
    if r["exceeds_eta0"] == "1":
        ax.scatter(float(r["delta"]), float(r["mu"]), marker="x", color="red")
ds = sorted(set(delta))
line = {float(r["delta"]): float(r["eta0_mu_at_delta"]) for r in rows}
ax.plot(ds, [line[d] for d in ds], "r--", label="mu delta^2 = eta0_hat")
ax.set_xscale("log")
ax.set_yscale("symlog")
ax.set_xlabel("delta")
ax.set_ylabel("mu")
ax.legend()
fig.savefig("sweep.png", dpi=150)
)";
}

inline std::string verdict(const std::optional<bool>& pass) {
  if (!pass) return "info";
  return *pass ? "PASS" : "FAIL";
}

inline std::string report_text(const AssumptionReport& r) {
  std::ostringstream o;
  o << "alpha_hat = " << fmt(r.alpha_hat) << "\n";
  o << "C_I_hat = " << fmt(r.c_i_hat) << "\n";
  o << "eta0_hat = " << fmt(r.eta0_hat) << "\n";
  o << "M0 = " << fmt(r.m0) << "\n";
  o << "M1 = " << fmt(r.m1) << "\n";
  for (const auto& e : r.entries) {
    o << "[" << verdict(e.pass) << "] " << e.name << " = " << fmt(e.value);
    if (!std::isnan(e.bound)) o << " (bound " << fmt(e.bound) << ")";
    o << " ; " << e.method << " ; samples = " << e.samples << "\n";
  }
  o << "overall: " << (r.all_pass() ? "PASS" : "FAIL") << "\n";
  return o.str();
}

inline void write_assumptions_csv(std::ostream& o, const AssumptionReport& r) {
  o << "name,value,bound,verdict,samples,method\n";
  for (const auto& e : r.entries) {
    std::string method = e.method;
    for (char& ch : method) {
      if (ch == ',') ch = ';';
    }
    o << e.name << ',' << fmt(e.value) << ',' << fmt(e.bound) << ',' << verdict(e.pass) << ',' << e.samples << ','
      << method << "\n";
  }
}

inline void write_convolution_csv(std::ostream& o, const ConvolutionCheck& c) {
  o << "direction,t,sample_var,se,theory,z_score\n";
  for (const auto& p : c.probes) {
    o << p.direction << ',' << fmt(p.t) << ',' << fmt(p.sample_var) << ',' << fmt(p.se) << ',' << fmt(p.theory) << ','
      << fmt(p.z_score) << "\n";
  }
}

inline std::string convolution_report(const ConvolutionCheck& c) {
  std::ostringstream o;
  o << "paths = " << c.paths << "\n";
  o << "silent = " << (c.silent ? "true" : "false") << "\n";
  for (const auto& p : c.probes) {
    o << "direction " << p.direction << " t = " << fmt(p.t) << ": var = " << fmt(p.sample_var) << " +- " << fmt(p.se);
    if (!std::isnan(p.theory)) o << " theory = " << fmt(p.theory) << " z = " << fmt(p.z_score);
    o << "\n";
  }
  o << "E sup ||Z||_H^2 on [0,T] = " << fmt(c.sup_mean_T) << ", on [0,2T] = " << fmt(c.sup_mean_2T) << "\n";
  o << "int ||G||^2 on [0,T] = " << fmt(c.hs_integral_T) << ", on [0,2T] = " << fmt(c.hs_integral_2T)
    << "\n";
  o << "c_hat(T) = " << fmt(c.c_hat_T) << ", c_hat(2T) = " << fmt(c.c_hat_2T) << "\n";
  return o.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << content;
  if (!f) throw std::runtime_error("write to " + path.string() + " failed");
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream o;
  o << f.rdbuf();
  return o.str();
}

}  // namespace nudgelab
