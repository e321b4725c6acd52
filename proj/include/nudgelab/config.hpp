#pragma once

// Line-oriented run configuration: `section.key = value`, '#' starts a comment.
// Parsing is strict (unknown sections or keys are errors) and reports every
// problem it finds, not only the first.

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "experiment.hpp"

namespace nudgelab {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors)
      : std::runtime_error(join(errors)), errors_(std::move(errors)) {}
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& errors) {
    std::string out;
    for (const auto& e : errors) out += (out.empty() ? "" : "\n") + e;
    return out;
  }
  std::vector<std::string> errors_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  const std::string str(trim(s));
  if (str.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(str.c_str(), &end);
  if (end != str.c_str() + str.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_int(std::string_view s) {
  s = trim(s);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<bool> parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  return std::nullopt;
}

inline std::optional<std::vector<double>> parse_list(std::string_view s) {
  std::vector<double> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::string_view item = s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    const auto v = parse_double(item);
    if (!v) return std::nullopt;
    out.push_back(*v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

}  // namespace detail

struct ParsedConfig {
  RunConfig config;
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

/// Parses and validates; all syntax, type and constraint errors are collected.
inline ParsedConfig parse_config(std::string_view text) {
  using namespace detail;
  ParsedConfig out;
  RunConfig& c = out.config;
  auto& errors = out.errors;

  using Setter = std::function<bool(std::string_view)>;
  const auto real = [](double& dst) -> Setter {
    return [&dst](std::string_view v) {
      const auto x = parse_double(v);
      if (x) dst = *x;
      return x.has_value();
    };
  };
  const auto opt_real = [](std::optional<double>& dst) -> Setter {
    return [&dst](std::string_view v) {
      const auto x = parse_double(v);
      if (x) dst = *x;
      return x.has_value();
    };
  };
  const auto integer = [](int& dst) -> Setter {
    return [&dst](std::string_view v) {
      const auto x = parse_int(v);
      if (!x || *x < INT32_MIN || *x > INT32_MAX) return false;
      dst = static_cast<int>(*x);
      return true;
    };
  };
  const auto opt_integer = [](std::optional<int>& dst) -> Setter {
    return [&dst](std::string_view v) {
      const auto x = parse_int(v);
      if (!x || *x < INT32_MIN || *x > INT32_MAX) return false;
      dst = static_cast<int>(*x);
      return true;
    };
  };
  const auto u64 = [](std::uint64_t& dst) -> Setter {
    return [&dst](std::string_view v) {
      const auto x = parse_u64(v);
      if (x) dst = *x;
      return x.has_value();
    };
  };
  const auto boolean = [](bool& dst) -> Setter {
    return [&dst](std::string_view v) {
      const auto x = parse_bool(v);
      if (x) dst = *x;
      return x.has_value();
    };
  };
  const auto list = [](std::vector<double>& dst) -> Setter {
    return [&dst](std::string_view v) {
      const auto x = parse_list(v);
      if (x) dst = *x;
      return x.has_value();
    };
  };

  const std::map<std::string, std::pair<Setter, const char*>> keys = {
      {"model.id", {[&](std::string_view v) {
                      const auto id = parse_model_id(trim(v));
                      if (id) c.model.id = *id;
                      return id.has_value();
                    },
                    "one of heat, ac_weak, ac_strong, nse_weak, nse_strong, qg, mhd"}},
      {"model.n", {integer(c.model.n), "an integer"}},
      {"model.nu", {real(c.model.nu), "a number"}},
      {"model.norms", {[&](std::string_view v) {
                         v = trim(v);
                         if (v == "homogeneous") c.model.norms = NormConvention::homogeneous;
                         else if (v == "inhomogeneous") c.model.norms = NormConvention::inhomogeneous;
                         else return false;
                         return true;
                       },
                       "homogeneous or inhomogeneous"}},
      {"observation.kind", {[&](std::string_view v) {
                              v = trim(v);
                              if (v == "modal") c.observation.kind = ObservationKind::modal;
                              else if (v == "volume") c.observation.kind = ObservationKind::volume;
                              else return false;
                              return true;
                            },
                            "modal or volume"}},
      {"observation.delta", {opt_real(c.observation.delta), "a number"}},
      {"observation.k", {opt_integer(c.observation.k), "an integer"}},
      {"noise.kind", {[&](std::string_view v) {
                        const auto k = parse_noise_kind(trim(v));
                        if (k) c.noise.kind = *k;
                        return k.has_value();
                      },
                      "one of additive, state_scaled, pointwise_multiplicative, attractor_vanishing"}},
      {"noise.sigma", {real(c.noise.sigma), "a number"}},
      {"noise.p", {real(c.noise.p), "a number"}},
      {"noise.exponent", {opt_real(c.noise.exponent), "a number"}},
      {"noise.kq", {opt_integer(c.noise.kq), "an integer"}},
      {"nudging.mu", {real(c.nudging.mu), "a number"}},
      {"nudging.implicit", {boolean(c.nudging.implicit), "a boolean"}},
      {"time.dt", {real(c.time.dt), "a number"}},
      {"time.t_end", {real(c.time.t_end), "a number"}},
      {"time.stride", {integer(c.time.stride), "an integer"}},
      {"time.blowup_guard", {real(c.time.blowup_guard), "a number"}},
      {"ensemble.members", {integer(c.ensemble.members), "an integer"}},
      {"ensemble.seed", {u64(c.ensemble.seed), "an unsigned integer"}},
      {"ensemble.threads", {integer(c.ensemble.threads), "an integer"}},
      {"initial.seed", {u64(c.initial.seed), "an unsigned integer"}},
      {"initial.u_norm", {real(c.initial.u_norm), "a number"}},
      {"initial.w_norm", {real(c.initial.w_norm), "a number"}},
      {"initial.slope", {real(c.initial.slope), "a number"}},
      {"initial.synchronized", {boolean(c.initial.synchronized), "a boolean"}},
      {"output.dir", {[&](std::string_view v) {
                        c.output.dir = std::string(trim(v));
                        return true;
                      },
                      "a path"}},
      {"output.emit_y", {boolean(c.output.emit_y), "a boolean"}},
      {"sweep.mu", {list(c.sweep.mu), "a comma-separated list of numbers"}},
      {"sweep.delta", {list(c.sweep.delta), "a comma-separated list of numbers"}},
  };
  const std::vector<std::string> sections = {"model", "observation", "noise", "nudging", "time",
                                             "ensemble", "initial", "output", "sweep"};

  std::map<std::string, int> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      errors.push_back(where + "expected 'section.key = value'");
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
      errors.push_back(where + "key '" + key + "' has no section");
      continue;
    }
    const std::string section = key.substr(0, dot);
    if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
      errors.push_back(where + "unknown section '" + section + "'");
      continue;
    }
    const auto it = keys.find(key);
    if (it == keys.end()) {
      errors.push_back(where + "unknown key '" + key + "'");
      continue;
    }
    if (seen[key]++ > 0) {
      errors.push_back(where + "duplicate key '" + key + "'");
      continue;
    }
    if (!it->second.first(value)) {
      errors.push_back(where + key + " must be " + it->second.second + ", got '" + std::string(value) + "'");
    }
  }
  for (auto& e : validate(c)) errors.push_back(e);
  return out;
}

/// Parses or throws ConfigError listing every problem.
inline RunConfig load_config(std::string_view text) {
  ParsedConfig p = parse_config(text);
  if (!p.ok()) throw ConfigError(p.errors);
  return p.config;
}

/// Canonical text of a resolved config; parse_config(to_text(c)) reproduces c exactly.
inline std::string to_text(const RunConfig& raw) {
  using detail::format_double;
  const RunConfig c = resolve(raw);
  std::ostringstream o;
  o << "model.id = " << to_string(c.model.id) << "\n";
  o << "model.n = " << c.model.n << "\n";
  o << "model.nu = " << format_double(c.model.nu) << "\n";
  o << "model.norms = " << (c.model.norms == NormConvention::homogeneous ? "homogeneous" : "inhomogeneous") << "\n";
  o << "observation.kind = " << to_string(c.observation.kind) << "\n";
  o << "observation.delta = " << format_double(*c.observation.delta) << "\n";
  o << "noise.kind = " << to_string(c.noise.kind) << "\n";
  o << "noise.sigma = " << format_double(c.noise.sigma) << "\n";
  o << "noise.p = " << format_double(c.noise.p) << "\n";
  o << "noise.exponent = " << format_double(*c.noise.exponent) << "\n";
  o << "noise.kq = " << *c.noise.kq << "\n";
  o << "nudging.mu = " << format_double(c.nudging.mu) << "\n";
  o << "nudging.implicit = " << (c.nudging.implicit ? "true" : "false") << "\n";
  o << "time.dt = " << format_double(c.time.dt) << "\n";
  o << "time.t_end = " << format_double(c.time.t_end) << "\n";
  o << "time.stride = " << c.time.stride << "\n";
  o << "time.blowup_guard = " << format_double(c.time.blowup_guard) << "\n";
  o << "ensemble.members = " << c.ensemble.members << "\n";
  o << "ensemble.seed = " << c.ensemble.seed << "\n";
  o << "ensemble.threads = " << c.ensemble.threads << "\n";
  o << "initial.seed = " << c.initial.seed << "\n";
  o << "initial.u_norm = " << format_double(c.initial.u_norm) << "\n";
  o << "initial.w_norm = " << format_double(c.initial.w_norm) << "\n";
  o << "initial.slope = " << format_double(c.initial.slope) << "\n";
  o << "initial.synchronized = " << (c.initial.synchronized ? "true" : "false") << "\n";
  if (!c.output.dir.empty()) o << "output.dir = " << c.output.dir << "\n";
  o << "output.emit_y = " << (c.output.emit_y ? "true" : "false") << "\n";
  if (!c.sweep.mu.empty()) o << "sweep.mu = " << detail::format_list(c.sweep.mu) << "\n";
  if (!c.sweep.delta.empty()) o << "sweep.delta = " << detail::format_list(c.sweep.delta) << "\n";
  return o.str();
}

struct SweepGrid {
  std::vector<double> mu;
  std::vector<double> delta;
};

/// Parses "mu=1,10,100;delta=0.125,0.0625"; every malformed part is reported.
inline SweepGrid parse_grid(std::string_view spec) {
  using namespace detail;
  SweepGrid g;
  std::vector<std::string> errors;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t semi = spec.find(';', start);
    const std::string_view part =
        trim(spec.substr(start, semi == std::string_view::npos ? std::string_view::npos : semi - start));
    if (!part.empty()) {
      const auto eq = part.find('=');
      const std::string_view name = eq == std::string_view::npos ? part : trim(part.substr(0, eq));
      if (eq == std::string_view::npos) {
        errors.push_back("grid part '" + std::string(part) + "' lacks '='");
      } else if (name != "mu" && name != "delta") {
        errors.push_back("grid axis '" + std::string(name) + "' is not mu or delta");
      } else {
        const auto values = parse_list(part.substr(eq + 1));
        if (!values || values->empty()) {
          errors.push_back("grid axis '" + std::string(name) + "' needs a comma-separated list of numbers");
        } else {
          for (double v : *values) {
            if (name == "mu" && v < 0.0) errors.push_back("grid mu values must be >= 0");
            if (name == "delta" && !(v > 0.0)) errors.push_back("grid delta values must be > 0");
          }
          (name == "mu" ? g.mu : g.delta) = *values;
        }
      }
    }
    if (semi == std::string_view::npos) break;
    start = semi + 1;
  }
  if (errors.empty() && (g.mu.empty() || g.delta.empty())) errors.push_back("grid needs both mu and delta axes");
  if (!errors.empty()) throw ConfigError(errors);
  return g;
}

}  // namespace nudgelab
