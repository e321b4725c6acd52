#pragma once

// FFTW-backed collocation transforms.
//
// SineTransform: Dirichlet sine series on (0,1) sampled at x_j = j/(n+1),
//   j = 1..n, through the type-I discrete sine transform.
// TorusTransform: real fields on [0, 2*pi)^2 sampled at x = 2*pi*(j0, j1)/n,
//   spectrum stored FFTW half-complex style (n x (n/2+1)), dim 0 <-> x1.
//
// Plans are created once per size under a global mutex (the FFTW planner is
// not thread-safe) and executed through the new-array interface, which is.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace nudgelab::spectral {

using Complex = std::complex<double>;

namespace detail {

enum class PlanKind { dst1, r2c_2d, c2r_2d };

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

inline fftw_plan cached_plan(PlanKind kind, int n) {
  static std::map<std::pair<int, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  const auto key = std::make_pair(static_cast<int>(kind), n);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  fftw_plan plan = nullptr;
  const std::size_t nn = static_cast<std::size_t>(n);
  switch (kind) {
    case PlanKind::dst1: {
      std::vector<double> in(nn), out(nn);
      plan = fftw_plan_r2r_1d(n, in.data(), out.data(), FFTW_RODFT00, flags);
      break;
    }
    case PlanKind::r2c_2d: {
      std::vector<double> in(nn * nn);
      std::vector<Complex> out(nn * (nn / 2 + 1));
      plan = fftw_plan_dft_r2c_2d(n, n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), flags);
      break;
    }
    case PlanKind::c2r_2d: {
      std::vector<Complex> in(nn * (nn / 2 + 1));
      std::vector<double> out(nn * nn);
      plan = fftw_plan_dft_c2r_2d(n, n, reinterpret_cast<fftw_complex*>(in.data()), out.data(), flags);
      break;
    }
  }
  if (plan == nullptr) throw std::runtime_error("FFTW could not create a plan");
  cache.emplace(key, plan);
  return plan;
}

}  // namespace detail

class SineTransform {
 public:
  explicit SineTransform(int n) : n_(n), plan_(detail::cached_plan(detail::PlanKind::dst1, n)) {
    if (n < 2) throw std::invalid_argument("sine transform needs at least 2 points");
  }

  int size() const { return n_; }

  double node(int j) const { return static_cast<double>(j + 1) / (n_ + 1); }

  /// values[j] = sum_k coeffs[k-1] sin(k pi x_j); coeffs may be shorter than n.
  std::vector<double> synthesize(const std::vector<double>& coeffs) const {
    std::vector<double> in(static_cast<std::size_t>(n_), 0.0);
    for (std::size_t k = 0; k < coeffs.size() && k < in.size(); ++k) in[k] = 0.5 * coeffs[k];
    std::vector<double> out(in.size());
    fftw_execute_r2r(plan_, in.data(), out.data());
    return out;
  }

  /// Inverse of synthesize, truncated to the first `count` coefficients.
  std::vector<double> analyze(const std::vector<double>& values, std::size_t count) const {
    std::vector<double> in(values);
    std::vector<double> out(in.size());
    fftw_execute_r2r(plan_, in.data(), out.data());
    out.resize(count);
    const double scale = 1.0 / (n_ + 1);
    for (double& c : out) c *= scale;
    return out;
  }

 private:
  int n_;
  fftw_plan plan_;
};

class TorusTransform {
 public:
  explicit TorusTransform(int n)
      : n_(n),
        forward_(detail::cached_plan(detail::PlanKind::r2c_2d, n)),
        backward_(detail::cached_plan(detail::PlanKind::c2r_2d, n)) {
    if (n < 4 || n % 2 != 0) throw std::invalid_argument("torus grid size must be even and at least 4");
  }

  int size() const { return n_; }
  std::size_t grid_size() const { return static_cast<std::size_t>(n_) * n_; }
  std::size_t spectrum_size() const { return static_cast<std::size_t>(n_) * (n_ / 2 + 1); }

  /// Slot of wavevector (k1, k2) with k2 >= 0.
  std::size_t slot(int k1, int k2) const {
    const int row = k1 >= 0 ? k1 : k1 + n_;
    return static_cast<std::size_t>(row) * (n_ / 2 + 1) + static_cast<std::size_t>(k2);
  }

  int k1_of_row(int row) const { return row <= n_ / 2 ? row : row - n_; }

  /// u(x) = sum_k spec_k e^{i k.x}; spec must be Hermitian on the k2 = 0 line.
  std::vector<double> to_grid(const std::vector<Complex>& spec) const {
    std::vector<Complex> in(spec);
    std::vector<double> out(grid_size());
    fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(in.data()), out.data());
    return out;
  }

  /// Normalized forward transform: spec_k = n^{-2} sum_x u(x) e^{-i k.x}.
  std::vector<Complex> to_spectrum(const std::vector<double>& grid) const {
    std::vector<double> in(grid);
    std::vector<Complex> out(spectrum_size());
    fftw_execute_dft_r2c(forward_, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
    const double scale = 1.0 / (static_cast<double>(n_) * n_);
    for (Complex& c : out) c *= scale;
    return out;
  }

  /// spec * i k_dir (dir 0 -> x1, dir 1 -> x2).
  std::vector<Complex> derivative(const std::vector<Complex>& spec, int dir) const {
    std::vector<Complex> out(spec.size());
    const int cols = n_ / 2 + 1;
    for (int row = 0; row < n_; ++row) {
      const int k1 = k1_of_row(row);
      for (int k2 = 0; k2 < cols; ++k2) {
        const std::size_t s = static_cast<std::size_t>(row) * cols + k2;
        const double k = dir == 0 ? k1 : k2;
        out[s] = Complex(0.0, k) * spec[s];
      }
    }
    return out;
  }

 private:
  int n_;
  fftw_plan forward_;
  fftw_plan backward_;
};

}  // namespace nudgelab::spectral
