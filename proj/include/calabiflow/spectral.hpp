#pragma once

#include <array>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "calabiflow/aligned.hpp"
#include "calabiflow/grid.hpp"

namespace calabi {

using Spectrum = ComplexArray;

// Constant-coefficient differential operator: sum of c * prod_a d_a^{m_a}.
// Every term must share the parity of its total order so the symbol is purely
// real or purely imaginary and real fields map to real fields.
struct DerivativeTerm {
  double coefficient = 1.0;
  std::array<int, kMaxAxes> order{};
  int total_order() const;
};

class DiffOp {
 public:
  DiffOp() = default;
  static DiffOp partial(int axis, int order = 1);
  static DiffOp mixed(int axis_a, int axis_b);
  static DiffOp laplacian(int dims);

  DiffOp& add(const DerivativeTerm& term);
  DiffOp operator+(const DiffOp& o) const;
  DiffOp operator-(const DiffOp& o) const;
  DiffOp operator*(double s) const;
  const std::vector<DerivativeTerm>& terms() const noexcept { return terms_; }
  std::string key() const;

 private:
  std::vector<DerivativeTerm> terms_;
};

// Fourier multiplier stored as split real and imaginary arrays over r2c modes.
struct Symbol {
  RealArray re;
  RealArray im;
};

// Real-to-complex FFT machinery for one grid. The Nyquist wavenumber is taken as
// zero for every derivative so that all derivative symbols commute and compose
// exactly; operators are then exact on trigonometric polynomials below Nyquist.
class SpectralEngine {
 public:
  explicit SpectralEngine(const PeriodicGrid& grid);
  ~SpectralEngine();
  SpectralEngine(const SpectralEngine&) = delete;
  SpectralEngine& operator=(const SpectralEngine&) = delete;

  // Shared engine for a grid; thread safe.
  static std::shared_ptr<const SpectralEngine> for_grid(const PeriodicGrid& grid);

  const PeriodicGrid& grid() const noexcept { return grid_; }
  std::size_t spectrum_size() const noexcept { return modes_; }
  int spectral_extent(int axis) const { return extent_.at(axis); }

  void forward(const double* in, Spectrum& out) const;
  Spectrum forward(const ScalarField& f) const;
  // Normalized inverse; `in` is left untouched.
  void inverse(const Spectrum& in, double* out) const;
  ScalarField inverse(const Spectrum& in) const;
  // out = inverse(in * symbol)
  void apply(const Spectrum& in, const Symbol& symbol, double* out) const;
  ScalarField apply(const Spectrum& in, const Symbol& symbol) const;
  ScalarField apply(const ScalarField& f, const DiffOp& op) const;

  Symbol build_symbol(const DiffOp& op) const;
  // Arbitrary real multiplier of the physical wavevector (Nyquist mapped to 0).
  Symbol build_symbol(const std::function<double(std::span<const double>)>& multiplier) const;
  const Symbol& symbol(const DiffOp& op) const;

  // Physical wavenumber 2 pi m / L of spectral index j on `axis`, Nyquist mapped to 0.
  double wavenumber(int axis, int j) const { return wavenumbers_[axis][j]; }
  // Integer wavenumber (signed, Nyquist mapped to 0).
  int integer_wavenumber(int axis, int j) const;
  // Decompose a flat spectral index into per-axis spectral indices.
  void mode_indices(std::size_t m, std::span<int> idx) const;
  // True when every axis index is 0 or Nyquist: the joint null set of all derivatives.
  bool is_null_mode(std::size_t m) const;

 private:
  struct Plans;
  PeriodicGrid grid_;
  std::vector<int> extent_;
  std::vector<std::size_t> mode_stride_;
  std::size_t modes_ = 0;
  std::vector<std::vector<double>> wavenumbers_;
  std::unique_ptr<Plans> plans_;
  mutable std::mutex symbol_mutex_;
  mutable std::map<std::string, std::unique_ptr<Symbol>> symbol_cache_;
};

ScalarField spectral_derivative(const ScalarField& field, int axis, int order);

// Zero the modes of `s` on which every derivative vanishes (mean and Nyquist corners).
void project_out_null_modes(const SpectralEngine& engine, Spectrum& s);

// Thread count used by FFT plans (CALABIFLOW_THREADS, default 1).
int fft_thread_count();

}  // namespace calabi
