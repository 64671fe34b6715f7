#include "calabiflow/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "calabiflow/simd/kernels.hpp"

namespace calabi {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void init_fftw_threads() {
  static const bool done = [] {
    fftw_init_threads();
    fftw_plan_with_nthreads(fft_thread_count());
    return true;
  }();
  (void)done;
}

// Per-thread scratch spectrum; c2r destroys its input.
Spectrum& scratch_spectrum(std::size_t n) {
  thread_local Spectrum buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

}  // namespace

int fft_thread_count() {
  static const int n = [] {
    const char* env = std::getenv("CALABIFLOW_THREADS");
    if (!env) return 1;
    int v = std::atoi(env);
    return v > 0 ? v : 1;
  }();
  return n;
}

int DerivativeTerm::total_order() const {
  int s = 0;
  for (int m : order) s += m;
  return s;
}

DiffOp DiffOp::partial(int axis, int order) {
  if (axis < 0 || axis >= kMaxAxes) throw std::out_of_range("DiffOp: axis out of range");
  if (order < 0) throw std::invalid_argument("DiffOp: negative order");
  DerivativeTerm t;
  t.order[axis] = order;
  DiffOp op;
  op.terms_.push_back(t);
  return op;
}

DiffOp DiffOp::mixed(int axis_a, int axis_b) {
  DiffOp op = partial(axis_a, 1);
  op.terms_[0].order[axis_b] += 1;
  return op;
}

DiffOp DiffOp::laplacian(int dims) {
  DiffOp op;
  for (int a = 0; a < dims; ++a) op.add(partial(a, 2).terms_[0]);
  return op;
}

DiffOp& DiffOp::add(const DerivativeTerm& term) {
  if (!terms_.empty() && (terms_.front().total_order() - term.total_order()) % 2 != 0)
    throw std::invalid_argument("DiffOp: mixing odd and even order terms gives a complex symbol");
  terms_.push_back(term);
  return *this;
}

DiffOp DiffOp::operator+(const DiffOp& o) const {
  DiffOp r = *this;
  for (const auto& t : o.terms_) r.add(t);
  return r;
}

DiffOp DiffOp::operator-(const DiffOp& o) const { return *this + o * -1.0; }

DiffOp DiffOp::operator*(double s) const {
  DiffOp r = *this;
  for (auto& t : r.terms_) t.coefficient *= s;
  return r;
}

std::string DiffOp::key() const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& t : terms_) {
    os << t.coefficient << ':';
    for (int m : t.order) os << m << ',';
    os << ';';
  }
  return os.str();
}

struct SpectralEngine::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

SpectralEngine::SpectralEngine(const PeriodicGrid& grid) : grid_(grid), plans_(std::make_unique<Plans>()) {
  const int d = grid_.dims();
  extent_ = grid_.resolutions();
  extent_[d - 1] = grid_.resolution(d - 1) / 2 + 1;
  mode_stride_.assign(d, 1);
  for (int a = d - 2; a >= 0; --a) mode_stride_[a] = mode_stride_[a + 1] * extent_[a + 1];
  modes_ = mode_stride_[0] * extent_[0];

  wavenumbers_.resize(d);
  for (int a = 0; a < d; ++a) {
    wavenumbers_[a].resize(extent_[a]);
    for (int j = 0; j < extent_[a]; ++j)
      wavenumbers_[a][j] = 2.0 * std::numbers::pi * integer_wavenumber(a, j) / grid_.period(a);
  }

  init_fftw_threads();
  std::lock_guard<std::mutex> lock(planner_mutex());
  double* in = fftw_alloc_real(grid_.size());
  fftw_complex* out = fftw_alloc_complex(modes_);
  const std::vector<int>& n = grid_.resolutions();
  plans_->r2c = fftw_plan_dft_r2c(d, n.data(), in, out, FFTW_ESTIMATE);
  plans_->c2r = fftw_plan_dft_c2r(d, n.data(), out, in, FFTW_ESTIMATE);
  fftw_free(in);
  fftw_free(out);
  if (!plans_->r2c || !plans_->c2r) throw std::runtime_error("spectral engine: FFT planning failed");
}

SpectralEngine::~SpectralEngine() = default;

std::shared_ptr<const SpectralEngine> SpectralEngine::for_grid(const PeriodicGrid& grid) {
  static std::mutex m;
  static std::map<std::pair<std::vector<int>, std::vector<double>>, std::weak_ptr<const SpectralEngine>> cache;
  std::lock_guard<std::mutex> lock(m);
  auto key = std::make_pair(grid.resolutions(), grid.periods());
  if (auto it = cache.find(key); it != cache.end())
    if (auto sp = it->second.lock()) return sp;
  auto sp = std::make_shared<const SpectralEngine>(grid);
  cache[key] = sp;
  // Keep a strong reference to the most recent engines so repeated calls reuse plans.
  static std::vector<std::shared_ptr<const SpectralEngine>> recent;
  recent.push_back(sp);
  if (recent.size() > 8) recent.erase(recent.begin());
  return sp;
}

int SpectralEngine::integer_wavenumber(int axis, int j) const {
  const int n = grid_.resolution(axis);
  if (j == n / 2) return 0;
  return j < n / 2 ? j : j - n;
}

void SpectralEngine::mode_indices(std::size_t m, std::span<int> idx) const {
  for (int a = 0; a < grid_.dims(); ++a) idx[a] = static_cast<int>((m / mode_stride_[a]) % extent_[a]);
}

bool SpectralEngine::is_null_mode(std::size_t m) const {
  for (int a = 0; a < grid_.dims(); ++a) {
    const int j = static_cast<int>((m / mode_stride_[a]) % extent_[a]);
    if (j != 0 && j != grid_.resolution(a) / 2) return false;
  }
  return true;
}

void SpectralEngine::forward(const double* in, Spectrum& out) const {
  out.resize(modes_);
  fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out.data()));
}

Spectrum SpectralEngine::forward(const ScalarField& f) const {
  require_same_grid(grid_, f.grid(), "spectral forward");
  Spectrum s;
  forward(f.data(), s);
  return s;
}

void SpectralEngine::inverse(const Spectrum& in, double* out) const {
  Spectrum& tmp = scratch_spectrum(modes_);
  std::copy(in.begin(), in.begin() + modes_, tmp.begin());
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(tmp.data()), out);
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i) out[i] *= scale;
}

ScalarField SpectralEngine::inverse(const Spectrum& in) const {
  ScalarField f(grid_);
  inverse(in, f.data());
  return f;
}

void SpectralEngine::apply(const Spectrum& in, const Symbol& symbol, double* out) const {
  Spectrum& tmp = scratch_spectrum(modes_);
  simd::kernels().mul_symbol(reinterpret_cast<const double*>(in.data()), symbol.re.data(), symbol.im.data(),
                             reinterpret_cast<double*>(tmp.data()), modes_);
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(tmp.data()), out);
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i) out[i] *= scale;
}

ScalarField SpectralEngine::apply(const Spectrum& in, const Symbol& symbol) const {
  ScalarField f(grid_);
  apply(in, symbol, f.data());
  return f;
}

ScalarField SpectralEngine::apply(const ScalarField& f, const DiffOp& op) const {
  return apply(forward(f), symbol(op));
}

Symbol SpectralEngine::build_symbol(const DiffOp& op) const {
  const int d = grid_.dims();
  for (const auto& t : op.terms())
    for (int a = d; a < kMaxAxes; ++a)
      if (t.order[a] != 0) throw std::out_of_range("DiffOp references an axis beyond the grid");
  Symbol s;
  s.re.assign(modes_, 0.0);
  s.im.assign(modes_, 0.0);
  int idx[kMaxAxes];
  for (std::size_t m = 0; m < modes_; ++m) {
    mode_indices(m, std::span<int>(idx, d));
    std::complex<double> acc = 0.0;
    for (const auto& t : op.terms()) {
      std::complex<double> v = t.coefficient;
      for (int a = 0; a < d; ++a) {
        const std::complex<double> ik(0.0, wavenumbers_[a][idx[a]]);
        for (int r = 0; r < t.order[a]; ++r) v *= ik;
      }
      acc += v;
    }
    s.re[m] = acc.real();
    s.im[m] = acc.imag();
  }
  return s;
}

Symbol SpectralEngine::build_symbol(const std::function<double(std::span<const double>)>& multiplier) const {
  const int d = grid_.dims();
  Symbol s;
  s.re.assign(modes_, 0.0);
  s.im.assign(modes_, 0.0);
  int idx[kMaxAxes];
  double k[kMaxAxes];
  for (std::size_t m = 0; m < modes_; ++m) {
    mode_indices(m, std::span<int>(idx, d));
    for (int a = 0; a < d; ++a) k[a] = wavenumbers_[a][idx[a]];
    s.re[m] = multiplier(std::span<const double>(k, d));
  }
  return s;
}

const Symbol& SpectralEngine::symbol(const DiffOp& op) const {
  const std::string key = op.key();
  std::lock_guard<std::mutex> lock(symbol_mutex_);
  auto it = symbol_cache_.find(key);
  if (it != symbol_cache_.end()) return *it->second;
  auto sym = std::make_unique<Symbol>(build_symbol(op));
  const Symbol& ref = *sym;
  symbol_cache_.emplace(key, std::move(sym));
  return ref;
}

ScalarField spectral_derivative(const ScalarField& field, int axis, int order) {
  if (axis < 0 || axis >= field.grid().dims())
    throw std::out_of_range("spectral_derivative: axis " + std::to_string(axis) + " out of range for " +
                            std::to_string(field.grid().dims()) + "-dimensional grid");
  if (order != 1 && order != 2) throw std::invalid_argument("spectral_derivative: order must be 1 or 2");
  auto engine = SpectralEngine::for_grid(field.grid());
  return engine->apply(field, DiffOp::partial(axis, order));
}

void project_out_null_modes(const SpectralEngine& engine, Spectrum& s) {
  for (std::size_t m = 0; m < engine.spectrum_size(); ++m)
    if (engine.is_null_mode(m)) s[m] = 0.0;
}

}  // namespace calabi
