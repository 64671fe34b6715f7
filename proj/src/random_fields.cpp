#include "calabiflow/random_fields.hpp"

#include <complex>

#include "calabiflow/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace calabi {

double SeededUniform::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return 2.0 * (static_cast<double>(z >> 11) * 0x1.0p-53) - 1.0;
}

ScalarField random_trig_field(const PeriodicGrid& grid, std::uint64_t seed, int max_mode, double amplitude) {
  if (max_mode < 1) throw std::invalid_argument("random_trig_field: max_mode must be >= 1");
  const int d = grid.dims();
  for (int a = 0; a < d; ++a)
    if (2 * max_mode >= grid.resolution(a)) throw std::invalid_argument("random_trig_field: max_mode not resolved");
  SeededUniform rng(seed);
  struct Term {
    std::vector<int> k;
    double a, b;
  };
  std::vector<Term> terms;
  std::vector<int> k(d, -max_mode);
  double norm = 0.0;
  while (true) {
    int first = 0;
    for (int a = 0; a < d && first == 0; ++a) first = k[a];
    if (first > 0) {
      double k2 = 0.0;
      for (int v : k) k2 += v * v;
      const double w = 1.0 / (1.0 + k2);
      Term t{k, w * rng.next(), w * rng.next()};
      norm += std::abs(t.a) + std::abs(t.b);
      terms.push_back(std::move(t));
    }
    int a = d - 1;
    while (a >= 0 && ++k[a] > max_mode) k[a--] = -max_mode;
    if (a < 0) break;
  }
  const double scale = norm > 0.0 ? amplitude / norm : 0.0;
  // a cos + b sin = Re[(a - i b) e^{i k.x}]; place c_k and c_{-k} in the r2c half spectrum.
  auto engine = SpectralEngine::for_grid(grid);
  Spectrum spec(engine->spectrum_size(), 0.0);
  const double total = static_cast<double>(grid.size());
  auto place = [&](const std::vector<int>& kv, std::complex<double> c) {
    if (kv[d - 1] < 0) return;
    std::size_t m = 0;
    for (int a = 0; a < d; ++a) {
      const int n = grid.resolution(a);
      const int j = (kv[a] % n + n) % n;
      m = m * engine->spectral_extent(a) + j;
    }
    spec[m] += c;
  };
  for (const Term& t : terms) {
    const std::complex<double> c = 0.5 * total * scale * std::complex<double>(t.a, -t.b);
    std::vector<int> neg(t.k);
    for (int& v : neg) v = -v;
    place(t.k, c);
    place(neg, std::conj(c));
  }
  return engine->inverse(spec);
}

TensorField random_symmetric(const PeriodicGrid& grid, std::uint64_t seed, int max_mode, double amplitude) {
  const int d = grid.dims();
  TensorField t(grid, 0, 2);
  std::uint64_t s = seed;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      ScalarField f = random_trig_field(grid, s++ * 0x2545f4914f6cdd1dULL + 17, max_mode, amplitude);
      t({i, j}) = RealArray(f.values().begin(), f.values().end());
      if (i != j) t({j, i}) = t({i, j});
    }
  return t;
}

MetricField random_metric(const PeriodicGrid& grid, std::uint64_t seed, int max_mode, double amplitude) {
  if (!(amplitude < 0.5)) throw std::invalid_argument("random_metric: amplitude must be < 0.5");
  const int d = grid.dims();
  TensorField t = random_symmetric(grid, seed, max_mode, amplitude);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      auto& c = t({i, j});
      for (double& v : c) v = (i == j) ? 1.0 + v : v / d;
    }
  return MetricField(std::move(t));
}

}  // namespace calabi
