#include "calabiflow/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "calabiflow/dense.hpp"
#include "calabiflow/errors.hpp"
#include "calabiflow/simd/kernels.hpp"

namespace calabi {
namespace {

std::size_t ipow(int d, int r) {
  std::size_t v = 1;
  for (int i = 0; i < r; ++i) v *= static_cast<std::size_t>(d);
  return v;
}

// d_a of every component, derivative slot leading. Components listed in `skip_to`
// are copied from an equal component instead of being differentiated again.
TensorField gradient_impl(const TensorField& t, const std::vector<std::size_t>* alias) {
  const PeriodicGrid& grid = t.grid();
  const int d = t.dim();
  auto engine = SpectralEngine::for_grid(grid);
  TensorField out(grid, t.upper(), t.lower() + 1);
  const std::size_t nc = t.component_count();
  Spectrum spec;
  for (std::size_t c = 0; c < nc; ++c) {
    if (alias && (*alias)[c] != c) continue;
    engine->forward(t.component(c).data(), spec);
    for (int a = 0; a < d; ++a)
      engine->apply(spec, engine->symbol(DiffOp::partial(a, 1)), out.component(a * nc + c).data());
  }
  if (alias)
    for (std::size_t c = 0; c < nc; ++c)
      if ((*alias)[c] != c)
        for (int a = 0; a < d; ++a) out.component(a * nc + c) = out.component(a * nc + (*alias)[c]);
  return out;
}

// Alias map folding the last two indices of a tensor symmetric in them.
std::vector<std::size_t> symmetric_tail_alias(int d, int rank) {
  const std::size_t nc = ipow(d, rank);
  std::vector<std::size_t> alias(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    const int j = static_cast<int>(c % d);
    const int i = static_cast<int>((c / d) % d);
    const std::size_t head = c / (static_cast<std::size_t>(d) * d);
    alias[c] = (i <= j) ? c : head * d * d + static_cast<std::size_t>(j) * d + i;
  }
  return alias;
}

}  // namespace

MetricField metric_inverse(const MetricField& g) {
  const int d = g.dim();
  TensorField inv(g.grid(), 2, 0);
  double m[36], mi[36];
  for (std::size_t p = 0; p < g.grid().size(); ++p) {
    g.at(p, std::span<double>(m, d * d));
    if (!dense::spd_inverse(m, d, mi, nullptr))
      throw NotPositiveDefinite(p, dense::cholesky_min_pivot(m, d),
                                "metric_inverse: not positive definite at grid point " + std::to_string(p));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) inv.component(i * d + j)[p] = 0.5 * (mi[i * d + j] + mi[j * d + i]);
  }
  return MetricField(std::move(inv));
}

TensorField gradient(const TensorField& t) { return gradient_impl(t, nullptr); }

TensorField gradient(const ScalarField& f) {
  TensorField t(f.grid(), 0, 0);
  t.component(0) = RealArray(f.values().begin(), f.values().end());
  return gradient_impl(t, nullptr);
}

TensorField christoffel(const MetricField& g) { return christoffel(g, metric_inverse(g)); }

TensorField christoffel(const MetricField& g, const MetricField& ginv) {
  const int d = g.dim();
  const auto alias = symmetric_tail_alias(d, 2);
  const TensorField dg = gradient_impl(g.tensor(), &alias);  // (a, b, c) = d_a g_bc
  TensorField gamma(g.grid(), 1, 2);
  const std::size_t n = g.grid().size();
  const auto& K = simd::kernels();
  RealArray lower(n);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      for (int l = 0; l < d; ++l) {
        // Gamma_{lij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
        const auto& a = dg({i, j, l});
        const auto& b = dg({j, i, l});
        const auto& c = dg({l, i, j});
        for (std::size_t p = 0; p < n; ++p) lower[p] = 0.5 * (a[p] + b[p] - c[p]);
        for (int k = 0; k < d; ++k) K.mul_acc(ginv(k, l).data(), lower.data(), gamma({k, i, j}).data(), n);
      }
      if (i != j)
        for (int k = 0; k < d; ++k) gamma({k, j, i}) = gamma({k, i, j});
    }
  return gamma;
}

Curvature curvature(const MetricField& g) {
  const int d = g.dim();
  const MetricField ginv = metric_inverse(g);
  const TensorField gamma = christoffel(g, ginv);
  const auto alias = symmetric_tail_alias(d, 3);
  const TensorField dgamma = gradient_impl(gamma, &alias);  // (a, l, j, k) = d_a Gamma^l_jk
  const std::size_t n = g.grid().size();
  Curvature out{TensorField(g.grid(), 1, 3), TensorField(g.grid(), 0, 2), ScalarField(g.grid())};
  const std::size_t d2 = static_cast<std::size_t>(d) * d, d3 = d2 * d;
  for (std::size_t p = 0; p < n; ++p) {
    double G[216];
    for (std::size_t c = 0; c < d3; ++c) G[c] = gamma.component(c)[p];
    double ric[36] = {0.0};
    for (int l = 0; l < d; ++l)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          for (int k = 0; k < d; ++k) {
            double v = dgamma.component(i * d3 + l * d2 + j * d + k)[p] -
                       dgamma.component(j * d3 + l * d2 + i * d + k)[p];
            for (int q = 0; q < d; ++q)
              v += G[l * d2 + i * d + q] * G[q * d2 + j * d + k] - G[l * d2 + j * d + q] * G[q * d2 + i * d + k];
            out.riemann.component(l * d3 + i * d2 + j * d + k)[p] = v;
            if (l == i) ric[j * d + k] += v;
          }
    double s = 0.0;
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        const double r = 0.5 * (ric[j * d + k] + ric[k * d + j]);
        out.ricci.component(j * d + k)[p] = r;
        s += ginv.tensor().component(j * d + k)[p] * r;
      }
    out.scalar[p] = s;
  }
  return out;
}

TensorField lower_riemann(const MetricField& g, const TensorField& riemann) {
  const int d = g.dim();
  const std::size_t n = g.grid().size();
  TensorField out(g.grid(), 0, 4);
  const auto& K = simd::kernels();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l)
          for (int m = 0; m < d; ++m) K.mul_acc(g(l, m).data(), riemann({m, i, j, k}).data(), out({i, j, k, l}).data(), n);
  return out;
}

ScalarField laplace_beltrami(const MetricField& g, const ScalarField& f) {
  require_same_grid(g.grid(), f.grid(), "laplace_beltrami");
  const int d = g.dim();
  const MetricField ginv = metric_inverse(g);
  const TensorField gamma = christoffel(g, ginv);
  auto engine = SpectralEngine::for_grid(f.grid());
  const Spectrum spec = engine->forward(f);
  const std::size_t n = f.size();
  const auto& K = simd::kernels();
  ScalarField out(f.grid());
  RealArray buf(n), contracted(n);
  for (int k = 0; k < d; ++k) {
    // c^k = g^{ij} Gamma^k_ij
    std::fill(contracted.begin(), contracted.end(), 0.0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) K.mul_acc(ginv(i, j).data(), gamma({k, i, j}).data(), contracted.data(), n);
    engine->apply(spec, engine->symbol(DiffOp::partial(k, 1)), buf.data());
    for (std::size_t p = 0; p < n; ++p) out[p] -= contracted[p] * buf[p];
  }
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      engine->apply(spec, engine->symbol(DiffOp::mixed(i, j)), buf.data());
      const double w = (i == j) ? 1.0 : 2.0;
      for (std::size_t p = 0; p < n; ++p) out[p] += w * ginv(i, j)[p] * buf[p];
    }
  return out;
}

ScalarField volume_element(const MetricField& g) {
  const int d = g.dim();
  ScalarField out(g.grid());
  double m[36], mi[36];
  for (std::size_t p = 0; p < g.grid().size(); ++p) {
    g.at(p, std::span<double>(m, d * d));
    double det = 0.0;
    if (!dense::spd_inverse(m, d, mi, &det))
      throw NotPositiveDefinite(p, dense::cholesky_min_pivot(m, d),
                                "volume_element: not positive definite at grid point " + std::to_string(p));
    out[p] = std::sqrt(det);
  }
  return out;
}

double integrate(const ScalarField& f, const MetricField& g) {
  require_same_grid(f.grid(), g.grid(), "integrate");
  const ScalarField mu = volume_element(g);
  return simd::kernels().dot(f.data(), mu.data(), f.size()) * f.grid().cell_volume();
}

TensorField covariant_derivative(const TensorField& t, const TensorField& gamma) {
  if (t.upper() != 0) throw std::invalid_argument("covariant_derivative: covariant tensors only");
  const int d = t.dim();
  const int r = t.rank();
  TensorField out = gradient(t);
  const std::size_t n = t.points();
  const std::size_t nc = t.component_count();
  const std::size_t d2 = static_cast<std::size_t>(d) * d;
  const auto& K = simd::kernels();
  RealArray neg(n);
  for (int a = 0; a < d; ++a)
    for (std::size_t c = 0; c < nc; ++c) {
      RealArray& dst = out.component(a * nc + c);
      // Slot s of component c: index i_s = (c / d^{r-1-s}) % d.
      for (int s = 0; s < r; ++s) {
        const std::size_t place = ipow(d, r - 1 - s);
        const int is = static_cast<int>((c / place) % d);
        for (int q = 0; q < d; ++q) {
          const std::size_t cq = c - static_cast<std::size_t>(is) * place + static_cast<std::size_t>(q) * place;
          const RealArray& gam = gamma.component(static_cast<std::size_t>(q) * d2 + static_cast<std::size_t>(a) * d + is);
          const RealArray& src = t.component(cq);
          for (std::size_t p = 0; p < n; ++p) neg[p] = -gam[p];
          K.mul_acc(neg.data(), src.data(), dst.data(), n);
        }
      }
    }
  return out;
}

TensorField raise_vector(const MetricField& ginv, const TensorField& v) {
  const int d = ginv.dim();
  TensorField out(ginv.grid(), 1, 0);
  const auto& K = simd::kernels();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) K.mul_acc(ginv(i, j).data(), v.component(j).data(), out.component(i).data(), v.points());
  return out;
}

TensorField lower_vector(const MetricField& g, const TensorField& v) {
  const int d = g.dim();
  TensorField out(g.grid(), 0, 1);
  const auto& K = simd::kernels();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) K.mul_acc(g(i, j).data(), v.component(j).data(), out.component(i).data(), v.points());
  return out;
}

}  // namespace calabi
