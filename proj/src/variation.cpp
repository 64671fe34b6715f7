#include <cmath>
#include <stdexcept>
#include <string>

#include "calabiflow/errors.hpp"
#include "calabiflow/ricci_flow.hpp"
#include "calabiflow/simd/kernels.hpp"

namespace calabi::realflow {
namespace {

ScalarField trace(const MetricField& ginv, const TensorField& h) {
  const int d = ginv.dim();
  ScalarField out(h.grid());
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q) simd::kernels().mul_acc(ginv(p, q).data(), h({p, q}).data(), out.data(), out.size());
  return out;
}

// Quantity whose s-derivative is being checked, as a list of component arrays.
std::vector<RealArray> quantity(const MetricField& g, VariationFormula f) {
  auto collect = [](const TensorField& t) {
    std::vector<RealArray> v;
    for (std::size_t c = 0; c < t.component_count(); ++c) v.push_back(t.component(c));
    return v;
  };
  auto scalar = [](const ScalarField& s) { return std::vector<RealArray>{RealArray(s.values().begin(), s.values().end())}; };
  auto number = [](double x) { return std::vector<RealArray>{RealArray{x}}; };
  switch (f) {
    case VariationFormula::inverse: return collect(metric_inverse(g).tensor());
    case VariationFormula::christoffel: return collect(christoffel(g));
    case VariationFormula::riemann: return collect(curvature(g).riemann);
    case VariationFormula::ricci: return collect(curvature(g).ricci);
    case VariationFormula::scalar: return scalar(curvature(g).scalar);
    case VariationFormula::volume_element: return scalar(volume_element(g));
    case VariationFormula::total_volume: return number(integrate(ScalarField(g.grid(), 1.0), g));
    case VariationFormula::total_scalar: return number(integrate(curvature(g).scalar, g));
  }
  throw std::logic_error("unknown variation formula");
}

// First variation along h at s = 0.
std::vector<RealArray> first_variation(const VariationInput& v, VariationFormula f) {
  const MetricField& g = v.g;
  const TensorField& h = v.h;
  const int d = g.dim();
  const std::size_t n = g.grid().size();
  const MetricField ginv = metric_inverse(g);
  auto gi = [&](int a, int b) -> const RealArray& { return ginv(a, b); };

  if (f == VariationFormula::inverse) {
    std::vector<RealArray> out(d * d, RealArray(n, 0.0));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l)
            for (std::size_t p = 0; p < n; ++p) out[i * d + j][p] -= gi(i, k)[p] * gi(j, l)[p] * h({k, l})[p];
    return out;
  }
  if (f == VariationFormula::volume_element || f == VariationFormula::total_volume) {
    const ScalarField mu = volume_element(g);
    ScalarField half(g.grid());
    for (std::size_t p = 0; p < n; ++p) half[p] = 0.5 * v.H[p] * mu[p];
    if (f == VariationFormula::volume_element) return {RealArray(half.values().begin(), half.values().end())};
    return {RealArray{integrate_flat(half)}};
  }

  const TensorField gamma = christoffel(g, ginv);
  const TensorField dh = covariant_derivative(h, gamma);  // (a, i, j) = nabla_a h_ij

  if (f == VariationFormula::christoffel) {
    std::vector<RealArray> out(d * d * d, RealArray(n, 0.0));
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          for (int l = 0; l < d; ++l)
            for (std::size_t p = 0; p < n; ++p)
              out[(k * d + i) * d + j][p] +=
                  0.5 * gi(k, l)[p] * (dh({i, j, l})[p] + dh({j, i, l})[p] - dh({l, i, j})[p]);
    return out;
  }

  const TensorField d2 = covariant_derivative(dh, gamma);  // (a, b, i, j) = nabla_a nabla_b h_ij
  auto D = [&](int a, int b, int i, int j) -> const RealArray& { return d2({a, b, i, j}); };

  if (f == VariationFormula::riemann) {
    std::vector<RealArray> out(d * d * d * d, RealArray(n, 0.0));
    for (int l = 0; l < d; ++l)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          for (int k = 0; k < d; ++k) {
            RealArray& o = out[((l * d + i) * d + j) * d + k];
            for (int q = 0; q < d; ++q) {
              const auto &a1 = D(i, j, k, q), &a2 = D(i, k, j, q), &a3 = D(i, q, j, k);
              const auto &b1 = D(j, i, k, q), &b2 = D(j, k, i, q), &b3 = D(j, q, i, k);
              const auto& w = gi(l, q);
              for (std::size_t p = 0; p < n; ++p)
                o[p] += 0.5 * w[p] * (a1[p] + a2[p] - a3[p] - b1[p] - b2[p] + b3[p]);
            }
          }
    return out;
  }

  // delta R_ij = 1/2 g^{pq} (nabla_q nabla_i h_jp + nabla_q nabla_j h_ip - nabla_q nabla_p h_ij - nabla_i nabla_j h_qp)
  std::vector<RealArray> dric(d * d, RealArray(n, 0.0));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int pp = 0; pp < d; ++pp)
        for (int q = 0; q < d; ++q) {
          const auto &a1 = D(q, i, j, pp), &a2 = D(q, j, i, pp), &a3 = D(q, pp, i, j), &a4 = D(i, j, q, pp);
          const auto& w = gi(pp, q);
          RealArray& o = dric[i * d + j];
          for (std::size_t p = 0; p < n; ++p) o[p] += 0.5 * w[p] * (a1[p] + a2[p] - a3[p] - a4[p]);
        }
  if (f == VariationFormula::ricci) return dric;

  const Curvature c = curvature(g);
  // h^{pq} R_pq
  ScalarField hr(g.grid());
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int pp = 0; pp < d; ++pp)
        for (int q = 0; q < d; ++q)
          for (std::size_t p = 0; p < n; ++p)
            hr[p] += gi(pp, a)[p] * gi(q, b)[p] * h({a, b})[p] * c.ricci({pp, q})[p];

  if (f == VariationFormula::scalar) {
    // -Delta H + nabla^p nabla^q h_pq - h^{pq} R_pq
    const ScalarField lapH = laplace_beltrami(g, v.H);
    RealArray out(n, 0.0);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int pp = 0; pp < d; ++pp)
          for (int q = 0; q < d; ++q) {
            const auto& dd = D(a, b, pp, q);
            for (std::size_t p = 0; p < n; ++p) out[p] += gi(pp, a)[p] * gi(q, b)[p] * dd[p];
          }
    for (std::size_t p = 0; p < n; ++p) out[p] += -lapH[p] - hr[p];
    return {out};
  }

  // total scalar: int (R H / 2 - h^{ij} R_ij) dmu
  ScalarField integrand(g.grid());
  for (std::size_t p = 0; p < n; ++p) integrand[p] = 0.5 * c.scalar[p] * v.H[p] - hr[p];
  return {RealArray{integrate(integrand, g)}};
}

MetricField shifted(const VariationInput& v, double s) {
  TensorField t = v.g.tensor();
  TensorField dh = v.h;
  dh *= s;
  t += dh;
  try {
    return MetricField(std::move(t));
  } catch (const NotPositiveDefinite& e) {
    throw NotPositiveDefinite(e.point(), e.pivot(),
                              "variation_check: g + s h leaves the positive cone at s = " + std::to_string(s) +
                                  ", grid point " + std::to_string(e.point()));
  }
}

}  // namespace

VariationFormula parse_variation_formula(const std::string& name) {
  for (VariationFormula f : all_variation_formulas())
    if (to_string(f) == name) return f;
  throw std::invalid_argument("unknown variation formula '" + name + "'");
}

std::string to_string(VariationFormula f) {
  switch (f) {
    case VariationFormula::inverse: return "inverse";
    case VariationFormula::christoffel: return "christoffel";
    case VariationFormula::riemann: return "riemann";
    case VariationFormula::ricci: return "ricci";
    case VariationFormula::scalar: return "scalar";
    case VariationFormula::volume_element: return "volume-element";
    case VariationFormula::total_volume: return "total-volume";
    case VariationFormula::total_scalar: return "total-scalar";
  }
  return "?";
}

const std::vector<VariationFormula>& all_variation_formulas() {
  static const std::vector<VariationFormula> all{
      VariationFormula::inverse, VariationFormula::christoffel,    VariationFormula::riemann,
      VariationFormula::ricci,   VariationFormula::scalar,         VariationFormula::volume_element,
      VariationFormula::total_volume, VariationFormula::total_scalar};
  return all;
}

VariationInput VariationInput::make(const MetricField& g, const TensorField& h) {
  return VariationInput(g, h, trace(metric_inverse(g), h));
}

VariationInput::VariationInput(MetricField g_, TensorField h_, ScalarField H_)
    : g(std::move(g_)), h(std::move(h_)), H(std::move(H_)) {
  if (h.rank() != 2 || h.upper() != 0) throw std::invalid_argument("variation input: h must be a covariant 2-tensor");
  require_same_grid(g.grid(), h.grid(), "variation input");
  if (!is_symmetric(h, 1e-12)) throw std::invalid_argument("variation input: h must be symmetric");
  const ScalarField recomputed = trace(metric_inverse(g), h);
  if (sup_distance(recomputed, H) > 1e-12 * std::max(1.0, H.max_abs()))
    throw std::invalid_argument("variation input: stored H does not match g^{pq} h_pq");
}

double variation_check(const VariationInput& v, VariationFormula formula, double ds) {
  if (!(ds > 0.0)) throw std::invalid_argument("variation_check: ds must be positive");
  const auto plus = quantity(shifted(v, ds), formula);
  const auto minus = quantity(shifted(v, -ds), formula);
  const auto exact = first_variation(v, formula);
  double m = 0.0;
  for (std::size_t c = 0; c < exact.size(); ++c)
    for (std::size_t p = 0; p < exact[c].size(); ++p)
      m = std::max(m, std::abs((plus[c][p] - minus[c][p]) / (2.0 * ds) - exact[c][p]));
  return m;
}

}  // namespace calabi::realflow
