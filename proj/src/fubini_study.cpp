#include "calabiflow/fubini_study.hpp"

#include <stdexcept>

namespace calabi {
namespace {

using cvec = std::vector<std::complex<double>>;

constexpr double kD1[] = {-1.0 / 60, 3.0 / 20, -3.0 / 4, 0.0, 3.0 / 4, -3.0 / 20, 1.0 / 60};
constexpr double kD2[] = {1.0 / 90, -3.0 / 20, 3.0 / 2, -49.0 / 18, 3.0 / 2, -3.0 / 20, 1.0 / 90};

// Real coordinate r (0..2n-1): even -> Re z_{r/2}, odd -> Im z_{r/2}.
void shift(cvec& z, int r, double s) {
  z[r / 2] += (r % 2 == 0) ? std::complex<double>(s, 0.0) : std::complex<double>(0.0, s);
}

template <class F>
auto second_partial(const F& f, const cvec& z, int a, int b, double h) {
  using T = decltype(f(z));
  T acc{};
  if (a == b) {
    for (int s = -3; s <= 3; ++s) {
      if (kD2[s + 3] == 0.0) continue;
      cvec w = z;
      shift(w, a, s * h);
      acc += kD2[s + 3] * f(w);
    }
    return acc / (h * h);
  }
  for (int s = -3; s <= 3; ++s) {
    if (kD1[s + 3] == 0.0) continue;
    for (int t = -3; t <= 3; ++t) {
      if (kD1[t + 3] == 0.0) continue;
      cvec w = z;
      shift(w, a, s * h);
      shift(w, b, t * h);
      acc += kD1[s + 3] * kD1[t + 3] * f(w);
    }
  }
  return acc / (h * h);
}

template <class F>
std::complex<double> ddbar(const F& f, const cvec& z, int k, int l, double h) {
  const int xk = 2 * k, yk = 2 * k + 1, xl = 2 * l, yl = 2 * l + 1;
  const auto re = second_partial(f, z, xk, xl, h) + second_partial(f, z, yk, yl, h);
  const auto im = second_partial(f, z, xk, yl, h) - second_partial(f, z, yk, xl, h);
  return 0.25 * (std::complex<double>(re) + std::complex<double>(0.0, 1.0) * std::complex<double>(im));
}

}  // namespace

std::complex<double> wirtinger_ddbar(const std::function<double(const cvec&)>& f, const cvec& z, int k, int l,
                                     double h) {
  return ddbar(f, z, k, l, h);
}

std::complex<double> wirtinger_ddbar(const std::function<std::complex<double>(const cvec&)>& f, const cvec& z, int k,
                                     int l, double h) {
  return ddbar(f, z, k, l, h);
}

Eigen::MatrixXcd fubini_study_metric(const cvec& z) {
  const int n = static_cast<int>(z.size());
  if (n < 1) throw std::invalid_argument("fubini_study: empty chart point");
  double r2 = 0.0;
  for (const auto& c : z) r2 += std::norm(c);
  const double s = 1.0 + r2;
  Eigen::MatrixXcd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = (i == j ? 1.0 / s : 0.0) - std::conj(z[i]) * z[j] / (s * s);
  return g;
}

FubiniStudyPoint fubini_study(const cvec& z, double h) {
  const int n = static_cast<int>(z.size());
  FubiniStudyPoint out;
  out.g = fubini_study_metric(z);
  auto log_det = [](const cvec& w) { return std::log(fubini_study_metric(w).determinant().real()); };
  out.ric.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.ric(i, j) = -ddbar(log_det, z, i, j, h);
  return out;
}

std::vector<std::complex<double>> fubini_study_origin_curvature(int n, double h) {
  if (n < 1) throw std::invalid_argument("fubini_study: n must be positive");
  const cvec origin(n, 0.0);
  std::vector<std::complex<double>> r(static_cast<std::size_t>(n * n * n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      auto gij = [i, j](const cvec& w) { return fubini_study_metric(w)(i, j); };
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) r[((i * n + j) * n + k) * n + l] = -ddbar(gij, origin, k, l, h);
    }
  return r;
}

}  // namespace calabi
