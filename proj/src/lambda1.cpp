#include "calabiflow/lambda1.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "calabiflow/errors.hpp"
#include "calabiflow/simd/kernels.hpp"

namespace calabi {
namespace {

constexpr std::size_t kChunk = 2048;  // points per cache block in the Rayleigh-Ritz step

// Low flat eigenmodes cos(k.x), sin(k.x) ordered by the flat symbol.
std::vector<RealArray> flat_modes(const DivergenceOperator& op, int count) {
  const PeriodicGrid& grid = op.grid();
  const SpectralEngine& eng = op.engine();
  const int d = grid.dims();
  const auto& cbar = op.mean_coefficients();
  struct Mode {
    double s;
    std::size_t m;
  };
  std::vector<Mode> modes;
  int idx[kMaxAxes];
  for (std::size_t m = 0; m < eng.spectrum_size(); ++m) {
    if (eng.is_null_mode(m)) continue;
    eng.mode_indices(m, std::span<int>(idx, d));
    bool nyquist = false;
    for (int a = 0; a < d; ++a) nyquist = nyquist || idx[a] == grid.resolution(a) / 2;
    if (nyquist) continue;
    // The r2c half spectrum lists k and -k when the last index is 0; keep one.
    if (eng.integer_wavenumber(d - 1, idx[d - 1]) == 0) {
      int first = 0;
      for (int a = 0; a < d && first == 0; ++a) first = eng.integer_wavenumber(a, idx[a]);
      if (first < 0) continue;
    }
    double s = 0.0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) s += cbar[a * d + b] * eng.wavenumber(a, idx[a]) * eng.wavenumber(b, idx[b]);
    modes.push_back({s, m});
  }
  std::stable_sort(modes.begin(), modes.end(), [](const Mode& x, const Mode& y) { return x.s < y.s; });
  std::vector<RealArray> out;
  const double two_pi = 2.0 * M_PI;
  for (const Mode& mode : modes) {
    if (static_cast<int>(out.size()) >= count) break;
    eng.mode_indices(mode.m, std::span<int>(idx, d));
    double kint[kMaxAxes];
    for (int a = 0; a < d; ++a) kint[a] = eng.integer_wavenumber(a, idx[a]) / grid.period(a);
    RealArray c(grid.size()), s(grid.size());
    double x[kMaxAxes];
    for (std::size_t p = 0; p < grid.size(); ++p) {
      grid.coordinates(p, std::span<double>(x, d));
      double phase = 0.0;
      for (int a = 0; a < d; ++a) phase += two_pi * kint[a] * x[a];
      c[p] = std::cos(phase);
      s[p] = std::sin(phase);
    }
    out.push_back(std::move(c));
    if (static_cast<int>(out.size()) < count) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

Lambda1Result lambda1_solve(const DirichletForm& form, const Lambda1Options& opts) {
  const DivergenceOperator& K = *form.stiffness;
  const PeriodicGrid& grid = K.grid();
  const std::size_t n = grid.size();
  const int d = grid.dims();
  const auto& kern = simd::kernels();
  const RealArray& mass = form.mass;
  const NullSpaceProjector projector(grid, mass);

  int p = opts.block_size > 0 ? opts.block_size : 2 * d + 2;
  if (opts.initial_block && !opts.initial_block->empty()) p = static_cast<int>(opts.initial_block->size());

  std::vector<RealArray> X;
  if (opts.initial_block && !opts.initial_block->empty()) {
    X = *opts.initial_block;
  } else {
    X = flat_modes(K, p);
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    while (static_cast<int>(X.size()) < p) {
      RealArray v(n);
      for (double& e : v) e = uni(rng);
      X.push_back(std::move(v));
    }
  }
  for (auto& x : X) {
    if (x.size() != n) throw std::invalid_argument("lambda1: initial block has wrong size");
    projector.project(x.data());
  }

  auto apply_K = [&](const RealArray& x) {
    RealArray y(n);
    K.apply(x.data(), y.data());
    return y;
  };

  std::vector<RealArray> KX(p), W, KW, P, KP;
  for (int i = 0; i < p; ++i) KX[i] = apply_K(X[i]);

  Lambda1Result res;
  double prev = std::numeric_limits<double>::infinity();
  Eigen::VectorXd lambda;

  for (int iter = 0; iter <= opts.max_iterations; ++iter) {
    // Assemble basis [X W P].
    std::vector<const RealArray*> S, KS;
    for (int i = 0; i < p; ++i) S.push_back(&X[i]), KS.push_back(&KX[i]);
    for (std::size_t i = 0; i < W.size(); ++i) S.push_back(&W[i]), KS.push_back(&KW[i]);
    for (std::size_t i = 0; i < P.size(); ++i) S.push_back(&P[i]), KS.push_back(&KP[i]);
    const int m = static_cast<int>(S.size());

    // Gram matrices accumulated chunk by chunk so the whole basis slice stays in cache.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m), B = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t b0 = 0; b0 < n; b0 += kChunk) {
      const std::size_t len = std::min(kChunk, n - b0);
      for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
          A(i, j) += kern.dot(S[i]->data() + b0, KS[j]->data() + b0, len) +
                     kern.dot(S[j]->data() + b0, KS[i]->data() + b0, len);
          B(i, j) += kern.weighted_dot(mass.data() + b0, S[i]->data() + b0, S[j]->data() + b0, len);
        }
    }
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        A(i, j) *= 0.5;
        A(j, i) = A(i, j);
        B(j, i) = B(i, j);
      }
    // Diagonal scaling then drop near-dependent directions.
    Eigen::VectorXd scale(m);
    for (int i = 0; i < m; ++i) scale(i) = B(i, i) > 0.0 ? 1.0 / std::sqrt(B(i, i)) : 0.0;
    A = scale.asDiagonal() * A * scale.asDiagonal();
    B = scale.asDiagonal() * B * scale.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> bs(B);
    const double bmax = bs.eigenvalues().maxCoeff();
    std::vector<int> keep;
    for (int i = 0; i < m; ++i)
      if (bs.eigenvalues()(i) > 1e-13 * bmax) keep.push_back(i);
    if (static_cast<int>(keep.size()) < p) throw ConvergenceError("lambda1: block lost rank", iter, NAN);
    Eigen::MatrixXd T(m, keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c)
      T.col(c) = bs.eigenvectors().col(keep[c]) / std::sqrt(bs.eigenvalues()(keep[c]));
    Eigen::MatrixXd Ar = T.transpose() * A * T;
    Ar = 0.5 * (Ar + Ar.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ar);
    Eigen::MatrixXd C = scale.asDiagonal() * T * es.eigenvectors().leftCols(p);
    lambda = es.eigenvalues().head(p);

    // New X, KX and the conjugate directions P (X-part removed).
    std::vector<RealArray> Xn(p, RealArray(n, 0.0)), KXn(p, RealArray(n, 0.0));
    std::vector<RealArray> Pn, KPn;
    const bool have_dirs = m > p;
    if (have_dirs) Pn.assign(p, RealArray(n, 0.0)), KPn.assign(p, RealArray(n, 0.0));
    for (std::size_t b0 = 0; b0 < n; b0 += kChunk) {
      const std::size_t len = std::min(kChunk, n - b0);
      for (int j = 0; j < p; ++j)
        for (int i = 0; i < m; ++i) {
          const double c = C(i, j);
          if (c == 0.0) continue;
          kern.axpy(c, S[i]->data() + b0, Xn[j].data() + b0, len);
          kern.axpy(c, KS[i]->data() + b0, KXn[j].data() + b0, len);
          if (have_dirs && i >= p) {
            kern.axpy(c, S[i]->data() + b0, Pn[j].data() + b0, len);
            kern.axpy(c, KS[i]->data() + b0, KPn[j].data() + b0, len);
          }
        }
    }
    X = std::move(Xn);
    KX = std::move(KXn);
    P = std::move(Pn);
    KP = std::move(KPn);

    // Residuals.
    std::vector<RealArray> R(p, RealArray(n));
    double res0 = 0.0;
    for (int j = 0; j < p; ++j) {
      double rn = 0.0, mx = 0.0;
      for (std::size_t q = 0; q < n; ++q) {
        const double mxq = mass[q] * X[j][q];
        R[j][q] = KX[j][q] - lambda(j) * mxq;
        rn += R[j][q] * R[j][q];
        mx += mxq * mxq;
      }
      if (j == 0) res0 = std::sqrt(rn) / (std::abs(lambda(0)) * std::sqrt(mx));
    }
    res.iterations = iter;
    const double change = std::abs(lambda(0) - prev);
    prev = lambda(0);
    if ((change <= opts.tol * std::abs(lambda(0)) || res0 < opts.tol) && res0 <= std::sqrt(opts.tol)) {
      res.value = lambda(0);
      res.residual = res0;
      break;
    }
    if (iter == opts.max_iterations)
      throw ConvergenceError("lambda1: no convergence after " + std::to_string(iter) + " iterations", iter, res0);

    W.assign(p, RealArray(n));
    KW.assign(p, RealArray(n));
    for (int j = 0; j < p; ++j) {
      K.apply_flat_inverse(R[j].data(), W[j].data());
      projector.project(W[j].data());
      K.apply(W[j].data(), KW[j].data());
    }
  }

  // M-normalize the leading vector and report its Rayleigh quotient.
  const double mn = kern.weighted_dot(mass.data(), X[0].data(), X[0].data(), n);
  res.eigenvector = X[0];
  for (double& v : res.eigenvector) v /= std::sqrt(mn);
  res.rayleigh_quotient = form.energy(res.eigenvector.data()) / form.mass_norm(res.eigenvector.data());
  res.block = std::move(X);
  return res;
}

Lambda1Result lambda1_solve(const MetricField& g, const Lambda1Options& opts) {
  return lambda1_solve(DirichletForm::from_metric(g), opts);
}

double lambda1(const MetricField& g, double tol) {
  Lambda1Options opts;
  opts.tol = tol;
  return lambda1_solve(g, opts).value;
}

}  // namespace calabi
