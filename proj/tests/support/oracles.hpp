#pragma once

// Reference implementations used as test oracles. Everything here is written from
// the defining formulas with dense storage and does not call into gradflow, so a
// shared bug cannot hide behind agreement.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace oracle {

using Vec = std::vector<double>;

/// Dense row-major matrix.
struct Dense {
  int n = 0;
  Vec a;
  explicit Dense(int size) : n(size), a(static_cast<std::size_t>(size) * size, 0.0) {}
  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

/// Gaussian elimination with partial pivoting.
inline Vec gauss_solve(Dense m, Vec b) {
  const int n = m.n;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(m(i, k)) > std::abs(m(piv, k))) piv = i;
    if (m(piv, k) == 0.0) throw std::runtime_error("singular oracle matrix");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
      std::swap(b[k], b[piv]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double l = m(i, k) / m(k, k);
      if (l == 0.0) continue;
      for (int j = k; j < n; ++j) m(i, j) -= l * m(k, j);
      b[i] -= l * b[k];
    }
  }
  Vec x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= m(i, j) * x[j];
    x[i] = s / m(i, i);
  }
  return x;
}

inline Vec dense_matvec(const Dense& m, const Vec& x) {
  Vec y(m.n, 0.0);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) y[i] += m(i, j) * x[j];
  return y;
}

/// Square periodic grid on [0, 2 pi)^2 with n nodes per side, index j*n + i.
struct Grid {
  int n;
  double h() const { return 2.0 * std::numbers::pi / n; }
  int size() const { return n * n; }
  int at(int i, int j) const { return ((j % n + n) % n) * n + ((i % n + n) % n); }
};

/// Five-point periodic Laplacian as a dense matrix.
inline Dense laplacian(const Grid& g) {
  Dense m(g.size());
  const double w = 1.0 / (g.h() * g.h());
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      const int row = g.at(i, j);
      m(row, row) += -4.0 * w;
      m(row, g.at(i + 1, j)) += w;
      m(row, g.at(i - 1, j)) += w;
      m(row, g.at(i, j + 1)) += w;
      m(row, g.at(i, j - 1)) += w;
    }
  return m;
}

inline Vec sample(const Grid& g, double (*fn)(double, double)) {
  Vec out(g.size());
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) out[g.at(i, j)] = fn(i * g.h(), j * g.h());
  return out;
}

inline double F(double p) { return 0.25 * (p * p - 1.0) * (p * p - 1.0); }
inline double f(double p) { return p * p * p - p; }

inline double sum_all(const Vec& v) {
  long double s = 0.0L;
  for (double x : v) s += x;
  return static_cast<double>(s);
}

inline double dot(const Grid& g, const Vec& a, const Vec& b) {
  long double s = 0.0L;
  for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<long double>(a[k]) * b[k];
  return static_cast<double>(s) * g.h() * g.h();
}

/// Scalar auxiliary families written out by hand.
struct Aux {
  double (*c)(double);
  double (*cp)(double);
  double (*cinv)(double);
};

inline Aux quadratic() {
  return {[](double r) { return r * r; }, [](double r) { return 2.0 * r; }, [](double y) { return std::sqrt(y); }};
}

inline Aux softplus() {
  return {[](double r) { return std::log(1.0 + std::exp(r)); },
          [](double r) { return 1.0 / (1.0 + std::exp(-r)); },
          [](double y) { return std::log(std::exp(y) - 1.0); }};
}

inline Aux logsquare() {
  return {[](double r) { return std::log(r) * std::log(r); }, [](double r) { return 2.0 * std::log(r) / r; },
          [](double y) { return std::exp(std::sqrt(y)); }};
}

struct Params {
  double M = 0.6;
  double eps = 0.4;
  bool cahn_hilliard = false;
  double dt = 0.05;
};

/// Places -G (the block coupling phi to mu in row 1) at (row0, col0).
inline void put_minus_G(Dense& m, const Grid& g, const Params& p, int row0, int col0) {
  const int n = g.size();
  if (!p.cahn_hilliard) {
    for (int k = 0; k < n; ++k) m(row0 + k, col0 + k) += p.M;
    return;
  }
  const Dense lap = laplacian(g);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(row0 + i, col0 + j) += -p.M * lap(i, j);
}

inline void put_eps_lap(Dense& m, const Grid& g, const Params& p, int row0, int col0) {
  const Dense lap = laplacian(g);
  for (int i = 0; i < g.size(); ++i)
    for (int j = 0; j < g.size(); ++j) m(row0 + i, col0 + j) += p.eps * p.eps * lap(i, j);
}

struct Step {
  Vec phi, mu, r, g;
  double r_scalar = 0.0;
};

/// One unforced IEC step through the dense 3N block system.
inline Step iec_step(const Grid& g, const Params& p, const Aux& aux, double alpha, double L, double a1,
                     const Vec& phi, const Vec& r) {
  const int n = g.size();
  Vec P(n);
  for (int k = 0; k < n; ++k) P[k] = f(phi[k]) / aux.cp(aux.cinv(F(phi[k]) + a1));
  Dense m(3 * n);
  Vec b(3 * n, 0.0);
  for (int k = 0; k < n; ++k) {
    m(k, k) = 1.0 / p.dt;
    m(n + k, n + k) = 1.0;
    m(n + k, 2 * n + k) = -alpha * L * P[k];
    m(2 * n + k, k) = -P[k];
    m(2 * n + k, 2 * n + k) = 1.0;
    b[k] = phi[k] / p.dt;
    b[n + k] = aux.cp(r[k]) * P[k] - alpha * L * r[k] * P[k];
    b[2 * n + k] = r[k] - P[k] * phi[k];
  }
  put_minus_G(m, g, p, 0, n);
  put_eps_lap(m, g, p, n, 0);
  const Vec x = gauss_solve(m, b);
  Step s;
  s.phi.assign(x.begin(), x.begin() + n);
  s.mu.assign(x.begin() + n, x.begin() + 2 * n);
  s.r.assign(x.begin() + 2 * n, x.end());
  return s;
}

/// One unforced IEF step with g(r) = r^q through the dense 4N block system.
inline Step ief_step(const Grid& g, const Params& p, int q, double a1, const Vec& phi, const Vec& r, const Vec& gv) {
  const int n = g.size();
  Vec P(n), gp(n);
  for (int k = 0; k < n; ++k) {
    const double y = F(phi[k]) + a1;
    P[k] = f(phi[k]) / ((q + 1) * std::pow(y, static_cast<double>(q) / (q + 1)));
    gp[k] = q == 0 ? 0.0 : q * std::pow(r[k], q - 1);
  }
  Dense m(4 * n);
  Vec b(4 * n, 0.0);
  for (int k = 0; k < n; ++k) {
    m(k, k) = 1.0 / p.dt;
    m(n + k, n + k) = 1.0;
    m(n + k, 2 * n + k) = -gp[k] * P[k];
    m(n + k, 3 * n + k) = -P[k];
    m(2 * n + k, k) = -P[k];
    m(2 * n + k, 2 * n + k) = 1.0;
    m(3 * n + k, 2 * n + k) = -gp[k];
    m(3 * n + k, 3 * n + k) = 1.0;
    b[k] = phi[k] / p.dt;
    b[2 * n + k] = r[k] - P[k] * phi[k];
    b[3 * n + k] = gv[k] - gp[k] * r[k];
  }
  put_minus_G(m, g, p, 0, n);
  put_eps_lap(m, g, p, n, 0);
  const Vec x = gauss_solve(m, b);
  Step s;
  s.phi.assign(x.begin(), x.begin() + n);
  s.mu.assign(x.begin() + n, x.begin() + 2 * n);
  s.r.assign(x.begin() + 2 * n, x.begin() + 3 * n);
  s.g.assign(x.begin() + 3 * n, x.end());
  return s;
}

/// Classical IEQ step: mu = -eps^2 lap phi + 2 r P, r' - r = P (phi' - phi),
/// P = f / (2 sqrt(F + a1)). Solved densely in (phi, mu, r).
inline Step ieq_step(const Grid& g, const Params& p, double a1, const Vec& phi, const Vec& r,
                     const Vec* source = nullptr) {
  const int n = g.size();
  Vec P(n);
  for (int k = 0; k < n; ++k) P[k] = f(phi[k]) / (2.0 * std::sqrt(F(phi[k]) + a1));
  Dense m(3 * n);
  Vec b(3 * n, 0.0);
  for (int k = 0; k < n; ++k) {
    m(k, k) = 1.0 / p.dt;
    // mu - (-eps^2 lap phi) - 2 P r = 0
    m(n + k, n + k) = 1.0;
    m(n + k, 2 * n + k) = -2.0 * P[k];
    m(2 * n + k, k) = -P[k];
    m(2 * n + k, 2 * n + k) = 1.0;
    b[k] = phi[k] / p.dt + (source ? (*source)[k] : 0.0);
    b[2 * n + k] = r[k] - P[k] * phi[k];
  }
  put_minus_G(m, g, p, 0, n);
  put_eps_lap(m, g, p, n, 0);
  const Vec x = gauss_solve(m, b);
  Step s;
  s.phi.assign(x.begin(), x.begin() + n);
  s.mu.assign(x.begin() + n, x.begin() + 2 * n);
  s.r.assign(x.begin() + 2 * n, x.end());
  return s;
}

/// Classical SAV step with the scalar r = sqrt(E1 + a2):
///   mu = -eps^2 lap phi' + r' f(phi) / sqrt(E1(phi) + a2),
///   r' - r = (1 / (2 sqrt(E1(phi) + a2))) (f(phi), phi' - phi).
/// Unknowns (phi, mu, r) solved densely, 2N + 1 of them.
inline Step sav_step(const Grid& g, const Params& p, double a2, const Vec& phi, double r) {
  const int n = g.size();
  Vec Fv(n);
  for (int k = 0; k < n; ++k) Fv[k] = F(phi[k]);
  const double s = std::sqrt(sum_all(Fv) * g.h() * g.h() + a2);
  const double area = g.h() * g.h();
  Dense m(2 * n + 1);
  Vec b(2 * n + 1, 0.0);
  for (int k = 0; k < n; ++k) {
    m(k, k) = 1.0 / p.dt;
    m(n + k, n + k) = 1.0;
    m(n + k, 2 * n) = -f(phi[k]) / s;
    b[k] = phi[k] / p.dt;
    m(2 * n, k) = -f(phi[k]) * area / (2.0 * s);
    b[2 * n] += -f(phi[k]) * phi[k] * area / (2.0 * s);
  }
  m(2 * n, 2 * n) = 1.0;
  b[2 * n] += r;
  put_minus_G(m, g, p, 0, n);
  put_eps_lap(m, g, p, n, 0);
  const Vec x = gauss_solve(m, b);
  Step out;
  out.phi.assign(x.begin(), x.begin() + n);
  out.mu.assign(x.begin() + n, x.begin() + 2 * n);
  out.r_scalar = x[2 * n];
  return out;
}

inline double max_diff(const Vec& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

/// IEQ accuracy run for Allen-Cahn on an n x n grid against sin x cos y cos t with
/// the continuous-operator source, returning the L2 error at t_end. r and mu are
/// eliminated, leaving the SPD system
///   (I/dt + M(-eps^2 lap + 2 P^2)) phi' = phi/dt + S - 2 M P (r - P phi),
/// solved by sparse Cholesky.
inline double ieq_allen_cahn_error(int n, double dt, double t_end, double a1, const Params& p) {
  const Grid g{n};
  const int N = g.size();
  const double h = g.h();
  auto exact = [&](double t) {
    Vec v(N);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) v[g.at(i, j)] = std::sin(i * h) * std::cos(j * h) * std::cos(t);
    return v;
  };
  Vec phi = exact(0.0);
  Vec r(N);
  for (int k = 0; k < N; ++k) r[k] = std::sqrt(F(phi[k]) + a1);
  const long steps = std::lround(t_end / dt);
  const double w = 1.0 / (h * h);
  for (long s = 0; s < steps; ++s) {
    const double t1 = (s + 1) * dt;
    Vec P(N);
    for (int k = 0; k < N; ++k) P[k] = f(phi[k]) / (2.0 * std::sqrt(F(phi[k]) + a1));
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs(N);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int k = g.at(i, j);
        trip.emplace_back(k, k, 1.0 / dt + p.M * (4.0 * p.eps * p.eps * w + 2.0 * P[k] * P[k]));
        for (int nb : {g.at(i + 1, j), g.at(i - 1, j), g.at(i, j + 1), g.at(i, j - 1)})
          trip.emplace_back(k, nb, -p.M * p.eps * p.eps * w);
        const double pe = std::sin(i * h) * std::cos(j * h);
        const double phie = pe * std::cos(t1);
        const double mue = 2.0 * p.eps * p.eps * phie + f(phie);
        const double source = -pe * std::sin(t1) + p.M * mue;
        rhs[k] = phi[k] / dt + source - 2.0 * p.M * P[k] * (r[k] - P[k] * phi[k]);
      }
    Eigen::SparseMatrix<double> A(N, N);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("oracle factorization failed");
    Eigen::VectorXd x = ldlt.solve(rhs);
    // One refinement sweep keeps the oracle well below the comparison tolerance.
    x += ldlt.solve(rhs - A * x);
    for (int k = 0; k < N; ++k) {
      r[k] += P[k] * (x[k] - phi[k]);
      phi[k] = x[k];
    }
  }
  const Vec e = exact(t_end);
  Vec diff(N);
  for (int k = 0; k < N; ++k) diff[k] = phi[k] - e[k];
  return std::sqrt(dot(g, diff, diff));
}

}  // namespace oracle
