#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gradflow/errors.hpp"
#include "gradflow/linalg.hpp"
#include "oracles.hpp"

using namespace gradflow;

namespace {

// Diagonally dominant random sparse matrix with a few off-diagonal entries per row.
SparseMatrix random_matrix(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> col(0, n - 1);
  std::vector<SparseMatrix::Entry> e;
  for (int i = 0; i < n; ++i) {
    e.push_back({i, i, 6.0 + u(rng)});
    for (int k = 0; k < 4; ++k) e.push_back({i, col(rng), u(rng)});
  }
  return SparseMatrix::from_triplets(n, n, e);
}

oracle::Dense dense_of(const SparseMatrix& m) {
  oracle::Dense d(m.rows());
  d.a = m.to_dense();
  return d;
}

}  // namespace

TEST(Linalg, TripletsSumDuplicatesAndSort) {
  const SparseMatrix m = SparseMatrix::from_triplets(2, 3, {{1, 2, 1.0}, {0, 1, 2.0}, {1, 2, 3.0}, {0, 0, -1.0}});
  EXPECT_EQ(m.nnz(), 3u);
  EXPECT_DOUBLE_EQ(m.coeff(1, 2), 4.0);
  EXPECT_DOUBLE_EQ(m.coeff(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(m.coeff(1, 0), 0.0);
  const auto cols = m.col_indices();
  EXPECT_EQ(cols[0], 0);
  EXPECT_EQ(cols[1], 1);
  EXPECT_THROW(SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), ShapeError);
  EXPECT_THROW(SparseMatrix::from_triplets(2, 2, {{0, 0, std::nan("")}}), ShapeError);
}

TEST(Linalg, MatvecMatchesDense) {
  const SparseMatrix m = random_matrix(30, 1);
  std::vector<double> x(30);
  for (int i = 0; i < 30; ++i) x[i] = std::cos(i);
  const auto y = matvec(m, x);
  const auto expect = oracle::dense_matvec(dense_of(m), x);
  for (int i = 0; i < 30; ++i) EXPECT_NEAR(y[i], expect[i], 1e-13);
}

TEST(Linalg, MultiplyMatchesDense) {
  const SparseMatrix a = random_matrix(12, 2);
  const SparseMatrix b = random_matrix(12, 3);
  const SparseMatrix c = multiply(a, b);
  const auto da = a.to_dense();
  const auto db = b.to_dense();
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) {
      double s = 0.0;
      for (int k = 0; k < 12; ++k) s += da[i * 12 + k] * db[k * 12 + j];
      EXPECT_NEAR(c.coeff(i, j), s, 1e-13);
    }
  EXPECT_THROW(multiply(a, SparseMatrix::identity(5)), ShapeError);
}

TEST(Linalg, SparseLuAgreesWithGaussianElimination) {
  for (unsigned seed = 0; seed < 5; ++seed) {
    const SparseMatrix m = random_matrix(40, seed);
    std::vector<double> b(40);
    for (int i = 0; i < 40; ++i) b[i] = std::sin(i + seed);
    const SolveResult r = solve({m, b});
    const auto x = oracle::gauss_solve(dense_of(m), b);
    EXPECT_LT(oracle::max_diff(x, r.x), 1e-12);
    EXPECT_LE(r.residual, 1e-10 * std::max(1.0, norm2(b)));
  }
}

TEST(Linalg, SolverReusesFactorization) {
  const SparseMatrix m = random_matrix(20, 9);
  const SparseLuSolver lu(m);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> b(20, trial + 1.0);
    const auto x = lu.solve(b).x;
    const auto ax = matvec(m, x);
    for (int i = 0; i < 20; ++i) EXPECT_NEAR(ax[i], b[i], 1e-11);
  }
}

TEST(Linalg, SingularAndMismatchedSystems) {
  const SparseMatrix singular = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}});
  EXPECT_THROW(solve({singular, {1.0, 2.0}}), SolverError);
  EXPECT_THROW(solve({SparseMatrix::identity(3), {1.0}}), ShapeError);
  EXPECT_THROW(solve({SparseMatrix::from_triplets(2, 3, {}), {1.0, 2.0}}), ShapeError);
  EXPECT_THROW(SparseLuSolver(SparseMatrix::identity(2)).solve(std::vector<double>{1, 1}, {0.0, 10}), ConfigError);
}

TEST(Linalg, SolverErrorCarriesResidual) {
  try {
    solve({SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}}), {1.0, 1.0}});
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_FALSE(std::isnan(e.residual()));
  }
}

TEST(Linalg, KrylovMeetsContract) {
  const SparseMatrix m = random_matrix(60, 4);
  std::vector<double> b(60);
  for (int i = 0; i < 60; ++i) b[i] = 1.0 + 0.1 * i;
  // Jacobi preconditioner.
  const Preconditioner jacobi = [&](std::span<const double> r, std::span<double> z) {
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / m.coeff(static_cast<int>(i), static_cast<int>(i));
  };
  const SolveResult r = solve_krylov(m, b, jacobi, {1e-12, 500});
  EXPECT_LE(r.residual, 1e-12 * norm2(b));
  const auto x = oracle::gauss_solve(dense_of(m), b);
  EXPECT_LT(oracle::max_diff(x, r.x), 1e-10);
}

TEST(Linalg, KrylovFallsBackWhenStarved) {
  const SparseMatrix m = random_matrix(40, 6);
  std::vector<double> b(40, 1.0);
  const Preconditioner identity = [](std::span<const double> r, std::span<double> z) {
    std::copy(r.begin(), r.end(), z.begin());
  };
  const SolveResult r = solve_krylov(m, b, identity, {1e-12, 1});
  EXPECT_LE(r.residual, 1e-12 * norm2(b));
  EXPECT_THROW(solve_krylov(m, b, Preconditioner{}), ConfigError);
}

TEST(LinalgExamples, TrivialSystems) {
  const std::vector<double> b = {1.5, -2.0, 3.25};
  EXPECT_EQ(solve({SparseMatrix::identity(3), b}).x, b);
  const SparseMatrix d = SparseMatrix::from_triplets(3, 3, {{0, 0, 2.0}, {1, 1, 2.0}, {2, 2, 2.0}});
  for (double x : solve({d, {4.0, 4.0, 4.0}}).x) EXPECT_DOUBLE_EQ(x, 2.0);
  EXPECT_EQ(matvec(SparseMatrix::identity(3), b), b);
  for (double y : matvec(SparseMatrix::from_triplets(3, 3, {}), b)) EXPECT_EQ(y, 0.0);
}

TEST(LinalgExamples, RandomTenByTenMatvec) {
  const SparseMatrix m = random_matrix(10, 77);
  const std::vector<double> x = {1, -2, 3, -4, 5, -6, 7, -8, 9, -10};
  EXPECT_LT(oracle::max_diff(oracle::dense_matvec(dense_of(m), x), matvec(m, x)), 1e-13);
}
