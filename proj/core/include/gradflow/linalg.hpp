#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace gradflow {

/// Compressed-row sparse matrix. Column indices are strictly increasing within each
/// row; explicitly stored zeros are kept so that assembled patterns stay fixed.
class SparseMatrix {
 public:
  struct Entry {
    int row;
    int col;
    double value;
  };

  SparseMatrix() = default;

  /// Duplicate (row, col) entries are summed.
  static SparseMatrix from_triplets(int nrows, int ncols, std::vector<Entry> entries);
  static SparseMatrix identity(int n);

  int rows() const noexcept { return nrows_; }
  int cols() const noexcept { return ncols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const int> row_offsets() const noexcept { return row_offsets_; }
  std::span<const int> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Stored value at (row, col), or 0.
  double coeff(int row, int col) const;

  /// Row-major dense copy, for debugging and oracles.
  std::vector<double> to_dense() const;

 private:
  int nrows_ = 0;
  int ncols_ = 0;
  std::vector<int> row_offsets_{0};
  std::vector<int> col_indices_;
  std::vector<double> values_;
};

/// y = m x.
std::vector<double> matvec(const SparseMatrix& m, std::span<const double> x);

double norm2(std::span<const double> v);

struct LinearSystem {
  SparseMatrix matrix;
  std::vector<double> rhs;

  /// Throws ShapeError unless the matrix is square and matches rhs.
  void validate() const;
};

struct SolveOptions {
  /// Accept x when ||Ax - b|| <= tol * max(1, ||b||).
  double tol = 1e-10;
  /// Upper bound on refinement sweeps after the initial direct solve.
  int max_iter = 10000;
};

struct SolveResult {
  std::vector<double> x;
  /// Achieved ||Ax - b||_2.
  double residual = 0.0;
  int refinements = 0;
};

/// Sparse LU factorization of a square matrix, reusable for several right-hand sides.
class SparseLuSolver {
 public:
  explicit SparseLuSolver(const SparseMatrix& matrix);
  ~SparseLuSolver();
  SparseLuSolver(SparseLuSolver&&) noexcept;
  SparseLuSolver& operator=(SparseLuSolver&&) noexcept;

  /// Solves with iterative refinement until the residual contract holds. Throws
  /// SolverError carrying the achieved residual otherwise.
  SolveResult solve(std::span<const double> rhs, const SolveOptions& options = {}) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SolveResult solve(const LinearSystem& system, const SolveOptions& options = {});

/// a * b.
SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);

/// z = M^{-1} r for some approximation M of the system matrix.
using Preconditioner = std::function<void(std::span<const double> r, std::span<double> z)>;

/// Preconditioned BiCGSTAB under the same residual contract as the direct solve;
/// max_iter bounds the Krylov iterations. Falls back to SparseLuSolver when the
/// iteration stalls, so a returned result always meets the bound.
SolveResult solve_krylov(const SparseMatrix& matrix, std::span<const double> rhs,
                         const Preconditioner& preconditioner, const SolveOptions& options = {});

}  // namespace gradflow
