#include "gradflow/linalg.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <string>

#include "gradflow/errors.hpp"
#include "gradflow/grid.hpp"

namespace gradflow {

SparseMatrix SparseMatrix::from_triplets(int nrows, int ncols, std::vector<Entry> entries) {
  if (nrows < 0 || ncols < 0) throw ShapeError("negative matrix dimensions");
  for (const Entry& e : entries) {
    if (e.row < 0 || e.row >= nrows || e.col < 0 || e.col >= ncols) {
      throw ShapeError("triplet (" + std::to_string(e.row) + ", " + std::to_string(e.col) +
                       ") outside " + std::to_string(nrows) + "x" + std::to_string(ncols));
    }
    if (!std::isfinite(e.value)) throw ShapeError("non-finite matrix entry");
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix m;
  m.nrows_ = nrows;
  m.ncols_ = ncols;
  m.row_offsets_.assign(static_cast<std::size_t>(nrows) + 1, 0);
  m.col_indices_.reserve(entries.size());
  m.values_.reserve(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const Entry& e = entries[k];
    if (!m.col_indices_.empty() && k > 0 && entries[k - 1].row == e.row && entries[k - 1].col == e.col) {
      m.values_.back() += e.value;
      continue;
    }
    m.col_indices_.push_back(e.col);
    m.values_.push_back(e.value);
    ++m.row_offsets_[static_cast<std::size_t>(e.row) + 1];
  }
  for (int r = 0; r < nrows; ++r) m.row_offsets_[r + 1] += m.row_offsets_[r];
  return m;
}

SparseMatrix SparseMatrix::identity(int n) {
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) entries.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(entries));
}

double SparseMatrix::coeff(int row, int col) const {
  const auto begin = col_indices_.begin() + row_offsets_[row];
  const auto end = col_indices_.begin() + row_offsets_[row + 1];
  const auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

std::vector<double> SparseMatrix::to_dense() const {
  std::vector<double> dense(static_cast<std::size_t>(nrows_) * static_cast<std::size_t>(ncols_), 0.0);
  for (int r = 0; r < nrows_; ++r)
    for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
      dense[static_cast<std::size_t>(r) * ncols_ + col_indices_[k]] = values_[k];
  return dense;
}

std::vector<double> matvec(const SparseMatrix& m, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(m.cols())) {
    throw ShapeError("matvec: vector of length " + std::to_string(x.size()) + " for " +
                     std::to_string(m.cols()) + " columns");
  }
  const auto offsets = m.row_offsets();
  const auto cols = m.col_indices();
  const auto vals = m.values();
  std::vector<double> y(static_cast<std::size_t>(m.rows()), 0.0);
  for (int r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    for (int k = offsets[r]; k < offsets[r + 1]; ++k) acc += vals[k] * x[cols[k]];
    y[r] = acc;
  }
  return y;
}

double norm2(std::span<const double> v) {
  std::vector<double> sq(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) sq[k] = v[k] * v[k];
  return std::sqrt(compensated_sum(sq));
}

void LinearSystem::validate() const {
  if (matrix.rows() != matrix.cols()) throw ShapeError("linear system matrix is not square");
  if (rhs.size() != static_cast<std::size_t>(matrix.rows())) {
    throw ShapeError("right-hand side length " + std::to_string(rhs.size()) + " does not match " +
                     std::to_string(matrix.rows()) + " rows");
  }
}

namespace {

using EigenMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

EigenMatrix to_eigen(const SparseMatrix& m) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(m.nnz());
  const auto offsets = m.row_offsets();
  const auto cols = m.col_indices();
  const auto vals = m.values();
  for (int r = 0; r < m.rows(); ++r)
    for (int k = offsets[r]; k < offsets[r + 1]; ++k) triplets.emplace_back(r, cols[k], vals[k]);
  EigenMatrix out(m.rows(), m.cols());
  out.setFromTriplets(triplets.begin(), triplets.end());
  out.makeCompressed();
  return out;
}

/// Adapts a Preconditioner callback to Eigen's preconditioner concept.
class CallbackPreconditioner {
 public:
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  CallbackPreconditioner() = default;
  template <class M>
  explicit CallbackPreconditioner(const M&) {}

  void set(const Preconditioner* fn) { fn_ = fn; }

  template <class M>
  CallbackPreconditioner& analyzePattern(const M&) { return *this; }
  template <class M>
  CallbackPreconditioner& factorize(const M&) { return *this; }
  template <class M>
  CallbackPreconditioner& compute(const M&) { return *this; }

  template <class Rhs>
  Eigen::VectorXd solve(const Rhs& b) const {
    const Eigen::VectorXd r = b;
    Eigen::VectorXd z(r.size());
    (*fn_)(std::span<const double>(r.data(), r.size()), std::span<double>(z.data(), z.size()));
    return z;
  }

  Eigen::ComputationInfo info() const { return Eigen::Success; }

 private:
  const Preconditioner* fn_ = nullptr;
};

}  // namespace

struct SparseLuSolver::Impl {
  SparseMatrix matrix;
  EigenMatrix eigen;
  Eigen::SparseLU<EigenMatrix, Eigen::COLAMDOrdering<int>> lu;
};

SparseLuSolver::SparseLuSolver(const SparseMatrix& matrix) : impl_(std::make_unique<Impl>()) {
  if (matrix.rows() != matrix.cols()) throw ShapeError("cannot factorize a non-square matrix");
  impl_->matrix = matrix;
  impl_->eigen = to_eigen(matrix);
  impl_->lu.analyzePattern(impl_->eigen);
  impl_->lu.factorize(impl_->eigen);
  if (impl_->lu.info() != Eigen::Success) {
    throw SolverError("sparse LU factorization failed (matrix singular or numerically broken)",
                      std::numeric_limits<double>::infinity());
  }
}

SparseLuSolver::~SparseLuSolver() = default;
SparseLuSolver::SparseLuSolver(SparseLuSolver&&) noexcept = default;
SparseLuSolver& SparseLuSolver::operator=(SparseLuSolver&&) noexcept = default;

SolveResult SparseLuSolver::solve(std::span<const double> rhs, const SolveOptions& options) const {
  if (!(options.tol > 0.0)) throw ConfigError("solver tolerance must be positive");
  const int n = impl_->matrix.rows();
  if (rhs.size() != static_cast<std::size_t>(n)) throw ShapeError("right-hand side length mismatch");

  const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
  Eigen::VectorXd x = impl_->lu.solve(b);
  if (impl_->lu.info() != Eigen::Success) {
    throw SolverError("sparse LU back-substitution failed", std::numeric_limits<double>::infinity());
  }

  const double bound = options.tol * std::max(1.0, norm2(rhs));
  SolveResult result;
  auto residual_vector = [&](const Eigen::VectorXd& guess) {
    const std::vector<double> ax = matvec(impl_->matrix, std::span<const double>(guess.data(), n));
    Eigen::VectorXd res(n);
    for (int i = 0; i < n; ++i) res[i] = rhs[i] - ax[i];
    return res;
  };
  Eigen::VectorXd res = residual_vector(x);
  result.residual = norm2(std::span<const double>(res.data(), n));
  while (!(result.residual <= bound) && result.refinements < options.max_iter) {
    if (!std::isfinite(result.residual)) break;
    x += impl_->lu.solve(res);
    res = residual_vector(x);
    const double next = norm2(std::span<const double>(res.data(), n));
    ++result.refinements;
    // Refinement has stalled; further sweeps cannot reach the bound.
    if (next >= result.residual && result.refinements > 3) {
      result.residual = next;
      break;
    }
    result.residual = next;
  }
  if (!(result.residual <= bound)) {
    throw SolverError("linear solve did not reach the residual bound " + std::to_string(bound) +
                          " (achieved " + std::to_string(result.residual) + ")",
                      result.residual);
  }
  result.x.assign(x.data(), x.data() + n);
  return result;
}

SolveResult solve(const LinearSystem& system, const SolveOptions& options) {
  system.validate();
  return SparseLuSolver(system.matrix).solve(system.rhs, options);
}

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("multiply: inner dimensions differ");
  const EigenMatrix product = (to_eigen(a) * to_eigen(b)).pruned(0.0);
  std::vector<SparseMatrix::Entry> entries;
  entries.reserve(static_cast<std::size_t>(product.nonZeros()));
  for (int c = 0; c < product.outerSize(); ++c)
    for (EigenMatrix::InnerIterator it(product, c); it; ++it)
      entries.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), it.value()});
  return SparseMatrix::from_triplets(a.rows(), b.cols(), std::move(entries));
}

SolveResult solve_krylov(const SparseMatrix& matrix, std::span<const double> rhs,
                         const Preconditioner& preconditioner, const SolveOptions& options) {
  if (!(options.tol > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (matrix.rows() != matrix.cols()) throw ShapeError("cannot solve a non-square system");
  const int n = matrix.rows();
  if (rhs.size() != static_cast<std::size_t>(n)) throw ShapeError("right-hand side length mismatch");
  if (!preconditioner) throw ConfigError("solve_krylov needs a preconditioner");

  const double bnorm = norm2(rhs);
  const double bound = options.tol * std::max(1.0, bnorm);
  const EigenMatrix a = to_eigen(matrix);
  Eigen::BiCGSTAB<EigenMatrix, CallbackPreconditioner> krylov;
  krylov.preconditioner().set(&preconditioner);
  krylov.compute(a);
  // Eigen measures |r| / |b|; ask for a little more than the contract needs.
  krylov.setTolerance(bnorm > 0.0 ? 0.5 * bound / bnorm : options.tol);
  krylov.setMaxIterations(std::max(options.max_iter, 1));
  const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
  const Eigen::VectorXd x = krylov.solve(b);

  SolveResult result;
  result.x.assign(x.data(), x.data() + n);
  result.refinements = static_cast<int>(krylov.iterations());
  std::vector<double> res = matvec(matrix, result.x);
  for (int i = 0; i < n; ++i) res[i] -= rhs[i];
  result.residual = norm2(res);
  if (result.residual <= bound && std::isfinite(result.residual)) return result;
  return SparseLuSolver(matrix).solve(rhs, options);
}

}  // namespace gradflow
