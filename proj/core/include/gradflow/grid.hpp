#pragma once

#include <cstddef>
#include <filesystem>
#include <numbers>
#include <span>
#include <vector>

namespace gradflow {

/// Uniform periodic grid on [0, lx) x [0, ly). Node (i, j) sits at (i*hx, j*hy)
/// and is stored at index j*nx + i.
class GridSpec {
 public:
  static constexpr double kTwoPi = 2.0 * std::numbers::pi;

  GridSpec(int nx, int ny, double lx = kTwoPi, double ly = kTwoPi);

  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  double lx() const noexcept { return lx_; }
  double ly() const noexcept { return ly_; }
  double hx() const noexcept { return lx_ / nx_; }
  double hy() const noexcept { return ly_ / ny_; }
  double cell_area() const noexcept { return hx() * hy(); }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
  }

  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(wrap(j, ny_)) * static_cast<std::size_t>(nx_) +
           static_cast<std::size_t>(wrap(i, nx_));
  }
  double x(int i) const noexcept { return i * hx(); }
  double y(int j) const noexcept { return j * hy(); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  static int wrap(int k, int n) noexcept { return ((k % n) + n) % n; }

  int nx_;
  int ny_;
  double lx_;
  double ly_;
};

/// Nodal scalar field on a GridSpec.
class Field {
 public:
  explicit Field(const GridSpec& grid, double value = 0.0);
  Field(const GridSpec& grid, std::vector<double> values);

  /// Samples fn(x, y) at every node.
  template <class Fn>
  static Field from_function(const GridSpec& grid, Fn&& fn) {
    Field out(grid);
    for (int j = 0; j < grid.ny(); ++j)
      for (int i = 0; i < grid.nx(); ++i) out(i, j) = fn(grid.x(i), grid.y(j));
    return out;
  }

  const GridSpec& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator[](std::size_t k) noexcept { return values_[k]; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }
  double& operator()(int i, int j) noexcept { return values_[grid_.index(i, j)]; }
  double operator()(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool all_finite() const noexcept;
  double max_abs() const noexcept;
  double min() const noexcept;
  double max() const noexcept;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s) noexcept;

  /// Pointwise map.
  template <class Fn>
  Field map(Fn&& fn) const {
    Field out(grid_);
    for (std::size_t k = 0; k < values_.size(); ++k) out.values_[k] = fn(values_[k]);
    return out;
  }

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);
/// Pointwise product.
Field hadamard(const Field& a, const Field& b);

void require_same_grid(const Field& a, const Field& b);

/// Neumaier-compensated sum; order-independent to ~1 ulp of the result.
double compensated_sum(std::span<const double> values);

/// Five-point periodic Laplacian.
Field laplacian(const Field& f);

/// Discrete L2 inner product sum(f*g)*hx*hy.
double inner(const Field& f, const Field& g);

/// sqrt(inner(f, f)).
double l2_norm(const Field& f);

/// Squared forward-difference gradient norm. Equals -inner(f, laplacian(f)).
double grad_sq_norm(const Field& f);

/// sum(f)*hx*hy.
double integrate(const Field& f);

/// Plain-text snapshot: "nx ny t" header then one value per line, 17 significant
/// digits, row-major.
void write_snapshot(const std::filesystem::path& path, const Field& f, double time);

struct Snapshot {
  Field field;
  double time;
};

Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace gradflow
