#include "gradflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "gradflow/errors.hpp"

namespace gradflow {

GridSpec::GridSpec(int nx, int ny, double lx, double ly) : nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
  if (nx < 4 || ny < 4) {
    throw ConfigError("grid needs at least 4 nodes per direction, got " + std::to_string(nx) +
                      "x" + std::to_string(ny));
  }
  if (!(lx > 0.0) || !(ly > 0.0)) throw ConfigError("grid lengths must be positive");
}

Field::Field(const GridSpec& grid, double value) : grid_(grid), values_(grid.size(), value) {}

Field::Field(const GridSpec& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw ShapeError("field has " + std::to_string(values_.size()) + " values, grid expects " +
                     std::to_string(grid_.size()));
  }
}

bool Field::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Field::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double Field::min() const noexcept { return *std::min_element(values_.begin(), values_.end()); }
double Field::max() const noexcept { return *std::max_element(values_.begin(), values_.end()); }

Field& Field::operator+=(const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

Field& Field::operator*=(double s) noexcept {
  for (double& v : values_) v *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

Field hadamard(const Field& a, const Field& b) {
  require_same_grid(a, b);
  Field out(a.grid());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] * b[k];
  return out;
}

void require_same_grid(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) {
    throw ShapeError("fields live on different grids (" + std::to_string(a.grid().nx()) + "x" +
                     std::to_string(a.grid().ny()) + " vs " + std::to_string(b.grid().nx()) +
                     "x" + std::to_string(b.grid().ny()) + ")");
  }
}

double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

Field laplacian(const Field& f) {
  const GridSpec& g = f.grid();
  const double ax = 1.0 / (g.hx() * g.hx());
  const double ay = 1.0 / (g.hy() * g.hy());
  Field out(g);
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double c = f(i, j);
      out(i, j) = (f(i + 1, j) + f(i - 1, j) - 2.0 * c) * ax + (f(i, j + 1) + f(i, j - 1) - 2.0 * c) * ay;
    }
  }
  return out;
}

double inner(const Field& f, const Field& g) {
  require_same_grid(f, g);
  std::vector<double> prod(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) prod[k] = f[k] * g[k];
  return compensated_sum(prod) * f.grid().cell_area();
}

double l2_norm(const Field& f) { return std::sqrt(inner(f, f)); }

double grad_sq_norm(const Field& f) {
  const GridSpec& g = f.grid();
  std::vector<double> terms(f.size());
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double dx = (f(i + 1, j) - f(i, j)) / g.hx();
      const double dy = (f(i, j + 1) - f(i, j)) / g.hy();
      terms[g.index(i, j)] = dx * dx + dy * dy;
    }
  }
  return compensated_sum(terms) * g.cell_area();
}

double integrate(const Field& f) { return compensated_sum(f.values()) * f.grid().cell_area(); }

void write_snapshot(const std::filesystem::path& path, const Field& f, double time) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open snapshot for writing: " + path.string());
  out << std::setprecision(17);
  out << f.grid().nx() << ' ' << f.grid().ny() << ' ' << time << '\n';
  for (double v : f.values()) out << v << '\n';
  if (!out) throw Error("failed writing snapshot: " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open snapshot: " + path.string());
  int nx = 0;
  int ny = 0;
  double t = 0.0;
  if (!(in >> nx >> ny >> t)) throw Error("malformed snapshot header in " + path.string());
  GridSpec grid(nx, ny);
  std::vector<double> values(grid.size());
  for (double& v : values) {
    if (!(in >> v)) throw Error("snapshot truncated: " + path.string());
  }
  return {Field(grid, std::move(values)), t};
}

}  // namespace gradflow
