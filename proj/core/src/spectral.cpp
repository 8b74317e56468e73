#include "spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

#include "gradflow/errors.hpp"

namespace gradflow::detail {

namespace {

/// In-place 1-D transforms of every row (stride 1) or column (stride nx).
void transform_lines(std::vector<std::complex<double>>& data, int nx, int ny, bool along_x, bool inverse) {
  Eigen::FFT<double> fft;
  const int len = along_x ? nx : ny;
  const int lines = along_x ? ny : nx;
  std::vector<std::complex<double>> in(len);
  std::vector<std::complex<double>> out(len);
  for (int l = 0; l < lines; ++l) {
    for (int k = 0; k < len; ++k) in[k] = along_x ? data[l * nx + k] : data[k * nx + l];
    if (inverse)
      fft.inv(out, in);
    else
      fft.fwd(out, in);
    for (int k = 0; k < len; ++k) (along_x ? data[l * nx + k] : data[k * nx + l]) = out[k];
  }
}

}  // namespace

LaplacianSymbolInverse::LaplacianSymbolInverse(const GridSpec& grid, const std::function<double(double)>& symbol)
    : nx_(grid.nx()), ny_(grid.ny()), inverse_(grid.size()), work_(grid.size()) {
  const double cx = 4.0 / (grid.hx() * grid.hx());
  const double cy = 4.0 / (grid.hy() * grid.hy());
  for (int q = 0; q < ny_; ++q) {
    const double sy = std::sin(std::numbers::pi * q / ny_);
    for (int p = 0; p < nx_; ++p) {
      const double sx = std::sin(std::numbers::pi * p / nx_);
      const double value = symbol(-cx * sx * sx - cy * sy * sy);
      if (value == 0.0 || !std::isfinite(value)) throw SolverError("singular Fourier symbol", 0.0);
      inverse_[static_cast<std::size_t>(q) * nx_ + p] = 1.0 / value;
    }
  }
}

void LaplacianSymbolInverse::apply(std::span<const double> r, std::span<double> z) const {
  for (std::size_t k = 0; k < work_.size(); ++k) work_[k] = r[k];
  transform_lines(work_, nx_, ny_, true, false);
  transform_lines(work_, nx_, ny_, false, false);
  for (std::size_t k = 0; k < work_.size(); ++k) work_[k] *= inverse_[k];
  transform_lines(work_, nx_, ny_, false, true);
  transform_lines(work_, nx_, ny_, true, true);
  for (std::size_t k = 0; k < work_.size(); ++k) z[k] = work_[k].real();
}

}  // namespace gradflow::detail
