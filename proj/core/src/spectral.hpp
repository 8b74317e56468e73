#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "gradflow/grid.hpp"

namespace gradflow::detail {

/// Inverse of a periodic operator that is a function of the five-point Laplacian,
/// applied exactly through the 2-D discrete Fourier transform.
class LaplacianSymbolInverse {
 public:
  /// `symbol` maps a Laplacian eigenvalue (<= 0) to the operator's eigenvalue, which
  /// must be nonzero for every mode.
  LaplacianSymbolInverse(const GridSpec& grid, const std::function<double(double)>& symbol);

  void apply(std::span<const double> r, std::span<double> z) const;

 private:
  int nx_;
  int ny_;
  std::vector<double> inverse_;
  mutable std::vector<std::complex<double>> work_;
};

}  // namespace gradflow::detail
