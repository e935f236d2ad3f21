#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "potwell/field.hpp"

namespace potwell {

/// S = integral of 1/|z| over the unit cube centred at the origin.
/// Computed once by adaptive quadrature and cached.
double self_constant();

/// Samples of the Newtonian kernel 1/|x| on the doubled (zero-padded)
/// lattice, with the origin cell replaced by the exact cell average S/h.
/// Weights include the h^3 quadrature factor. Immutable once built.
class KernelTable {
 public:
  explicit KernelTable(GridSpec grid);
  ~KernelTable();
  KernelTable(const KernelTable&) = delete;
  KernelTable& operator=(const KernelTable&) = delete;

  const GridSpec& grid() const { return grid_; }
  int padded_size() const { return 2 * grid_.m(); }
  double self_weight() const { return self_weight_; }

  /// h^3 K(r) for the lattice offset r = (dx,dy,dz), |d*| < m.
  double weight(int dx, int dy, int dz) const;

  /// Real-space weights on the padded lattice (offset d stored at d mod 2m).
  const std::vector<double>& weights() const { return weights_; }

 private:
  friend ScalarField convolve(const ScalarField& src, const KernelTable& table);

  GridSpec grid_;
  double self_weight_;
  std::vector<double> weights_;
  std::vector<std::complex<double>> spectrum_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

/// v_i = h^3 (sum_{j != i} src_j / |x_i - x_j| + src_i S/h), by zero-padded FFT.
ScalarField convolve(const ScalarField& src, const KernelTable& table);

/// Same sum, evaluated directly in O(N^2). Guarded to N <= max_nodes.
ScalarField convolve_direct(const ScalarField& src, const KernelTable& table, std::size_t max_nodes = 16 * 16 * 16);

/// |u|^p elementwise.
ScalarField abs_pow(const ScalarField& u, double p);

/// P(u) = integral of v(u)|u|^p = inner(convolve(|u|^p), |u|^p).
double potential_energy(const ScalarField& u, double p, const KernelTable& table);

}  // namespace potwell
