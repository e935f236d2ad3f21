#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace potwell {

/// Interior nodes of the unit cube (0,1)^3 with homogeneous Dirichlet
/// boundary. Node (i,j,k) sits at ((i+1)h, (j+1)h, (k+1)h), h = 1/(m+1).
class GridSpec {
 public:
  explicit GridSpec(int m);

  int m() const { return m_; }
  double h() const { return 1.0 / (m_ + 1); }
  double cell_volume() const { return h() * h() * h(); }
  std::size_t size() const { return static_cast<std::size_t>(m_) * m_ * m_; }

  // x fastest
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(m_) * (j + static_cast<std::size_t>(m_) * k);
  }
  double coord(int i) const { return (i + 1) * h(); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  int m_;
};

/// Real field on the interior nodes, lexicographic order, boundary values
/// implicitly zero.
class ScalarField {
 public:
  explicit ScalarField(GridSpec grid);
  ScalarField(GridSpec grid, std::vector<double> values);

  template <class F>
  static ScalarField sample(GridSpec grid, F&& f) {
    ScalarField u(grid);
    const int m = grid.m();
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i)
          u.values_[grid.index(i, j, k)] = f(grid.coord(i), grid.coord(j), grid.coord(k));
    return u;
  }

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t n) const { return values_[n]; }
  double& operator[](std::size_t n) { return values_[n]; }

  bool is_finite() const;
  bool is_zero() const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double c);
  /// this += c * o
  ScalarField& axpy(double c, const ScalarField& o);

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double c, ScalarField a) { return a *= c; }
  friend ScalarField operator*(ScalarField a, double c) { return a *= c; }

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

/// Seven-point Dirichlet Laplacian.
ScalarField laplacian(const ScalarField& u);

/// Solves (Id - a*Laplacian) w = u exactly by sine-transform diagonalization.
ScalarField dirichlet_solve(const ScalarField& u, double a);

/// Solves -Laplacian w = u.
ScalarField inverse_laplacian(const ScalarField& u);

/// Discrete L2 pairing h^3 * sum u_i w_i.
double inner(const ScalarField& u, const ScalarField& w);

/// ||grad u||^2, defined as inner(u, -laplacian(u)).
double grad_sq(const ScalarField& u);

/// (h^3 sum |u_i|^q)^(1/q), q >= 1.
double norm_lq(const ScalarField& u, double q);

double norm_linf(const ScalarField& u);

/// Eigenvalue of -Laplacian for the sine mode (k1,k2,k3), modes 1-based.
double dirichlet_eigenvalue(const GridSpec& grid, int k1, int k2, int k3);

/// Smallest eigenvalue of -Laplacian, the discrete Poincare constant.
double min_eigenvalue(const GridSpec& grid);

/// prod_j sin(k_j pi x_j) sampled at the nodes.
ScalarField sine_mode(const GridSpec& grid, int k1, int k2, int k3);

// Checkpoint files: 32-byte little-endian header followed by m^3 f64 values.
//   "PWF1" | u32 m | u64 sample count | f64 time | 8 zero bytes
struct Checkpoint {
  ScalarField field;
  std::uint64_t sample_count = 0;
  double time = 0.0;
};

std::vector<std::uint8_t> encode_checkpoint(const ScalarField& u, std::uint64_t sample_count, double time);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes to a temporary sibling and renames into place.
void write_checkpoint(const std::filesystem::path& path, const ScalarField& u, std::uint64_t sample_count,
                      double time);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace potwell
