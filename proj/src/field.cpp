#include "potwell/field.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "fftw_util.hpp"

namespace potwell {

GridSpec::GridSpec(int m) : m_(m) {
  if (m < 4) throw std::invalid_argument("GridSpec: need m >= 4, got " + std::to_string(m));
}

ScalarField::ScalarField(GridSpec grid) : grid_(grid), values_(grid.size(), 0.0) {}

ScalarField::ScalarField(GridSpec grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw std::invalid_argument("ScalarField: expected " + std::to_string(grid_.size()) + " values, got " +
                                std::to_string(values_.size()));
}

bool ScalarField::is_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

bool ScalarField::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return x == 0.0; });
}

namespace {

void require_same_grid(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument("field grid mismatch");
}

}  // namespace

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(*this, o);
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += o.values_[n];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(*this, o);
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] -= o.values_[n];
  return *this;
}

ScalarField& ScalarField::operator*=(double c) {
  for (double& x : values_) x *= c;
  return *this;
}

ScalarField& ScalarField::axpy(double c, const ScalarField& o) {
  require_same_grid(*this, o);
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += c * o.values_[n];
  return *this;
}

ScalarField laplacian(const ScalarField& u) {
  const GridSpec& g = u.grid();
  const int m = g.m();
  const double inv_h2 = 1.0 / (g.h() * g.h());
  const std::size_t sx = 1, sy = static_cast<std::size_t>(m), sz = static_cast<std::size_t>(m) * m;
  ScalarField out(g);
  auto in = u.values();
  auto res = out.values();
  for (int k = 0; k < m; ++k) {
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < m; ++i) {
        const std::size_t n = g.index(i, j, k);
        double acc = -6.0 * in[n];
        if (i > 0) acc += in[n - sx];
        if (i < m - 1) acc += in[n + sx];
        if (j > 0) acc += in[n - sy];
        if (j < m - 1) acc += in[n + sy];
        if (k > 0) acc += in[n - sz];
        if (k < m - 1) acc += in[n + sz];
        res[n] = acc * inv_h2;
      }
    }
  }
  return out;
}

namespace {

// DST-I (FFTW_RODFT00) plans, one per grid size. Plans live for the whole
// process.
fftw_plan sine_plan(int m) {
  static std::map<int, fftw_plan> cache;
  std::lock_guard lock(detail::planner_mutex());
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;
  const std::size_t n = static_cast<std::size_t>(m) * m * m;
  auto a = detail::alloc_real(n);
  auto b = detail::alloc_real(n);
  fftw_plan p = fftw_plan_r2r_3d(m, m, m, a.get(), b.get(), FFTW_RODFT00, FFTW_RODFT00, FFTW_RODFT00,
                                 FFTW_ESTIMATE);
  if (!p) throw std::runtime_error("fftw: failed to plan sine transform");
  cache.emplace(m, p);
  return p;
}

// Applies w = S^{-1} diag(mult(lambda_k)) S u, where S is the 3-D sine
// transform and lambda_k the eigenvalues of -Laplacian.
template <class Mult>
ScalarField spectral_apply(const ScalarField& u, Mult mult) {
  const GridSpec& g = u.grid();
  const int m = g.m();
  const std::size_t n = g.size();
  fftw_plan plan = sine_plan(m);

  auto buf = detail::alloc_real(n);
  auto spec = detail::alloc_real(n);
  std::copy(u.values().begin(), u.values().end(), buf.get());
  fftw_execute_r2r(plan, buf.get(), spec.get());

  std::vector<double> lam1(m);
  const double h = g.h();
  for (int k = 0; k < m; ++k) lam1[k] = 2.0 / (h * h) * (1.0 - std::cos((k + 1) * std::numbers::pi * h));
  // unnormalized DST-I applied twice scales by 2(m+1) per axis
  const double scale = 1.0 / std::pow(2.0 * (m + 1), 3);
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        const std::size_t idx = g.index(i, j, k);
        spec[idx] *= mult(lam1[i] + lam1[j] + lam1[k]) * scale;
      }

  fftw_execute_r2r(plan, spec.get(), buf.get());
  ScalarField w(g);
  std::copy(buf.get(), buf.get() + n, w.values().begin());
  return w;
}

}  // namespace

ScalarField dirichlet_solve(const ScalarField& u, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("dirichlet_solve: a must be positive");
  return spectral_apply(u, [a](double lam) { return 1.0 / (1.0 + a * lam); });
}

ScalarField inverse_laplacian(const ScalarField& u) {
  return spectral_apply(u, [](double lam) { return 1.0 / lam; });
}

double inner(const ScalarField& u, const ScalarField& w) {
  require_same_grid(u, w);
  auto a = u.values();
  auto b = w.values();
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += a[n] * b[n];
  return s * u.grid().cell_volume();
}

double grad_sq(const ScalarField& u) {
  ScalarField neg = laplacian(u);
  neg *= -1.0;
  return inner(u, neg);
}

double norm_lq(const ScalarField& u, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("norm_lq: q must be >= 1");
  double s = 0.0;
  if (q == 2.0) {
    for (double x : u.values()) s += x * x;
    return std::sqrt(s * u.grid().cell_volume());
  }
  for (double x : u.values()) s += std::pow(std::abs(x), q);
  return std::pow(s * u.grid().cell_volume(), 1.0 / q);
}

double norm_linf(const ScalarField& u) {
  double mx = 0.0;
  for (double x : u.values()) mx = std::max(mx, std::abs(x));
  return mx;
}

double dirichlet_eigenvalue(const GridSpec& grid, int k1, int k2, int k3) {
  const double h = grid.h();
  auto one = [h](int k) { return 2.0 / (h * h) * (1.0 - std::cos(k * std::numbers::pi * h)); };
  return one(k1) + one(k2) + one(k3);
}

double min_eigenvalue(const GridSpec& grid) { return dirichlet_eigenvalue(grid, 1, 1, 1); }

ScalarField sine_mode(const GridSpec& grid, int k1, int k2, int k3) {
  using std::numbers::pi;
  return ScalarField::sample(grid, [=](double x, double y, double z) {
    return std::sin(k1 * pi * x) * std::sin(k2 * pi * y) * std::sin(k3 * pi * z);
  });
}

}  // namespace potwell
