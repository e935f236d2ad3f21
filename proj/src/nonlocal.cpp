#include "potwell/nonlocal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "fftw_util.hpp"

namespace potwell {

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, 40);
}

double compute_self_constant() {
  // Octant symmetry gives 48 copies of the wedge 0 <= z <= y <= x <= 1/2.
  // With y = x a, z = x b the corner singularity cancels against the
  // Jacobian x^2, leaving 6 * int_0^1 int_0^a (1 + a^2 + b^2)^(-1/2) db da.
  auto inner = [](double a) {
    const double c = 1.0 + a * a;
    if (a == 0.0) return 0.0;
    return adaptive_simpson([c](double b) { return 1.0 / std::sqrt(c + b * b); }, 0.0, a, 1e-15);
  };
  return 6.0 * adaptive_simpson(inner, 0.0, 1.0, 1e-14);
}

}  // namespace

double self_constant() {
  static const double s = compute_self_constant();
  return s;
}

struct KernelTable::Plans {
  detail::Plan forward;
  detail::Plan backward;
};

KernelTable::KernelTable(GridSpec grid) : grid_(grid), plans_(std::make_unique<Plans>()) {
  const int m = grid_.m();
  const int n = 2 * m;
  const double h = grid_.h();
  self_weight_ = self_constant() / h;

  const std::size_t total = static_cast<std::size_t>(n) * n * n;
  weights_.assign(total, 0.0);
  auto wrap = [n, m](int q) { return q < m ? q : q - n; };
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t idx = static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * (j + static_cast<std::size_t>(n) * k);
        // offset m never occurs between interior nodes
        if (i == m || j == m || k == m) continue;
        const int dx = wrap(i), dy = wrap(j), dz = wrap(k);
        if (dx == 0 && dy == 0 && dz == 0) {
          weights_[idx] = h * h * h * self_weight_;
        } else {
          weights_[idx] = h * h / std::sqrt(double(dx * dx + dy * dy + dz * dz));
        }
      }

  const std::size_t ncomplex = static_cast<std::size_t>(n) * n * (n / 2 + 1);
  auto real = detail::alloc_real(total);
  auto cplx = detail::alloc_complex(ncomplex);
  {
    std::lock_guard lock(detail::planner_mutex());
    plans_->forward = detail::Plan(fftw_plan_dft_r2c_3d(n, n, n, real.get(), cplx.get(), FFTW_ESTIMATE));
    plans_->backward = detail::Plan(fftw_plan_dft_c2r_3d(n, n, n, cplx.get(), real.get(), FFTW_ESTIMATE));
  }
  if (!plans_->forward.get() || !plans_->backward.get()) throw std::runtime_error("fftw: failed to plan convolution");

  std::copy(weights_.begin(), weights_.end(), real.get());
  fftw_execute_dft_r2c(plans_->forward.get(), real.get(), cplx.get());
  spectrum_.resize(ncomplex);
  const double norm = 1.0 / static_cast<double>(total);
  for (std::size_t q = 0; q < ncomplex; ++q) spectrum_[q] = std::complex<double>(cplx[q][0], cplx[q][1]) * norm;
}

KernelTable::~KernelTable() = default;

double KernelTable::weight(int dx, int dy, int dz) const {
  const int m = grid_.m();
  if (std::abs(dx) >= m || std::abs(dy) >= m || std::abs(dz) >= m)
    throw std::out_of_range("KernelTable::weight: offset outside the lattice");
  const int n = 2 * m;
  auto idx = [n](int d) { return static_cast<std::size_t>(d < 0 ? d + n : d); };
  return weights_[idx(dx) + static_cast<std::size_t>(n) * (idx(dy) + static_cast<std::size_t>(n) * idx(dz))];
}

ScalarField convolve(const ScalarField& src, const KernelTable& table) {
  if (!(src.grid() == table.grid())) throw std::invalid_argument("convolve: grid mismatch with kernel table");
  const GridSpec& g = src.grid();
  const int m = g.m();
  const int n = 2 * m;
  const std::size_t total = static_cast<std::size_t>(n) * n * n;
  const std::size_t ncomplex = static_cast<std::size_t>(n) * n * (n / 2 + 1);

  auto real = detail::alloc_real(total);
  auto cplx = detail::alloc_complex(ncomplex);
  std::fill(real.get(), real.get() + total, 0.0);
  auto pad = [n](int i, int j, int k) {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * (j + static_cast<std::size_t>(n) * k);
  };
  auto in = src.values();
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) real[pad(i, j, k)] = in[g.index(i, j, k)];

  fftw_execute_dft_r2c(table.plans_->forward.get(), real.get(), cplx.get());
  for (std::size_t q = 0; q < ncomplex; ++q) {
    const std::complex<double> c = std::complex<double>(cplx[q][0], cplx[q][1]) * table.spectrum_[q];
    cplx[q][0] = c.real();
    cplx[q][1] = c.imag();
  }
  fftw_execute_dft_c2r(table.plans_->backward.get(), cplx.get(), real.get());

  ScalarField out(g);
  auto res = out.values();
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) res[g.index(i, j, k)] = real[pad(i, j, k)];
  return out;
}

ScalarField convolve_direct(const ScalarField& src, const KernelTable& table, std::size_t max_nodes) {
  if (!(src.grid() == table.grid())) throw std::invalid_argument("convolve_direct: grid mismatch with kernel table");
  const GridSpec& g = src.grid();
  if (g.size() > max_nodes)
    throw std::length_error("convolve_direct: " + std::to_string(g.size()) + " nodes exceeds guard of " +
                            std::to_string(max_nodes));
  const int m = g.m();
  ScalarField out(g);
  auto in = src.values();
  auto res = out.values();
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int kk = 0; kk < m; ++kk)
          for (int jj = 0; jj < m; ++jj)
            for (int ii = 0; ii < m; ++ii) acc += table.weight(i - ii, j - jj, k - kk) * in[g.index(ii, jj, kk)];
        res[g.index(i, j, k)] = acc;
      }
  return out;
}

ScalarField abs_pow(const ScalarField& u, double p) {
  ScalarField out(u.grid());
  auto in = u.values();
  auto res = out.values();
  if (p == 2.0) {
    for (std::size_t n = 0; n < in.size(); ++n) res[n] = in[n] * in[n];
  } else {
    for (std::size_t n = 0; n < in.size(); ++n) res[n] = std::pow(std::abs(in[n]), p);
  }
  return out;
}

double potential_energy(const ScalarField& u, double p, const KernelTable& table) {
  if (!(p > 1.0)) throw std::invalid_argument("potential_energy: need p > 1");
  const ScalarField up = abs_pow(u, p);
  return inner(convolve(up, table), up);
}

}  // namespace potwell
