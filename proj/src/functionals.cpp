#include "potwell/functionals.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace potwell {

ModelParams::ModelParams(double p) : p_(p) {
  constexpr double p_crit = (n + 2.0) / (n - 2.0);
  if (!(p > 1.0 && p < p_crit))
    throw std::invalid_argument("ModelParams: need 1 < p < " + std::to_string(p_crit) + ", got " + std::to_string(p));
  well_posed_q_ok_ = (p - 1.0) * (2.0 - 1.0 / p) < 4.0 / (n - 2.0);
}

double energy_J(const ScalarField& u, const ModelParams& params, const KernelTable& table) {
  const double p = params.p();
  return 0.5 * grad_sq(u) - potential_energy(u, p, table) / (2.0 * p);
}

double nehari_I(const ScalarField& u, const ModelParams& params, const KernelTable& table) {
  return nehari_I_delta(u, 1.0, params, table);
}

double nehari_I_delta(const ScalarField& u, double delta, const ModelParams& params, const KernelTable& table) {
  if (!(delta > 0.0)) throw std::invalid_argument("nehari_I_delta: delta must be positive");
  return delta * grad_sq(u) - potential_energy(u, params.p(), table);
}

double lambda_scale(double delta, const ScalarField& u, const ModelParams& params, const KernelTable& table) {
  if (!(delta > 0.0)) throw std::invalid_argument("lambda_scale: delta must be positive");
  if (u.is_zero()) throw std::invalid_argument("lambda_scale: undefined for the zero field");
  const double p = params.p();
  const double g = grad_sq(u);
  const double pe = potential_energy(u, p, table);
  return std::pow(delta * g / pe, 1.0 / (2.0 * p - 2.0));
}

ScalarField nonlocal_source(const ScalarField& u, const ScalarField& v, const ModelParams& params) {
  const double pm1 = params.p() - 1.0;
  ScalarField out(u.grid());
  auto in = u.values();
  auto vv = v.values();
  auto res = out.values();
  if (params.p() == 2.0) {
    for (std::size_t n = 0; n < in.size(); ++n) res[n] = vv[n] * in[n];
  } else {
    for (std::size_t n = 0; n < in.size(); ++n) {
      const double x = in[n];
      res[n] = x == 0.0 ? 0.0 : vv[n] * std::copysign(std::pow(std::abs(x), pm1), x);
    }
  }
  return out;
}

ScalarField nonlocal_source(const ScalarField& u, const ModelParams& params, const KernelTable& table) {
  return nonlocal_source(u, convolve(abs_pow(u, params.p()), table), params);
}

ScalarField grad_J(const ScalarField& u, const ModelParams& params, const KernelTable& table) {
  ScalarField out = laplacian(u);
  out *= -1.0;
  out -= nonlocal_source(u, params, table);
  return out;
}

bool on_nehari_delta(const ScalarField& u, double delta, const ModelParams& params, const KernelTable& table,
                     double rel_tol) {
  if (u.is_zero()) return false;
  const double a = delta * grad_sq(u);
  const double b = potential_energy(u, params.p(), table);
  return std::abs(a - b) <= rel_tol * std::max(a, b);
}

}  // namespace potwell
