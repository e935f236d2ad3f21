#pragma once

#include "potwell/field.hpp"
#include "potwell/nonlocal.hpp"

namespace potwell {

/// Exponent p of the nonlocal source in dimension n = 3.
class ModelParams {
 public:
  static constexpr int n = 3;

  explicit ModelParams(double p);

  double p() const { return p_; }
  /// (p-1)(2-1/p) < 4/(n-2): the extra hypothesis needed for global existence
  /// and decay at the critical level.
  bool well_posed_q_ok() const { return well_posed_q_ok_; }

 private:
  double p_;
  bool well_posed_q_ok_;
};

double energy_J(const ScalarField& u, const ModelParams& params, const KernelTable& table);
double nehari_I(const ScalarField& u, const ModelParams& params, const KernelTable& table);
double nehari_I_delta(const ScalarField& u, double delta, const ModelParams& params, const KernelTable& table);

/// The scaling lambda > 0 with lambda*u on the Nehari set N_delta.
double lambda_scale(double delta, const ScalarField& u, const ModelParams& params, const KernelTable& table);

/// J'(u) = -Laplacian u - v(u)|u|^{p-2}u, with |u|^{p-2}u read as sign(u)|u|^{p-1}.
ScalarField grad_J(const ScalarField& u, const ModelParams& params, const KernelTable& table);

/// v(u)|u|^{p-2}u, the nonlocal source term of the flow.
ScalarField nonlocal_source(const ScalarField& u, const ModelParams& params, const KernelTable& table);

/// Same, reusing a precomputed v = convolve(|u|^p).
ScalarField nonlocal_source(const ScalarField& u, const ScalarField& v, const ModelParams& params);

/// |I_delta(u)| <= 1e-9 * max(delta ||grad u||^2, P(u)), u != 0.
bool on_nehari_delta(const ScalarField& u, double delta, const ModelParams& params, const KernelTable& table,
                     double rel_tol = 1e-9);

}  // namespace potwell
