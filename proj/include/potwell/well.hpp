#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "potwell/field.hpp"
#include "potwell/functionals.hpp"
#include "potwell/nonlocal.hpp"

namespace potwell {

/// Ratio P(u) / ||grad u||^{2p}. Scale invariant; u must be nonzero.
double rayleigh(const ScalarField& u, const ModelParams& params, const KernelTable& table);

struct OptimizerConfig {
  int starts = 5;  // includes the first sine mode
  std::uint64_t seed = 1;
  int max_iter = 5000;
  double grad_tol = 1e-8;  // relative projected-gradient norm
};

struct StartReport {
  std::string kind;  // "sine" or "random"
  int iterations = 0;
  bool converged = false;
  double final_rayleigh = 0.0;
  double final_grad_norm = 0.0;
  std::vector<double> best_history;  // running max per iteration
};

/// Estimated sharp constant and the derived family of well depths.
class WellCurve {
 public:
  /// Curve from a given constant, no maximizer (analytic checks, reloads).
  WellCurve(double p, double c_star);
  WellCurve(double p, double c_star, ScalarField maximizer, std::vector<StartReport> provenance, std::uint64_t seed);

  double p() const { return p_; }
  double c_star() const { return c_star_; }
  double d_depth() const { return d_depth_; }
  bool has_maximizer() const { return maximizer_.has_value(); }
  /// Best field found, normalized to ||grad u|| = 1.
  const ScalarField& maximizer() const;
  const std::vector<StartReport>& provenance() const { return provenance_; }
  std::uint64_t seed() const { return seed_; }
  int total_iterations() const;

 private:
  double p_;
  double c_star_;
  double d_depth_;
  std::optional<ScalarField> maximizer_;
  std::vector<StartReport> provenance_;
  std::uint64_t seed_ = 0;
};

/// Maximizes the Rayleigh ratio by normalized ascent along the H^1 gradient
/// with backtracking, from several starts. c_star is the running maximum.
WellCurve estimate_cstar(const ModelParams& params, const KernelTable& table, const OptimizerConfig& opt);

/// d(delta) = (delta^{1/(p-1)}/2 - delta^{p/(p-1)}/(2p)) C*^{-1/(p-1)}, 0 < delta < p.
double d_of_delta(const WellCurve& curve, double delta);

/// The two roots delta1 < 1 < delta2 of d(delta) = e, 0 < e < d.
std::pair<double, double> roots_delta(const WellCurve& curve, double e);

/// g(alpha) = alpha^2/2 - C* alpha^{2p}/(2p).
double barrier_g(const WellCurve& curve, double alpha);

/// alpha1 = C*^{-1/(2p-2)} and alpha2 >= alpha1 with g(alpha2) = J0.
std::pair<double, double> alpha_barriers(const WellCurve& curve, double J0);

}  // namespace potwell
