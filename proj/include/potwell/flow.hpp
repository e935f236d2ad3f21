#pragma once

#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "potwell/field.hpp"
#include "potwell/functionals.hpp"
#include "potwell/nonlocal.hpp"
#include "potwell/well.hpp"

namespace potwell {

struct StepControl {
  double dt_init = 1e-5;
  double dt_min = 1e-14;
  double dt_max = 1e-2;
  double energy_tol = 1e-6;    // normalized energy residual per accepted step
  double blowup_linf = 1e8;
  double t_max = 5.0;
  int record_every = 50;       // accepted steps between recorded samples
  bool keep_snapshots = false; // retain the field at every recorded sample
  long max_steps = 5'000'000;
  double decay_ratio = 1e-12;  // ||u||^2 / ||u0||^2 that counts as decayed
  int growth_window = 20;      // accepted steps of monotone sup-norm growth for dt collapse
  double source_scale = 1.0;   // 0 switches the nonlocal term off (diagnostics only)

  void validate() const;
};

struct TrajectorySample {
  double t = 0.0;
  double l2_sq = 0.0;
  double grad_sq = 0.0;
  double P = 0.0;
  double J = 0.0;
  double I = 0.0;
  double l6 = 0.0;
  double ut_sq = 0.0;
  double M = 0.0;  // (1/2) int_0^t ||u||^2, trapezoid over accepted steps
  double linf = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::vector<ScalarField> snapshots;  // aligned with samples when kept
  long accepted_steps = 0;
  long rejected_steps = 0;
  double max_abs_residual = 0.0;  // over accepted steps
  bool energy_monotone = true;    // J_{k+1} <= J_k + tol*max(1,|J_k|) on every accepted step
};

struct GlobalDecayed {
  double t_end;
  double final_l2;
};
struct BlewUp {
  double t_blowup_lower_bound;
  double peak_linf;
};
struct Inconclusive {
  double t_end;
  std::string reason;
};
using RunOutcome = std::variant<GlobalDecayed, BlewUp, Inconclusive>;

std::string outcome_name(const RunOutcome& o);

struct StepResult {
  ScalarField u;
  bool overflow;  // non-finite or above the blow-up threshold
};

/// One IMEX step: u+ = (Id - dt Laplacian)^{-1} (u + dt v(u)|u|^{p-2}u).
StepResult step(const ScalarField& u, double dt, const ModelParams& params, const KernelTable& table,
                double source_scale = 1.0, double blowup_linf = 1e8);

/// (J(after) - J(before) + dt ||(after-before)/dt||^2) / max(|J(before)|, dt ||u_t||^2, tiny).
double energy_residual(const ScalarField& before, const ScalarField& after, double dt, const ModelParams& params,
                       const KernelTable& table);

struct RunResult {
  Trajectory trajectory;
  RunOutcome outcome;
};

/// Adaptive IMEX integration with energy-residual step control and blow-up
/// detection.
RunResult run(const ScalarField& u0, const StepControl& ctrl, const ModelParams& params, const KernelTable& table);

struct ConcavitySeries {
  std::vector<double> t, M, dM, ddM, indicator;  // indicator = M M'' - p M'^2
};

/// M from the samples, M' = ||u||^2/2 and M'' = -I read from the samples.
ConcavitySeries concavity_diagnostics(const Trajectory& traj, const ModelParams& params);

/// Trajectory CSV: t,l2_sq,grad_sq,P,J,I,l6,ut_sq,M,H,L,linf with H = d - J,
/// L = H + l2_sq/2, 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, double d_depth);

}  // namespace potwell
