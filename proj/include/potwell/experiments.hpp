#pragma once

#include <string>
#include <vector>

#include "potwell/field.hpp"
#include "potwell/flow.hpp"
#include "potwell/functionals.hpp"
#include "potwell/nonlocal.hpp"
#include "potwell/well.hpp"

namespace potwell {

struct VacuumReport {
  double e = 0.0;
  double delta1 = 0.0, delta2 = 0.0;
  std::size_t samples_checked = 0;
  int delta_points = 0;
  double min_abs_I_delta = 0.0;
  /// min over the grid of |I_delta| / (delta ||grad u||^2 + P(u))
  double min_rel_I_delta = 0.0;
  int sign = 0;
  bool violated = false;
};

/// Evaluates I_delta on every retained snapshot for delta on an interior
/// grid of (delta1, delta2), the roots of d(delta) = e. Requires J(u0) <= e.
VacuumReport vacuum_check(const Trajectory& traj, const WellCurve& well, double e, int delta_grid_size,
                          const ModelParams& params, const KernelTable& table);

struct RateFit {
  double t_a = 0.0, t_b = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  bool r_squared_defined = false;  // false for a constant series
  std::string quantity;            // "log_l2_sq" or "log_l6"
  std::size_t samples = 0;
};

/// OLS line through (t, log q(t)) for samples with t in [t_a, t_b].
RateFit fit_rate(const Trajectory& traj, const std::string& quantity, double t_a, double t_b);

/// [t_a, t_b] spanning the last half of the recorded samples.
std::pair<double, double> decay_fit_window(const Trajectory& traj);
/// [t_0, t_b] ending `skip` recorded samples before the last one.
std::pair<double, double> growth_fit_window(const Trajectory& traj, int skip = 5);

enum class InitialClass { WPrime, ZPrime, Outside };
std::string to_string(InitialClass c);

/// W' = {J <= d, I > 0} u {0}, Z' = {J <= d, I < 0}, otherwise outside.
InitialClass classify_initial(const ScalarField& u0, const ModelParams& params, const KernelTable& table,
                              const WellCurve& well);

/// Scale s on the requested side of the Nehari crossing lambda(1,phi) with
/// J(s phi) <= target and J(s phi) within round-off of target.
double scale_for_energy(const ScalarField& phi, double target, bool above_nehari, const ModelParams& params,
                        const KernelTable& table);

struct ThresholdProbe {
  double s;
  std::string outcome;
};

struct ThresholdResult {
  double s_star = 0.0;
  double s_lo = 0.0, s_hi = 0.0;  // final bracket
  double s_nehari = 0.0;          // lambda(1, phi)
  std::vector<ThresholdProbe> probes;
  std::vector<std::string> warnings;
};

/// Bisection in s for u0 = s phi on the simulated outcome. Inconclusive
/// runs count as "not blown up" and add a warning.
ThresholdResult threshold_scan(const ScalarField& phi, double s_lo, double s_hi, const StepControl& ctrl,
                               const ModelParams& params, const KernelTable& table, const WellCurve& well);

/// Runs independent initial data concurrently; results come back in input order.
std::vector<RunResult> run_many(const std::vector<ScalarField>& initial, const StepControl& ctrl,
                                const ModelParams& params, const KernelTable& table);

// Experiments shared by the CLI and the acceptance suite.

struct VacuumExperiment {
  double e = 0.0;
  double s_decay = 0.0, s_blowup = 0.0;
  RunResult decay, blowup;
  VacuumReport decay_report, blowup_report;
};

VacuumExperiment vacuum_experiment(const WellCurve& well, const ModelParams& params, const KernelTable& table,
                                   StepControl ctrl, double e_fraction = 0.8, int delta_grid_size = 32);

struct CriticalExperiment {
  double s_below = 0.0, s_above = 0.0;
  double J_below = 0.0, J_above = 0.0;
  double I_below = 0.0, I_above = 0.0;
  RunResult decay, blowup;
  double max_grad_sq_decay = 0.0;  // compared with 2p/(p-1) d
  double grad_bound = 0.0;
  double min_grad_sq_blowup = 0.0;  // compared with alpha2^2
  double alpha1 = 0.0, alpha2 = 0.0;
};

/// Prepares J(u0) = d (1 - rel_gap) on both sides of the Nehari crossing.
CriticalExperiment critical_experiment(const WellCurve& well, const ModelParams& params, const KernelTable& table,
                                       StepControl ctrl, double rel_gap = 5e-7);

struct RatesExperiment {
  double e = 0.0;
  RunResult decay, blowup, heat;
  RateFit decay_fit, growth_fit, heat_fit;
  double delta1 = 0.0, delta0 = 0.0;
  double lambda1 = 0.0;
  double decay_bound = 0.0;       // -2 (1 - delta0) lambda1 * 0.95
  double heat_expected = 0.0;     // -2 lambda1
  double indicator_min_final_quarter = 0.0;
  bool indicator_positive_final_quarter = false;
};

/// Fits decay, growth and heat-only calibration rates from completed runs:
/// `decay` and `blowup` start at J(u0) <= e on either side of the Nehari
/// crossing, `heat` is the first sine mode with the source switched off.
RatesExperiment analyze_rates(const WellCurve& well, const ModelParams& params, const GridSpec& grid, double e,
                              RunResult decay, RunResult blowup, RunResult heat);

/// Performs the three runs and calls analyze_rates.
RatesExperiment rates_experiment(const WellCurve& well, const ModelParams& params, const KernelTable& table,
                                 StepControl ctrl, double e_fraction = 0.8);

}  // namespace potwell
