#include "potwell/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

namespace potwell {

VacuumReport vacuum_check(const Trajectory& traj, const WellCurve& well, double e, int delta_grid_size,
                          const ModelParams& params, const KernelTable& table) {
  if (!(e > 0.0 && e < well.d_depth()))
    throw std::domain_error("vacuum_check: need 0 < e < d (no vacuum interval otherwise)");
  if (delta_grid_size < 1) throw std::invalid_argument("vacuum_check: delta grid must be nonempty");
  if (traj.samples.empty()) throw std::invalid_argument("vacuum_check: empty trajectory");
  if (traj.snapshots.size() != traj.samples.size())
    throw std::invalid_argument("vacuum_check: missing snapshots (run with keep_snapshots)");
  if (!(traj.samples.front().J <= e)) throw std::invalid_argument("vacuum_check: run does not satisfy J(u0) <= e");

  VacuumReport rep;
  rep.e = e;
  std::tie(rep.delta1, rep.delta2) = roots_delta(well, e);
  rep.delta_points = delta_grid_size;
  rep.min_abs_I_delta = std::numeric_limits<double>::infinity();
  rep.min_rel_I_delta = std::numeric_limits<double>::infinity();

  std::vector<double> deltas(delta_grid_size);
  for (int k = 0; k < delta_grid_size; ++k)
    deltas[k] = rep.delta1 + (rep.delta2 - rep.delta1) * (k + 1) / (delta_grid_size + 1);

  bool sign_changed = false;
  for (const ScalarField& snap : traj.snapshots) {
    if (snap.is_zero()) continue;  // 0 is excluded from every N_delta
    // I_delta is affine in delta; evaluate its two constituents once.
    const double g = grad_sq(snap);
    const double pe = potential_energy(snap, params.p(), table);
    for (double delta : deltas) {
      const double val = delta * g - pe;
      const int sg = val > 0.0 ? 1 : (val < 0.0 ? -1 : 0);
      if (rep.sign == 0 && rep.samples_checked == 0 && sg != 0) rep.sign = sg;
      if (sg != rep.sign) sign_changed = true;
      rep.min_abs_I_delta = std::min(rep.min_abs_I_delta, std::abs(val));
      rep.min_rel_I_delta = std::min(rep.min_rel_I_delta, std::abs(val) / (delta * g + pe));
    }
    ++rep.samples_checked;
  }
  rep.violated = sign_changed || rep.sign == 0 || !(rep.min_rel_I_delta > 1e-9);
  return rep;
}

RateFit fit_rate(const Trajectory& traj, const std::string& quantity, double t_a, double t_b) {
  double (*pick)(const TrajectorySample&) = nullptr;
  if (quantity == "log_l2_sq")
    pick = [](const TrajectorySample& s) { return s.l2_sq; };
  else if (quantity == "log_l6")
    pick = [](const TrajectorySample& s) { return s.l6; };
  else
    throw std::invalid_argument("fit_rate: unknown quantity '" + quantity + "'");
  if (!(t_a <= t_b)) throw std::invalid_argument("fit_rate: empty window");

  std::vector<double> ts, ys;
  for (const auto& s : traj.samples) {
    if (s.t < t_a || s.t > t_b) continue;
    const double q = pick(s);
    if (!(q > 0.0) || !std::isfinite(q)) throw std::domain_error("fit_rate: nonpositive value in window");
    ts.push_back(s.t);
    ys.push_back(std::log(q));
  }
  if (ts.size() < 10)
    throw std::invalid_argument("fit_rate: need at least 10 samples in the window, got " + std::to_string(ts.size()));

  const double n = static_cast<double>(ts.size());
  double tm = 0.0, ym = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    tm += ts[k];
    ym += ys[k];
  }
  tm /= n;
  ym /= n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    stt += (ts[k] - tm) * (ts[k] - tm);
    sty += (ts[k] - tm) * (ys[k] - ym);
    syy += (ys[k] - ym) * (ys[k] - ym);
  }
  if (!(stt > 0.0)) throw std::invalid_argument("fit_rate: all samples share one time stamp");

  RateFit fit;
  fit.t_a = t_a;
  fit.t_b = t_b;
  fit.quantity = quantity;
  fit.samples = ts.size();
  fit.slope = sty / stt;
  fit.intercept = ym - fit.slope * tm;
  // a constant series leaves only rounding noise in syy
  if (syy > n * std::pow(1e-15 * std::max(1.0, std::abs(ym)), 2)) {
    double ss_res = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double r = ys[k] - (fit.intercept + fit.slope * ts[k]);
      ss_res += r * r;
    }
    fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    fit.r_squared_defined = true;
  } else {
    fit.r_squared = std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

std::pair<double, double> decay_fit_window(const Trajectory& traj) {
  if (traj.samples.empty()) throw std::invalid_argument("decay_fit_window: empty trajectory");
  const std::size_t n = traj.samples.size();
  return {traj.samples[n / 2].t, traj.samples.back().t};
}

std::pair<double, double> growth_fit_window(const Trajectory& traj, int skip) {
  const std::size_t n = traj.samples.size();
  if (skip < 0 || n <= static_cast<std::size_t>(skip)) throw std::invalid_argument("growth_fit_window: too few samples");
  return {traj.samples.front().t, traj.samples[n - 1 - skip].t};
}

std::string to_string(InitialClass c) {
  switch (c) {
    case InitialClass::WPrime:
      return "W_prime";
    case InitialClass::ZPrime:
      return "Z_prime";
    case InitialClass::Outside:
      return "outside";
  }
  return "outside";
}

InitialClass classify_initial(const ScalarField& u0, const ModelParams& params, const KernelTable& table,
                              const WellCurve& well) {
  if (u0.is_zero()) return InitialClass::WPrime;
  const double J = energy_J(u0, params, table);
  if (J > well.d_depth()) return InitialClass::Outside;
  const double I = nehari_I(u0, params, table);
  if (I > 1e-12) return InitialClass::WPrime;
  if (I < -1e-12) return InitialClass::ZPrime;
  return InitialClass::Outside;
}

double scale_for_energy(const ScalarField& phi, double target, bool above_nehari, const ModelParams& params,
                        const KernelTable& table) {
  if (phi.is_zero()) throw std::invalid_argument("scale_for_energy: phi must be nonzero");
  const double p = params.p();
  const double g = grad_sq(phi);
  const double pe = potential_energy(phi, p, table);
  // fibering map s -> J(s phi), maximal at the Nehari crossing
  auto fiber = [&](double s) { return 0.5 * s * s * g - std::pow(s, 2.0 * p) * pe / (2.0 * p); };
  const double s_n = std::pow(g / pe, 1.0 / (2.0 * p - 2.0));
  if (!(target > 0.0 && target <= fiber(s_n)))
    throw std::domain_error("scale_for_energy: target outside (0, max_s J(s phi)]");

  // ok = J(s phi) <= target, true at the outer end of the branch
  double inner_end = s_n;
  double outer_end = above_nehari ? s_n : 0.0;
  if (above_nehari) {
    outer_end = 2.0 * s_n;
    while (fiber(outer_end) > target) outer_end *= 2.0;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (inner_end + outer_end);
    if (mid == inner_end || mid == outer_end) break;
    if (fiber(mid) <= target)
      outer_end = mid;
    else
      inner_end = mid;
  }
  // the direct evaluation may round differently from the fibering formula
  double s = outer_end;
  for (double nudge = 1e-15; energy_J(s * phi, params, table) > target; nudge *= 2.0)
    s = outer_end * (above_nehari ? 1.0 + nudge : 1.0 - nudge);
  return s;
}

std::vector<RunResult> run_many(const std::vector<ScalarField>& initial, const StepControl& ctrl,
                                const ModelParams& params, const KernelTable& table) {
  std::vector<std::future<RunResult>> jobs;
  jobs.reserve(initial.size());
  for (const ScalarField& u0 : initial)
    jobs.push_back(std::async(std::launch::async, [&, u0ptr = &u0] { return run(*u0ptr, ctrl, params, table); }));
  std::vector<RunResult> out;
  out.reserve(jobs.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

ThresholdResult threshold_scan(const ScalarField& phi, double s_lo, double s_hi, const StepControl& ctrl,
                               const ModelParams& params, const KernelTable& table, const WellCurve& well) {
  (void)well;
  if (phi.is_zero()) throw std::invalid_argument("threshold_scan: phi must be nonzero");
  if (!(0.0 <= s_lo && s_lo < s_hi)) throw std::invalid_argument("threshold_scan: bracket needs 0 <= s_lo < s_hi");

  ThresholdResult res;
  res.s_nehari = lambda_scale(1.0, phi, params, table);

  auto probe = [&](double s) {
    const RunResult r = run(s * phi, ctrl, params, table);
    res.probes.push_back({s, outcome_name(r.outcome)});
    if (std::holds_alternative<Inconclusive>(r.outcome))
      res.warnings.push_back("s = " + std::to_string(s) + ": inconclusive (" +
                             std::get<Inconclusive>(r.outcome).reason + "), counted as not blown up");
    return r.outcome;
  };

  const RunOutcome lo = probe(s_lo);
  if (!std::holds_alternative<GlobalDecayed>(lo))
    throw std::invalid_argument("threshold_scan: bracket lower end does not decay (" + outcome_name(lo) + ")");
  const RunOutcome hi = probe(s_hi);
  if (!std::holds_alternative<BlewUp>(hi))
    throw std::invalid_argument("threshold_scan: bracket upper end does not blow up (" + outcome_name(hi) + ")");

  const double width = 1e-3 * s_hi;
  while (s_hi - s_lo > width) {
    const double mid = 0.5 * (s_lo + s_hi);
    if (std::holds_alternative<BlewUp>(probe(mid)))
      s_hi = mid;
    else
      s_lo = mid;
  }
  res.s_lo = s_lo;
  res.s_hi = s_hi;
  res.s_star = 0.5 * (s_lo + s_hi);
  return res;
}

VacuumExperiment vacuum_experiment(const WellCurve& well, const ModelParams& params, const KernelTable& table,
                                   StepControl ctrl, double e_fraction, int delta_grid_size) {
  if (!(e_fraction > 0.0 && e_fraction < 1.0)) throw std::invalid_argument("vacuum_experiment: e_fraction in (0,1)");
  VacuumExperiment ex;
  ex.e = e_fraction * well.d_depth();
  const ScalarField& phi = well.maximizer();
  ex.s_decay = scale_for_energy(phi, ex.e, false, params, table);
  ex.s_blowup = scale_for_energy(phi, ex.e, true, params, table);
  ctrl.keep_snapshots = true;
  auto runs = run_many({ex.s_decay * phi, ex.s_blowup * phi}, ctrl, params, table);
  ex.decay = std::move(runs[0]);
  ex.blowup = std::move(runs[1]);
  ex.decay_report = vacuum_check(ex.decay.trajectory, well, ex.e, delta_grid_size, params, table);
  ex.blowup_report = vacuum_check(ex.blowup.trajectory, well, ex.e, delta_grid_size, params, table);
  return ex;
}

CriticalExperiment critical_experiment(const WellCurve& well, const ModelParams& params, const KernelTable& table,
                                       StepControl ctrl, double rel_gap) {
  CriticalExperiment ex;
  const double d = well.d_depth();
  const double target = d * (1.0 - rel_gap);
  const ScalarField& phi = well.maximizer();
  ex.s_below = scale_for_energy(phi, target, false, params, table);
  ex.s_above = scale_for_energy(phi, target, true, params, table);
  const ScalarField u_below = ex.s_below * phi;
  const ScalarField u_above = ex.s_above * phi;
  ex.J_below = energy_J(u_below, params, table);
  ex.J_above = energy_J(u_above, params, table);
  ex.I_below = nehari_I(u_below, params, table);
  ex.I_above = nehari_I(u_above, params, table);

  auto runs = run_many({u_below, u_above}, ctrl, params, table);
  ex.decay = std::move(runs[0]);
  ex.blowup = std::move(runs[1]);

  const double p = params.p();
  ex.grad_bound = 2.0 * p / (p - 1.0) * d;
  for (const auto& s : ex.decay.trajectory.samples) ex.max_grad_sq_decay = std::max(ex.max_grad_sq_decay, s.grad_sq);
  std::tie(ex.alpha1, ex.alpha2) = alpha_barriers(well, std::min(ex.J_above, d));
  ex.min_grad_sq_blowup = std::numeric_limits<double>::infinity();
  for (const auto& s : ex.blowup.trajectory.samples) ex.min_grad_sq_blowup = std::min(ex.min_grad_sq_blowup, s.grad_sq);
  return ex;
}

RatesExperiment analyze_rates(const WellCurve& well, const ModelParams& params, const GridSpec& grid, double e,
                              RunResult decay, RunResult blowup, RunResult heat) {
  RatesExperiment ex;
  ex.e = e;
  ex.lambda1 = min_eigenvalue(grid);
  ex.delta1 = roots_delta(well, e).first;
  ex.delta0 = 0.5 * (1.0 + ex.delta1);
  ex.decay_bound = -2.0 * (1.0 - ex.delta0) * ex.lambda1 * 0.95;
  ex.heat_expected = -2.0 * ex.lambda1;

  auto [da, db] = decay_fit_window(decay.trajectory);
  ex.decay_fit = fit_rate(decay.trajectory, "log_l2_sq", da, db);
  auto [ha, hb] = decay_fit_window(heat.trajectory);
  ex.heat_fit = fit_rate(heat.trajectory, "log_l2_sq", ha, hb);
  auto [ga, gb] = growth_fit_window(blowup.trajectory, 5);
  ex.growth_fit = fit_rate(blowup.trajectory, "log_l6", ga, gb);

  const ConcavitySeries cs = concavity_diagnostics(blowup.trajectory, params);
  const std::size_t n = cs.indicator.size();
  ex.indicator_min_final_quarter = std::numeric_limits<double>::infinity();
  for (std::size_t k = (3 * n) / 4; k < n; ++k)
    ex.indicator_min_final_quarter = std::min(ex.indicator_min_final_quarter, cs.indicator[k]);
  ex.indicator_positive_final_quarter = ex.indicator_min_final_quarter > 0.0;

  ex.decay = std::move(decay);
  ex.blowup = std::move(blowup);
  ex.heat = std::move(heat);
  return ex;
}

RatesExperiment rates_experiment(const WellCurve& well, const ModelParams& params, const KernelTable& table,
                                 StepControl ctrl, double e_fraction) {
  const double e = e_fraction * well.d_depth();
  const ScalarField& phi = well.maximizer();
  const double s_dec = scale_for_energy(phi, e, false, params, table);
  const double s_blo = scale_for_energy(phi, e, true, params, table);
  auto runs = run_many({s_dec * phi, s_blo * phi}, ctrl, params, table);
  StepControl heat_ctrl = ctrl;
  heat_ctrl.source_scale = 0.0;
  RunResult heat = run(sine_mode(table.grid(), 1, 1, 1), heat_ctrl, params, table);
  return analyze_rates(well, params, table.grid(), e, std::move(runs[0]), std::move(runs[1]), std::move(heat));
}

}  // namespace potwell
