#include "potwell/flow.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <deque>
#include <stdexcept>

namespace potwell {

void StepControl::validate() const {
  if (!(dt_min > 0.0 && dt_min <= dt_init && dt_init <= dt_max))
    throw std::invalid_argument("StepControl: need 0 < dt_min <= dt_init <= dt_max");
  if (!(energy_tol > 0.0)) throw std::invalid_argument("StepControl: energy_tol must be positive");
  if (!(blowup_linf > 0.0)) throw std::invalid_argument("StepControl: blowup_linf must be positive");
  if (!(t_max > 0.0)) throw std::invalid_argument("StepControl: t_max must be positive");
  if (record_every < 1) throw std::invalid_argument("StepControl: record_every must be >= 1");
  if (growth_window < 1) throw std::invalid_argument("StepControl: growth_window must be >= 1");
  if (!(decay_ratio > 0.0 && decay_ratio < 1.0)) throw std::invalid_argument("StepControl: decay_ratio in (0,1)");
}

std::string outcome_name(const RunOutcome& o) {
  struct {
    std::string operator()(const GlobalDecayed&) const { return "GlobalDecayed"; }
    std::string operator()(const BlewUp&) const { return "BlewUp"; }
    std::string operator()(const Inconclusive&) const { return "Inconclusive"; }
  } visitor;
  return std::visit(visitor, o);
}

StepResult step(const ScalarField& u, double dt, const ModelParams& params, const KernelTable& table,
                double source_scale, double blowup_linf) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  ScalarField rhs = u;
  if (source_scale != 0.0) rhs.axpy(dt * source_scale, nonlocal_source(u, params, table));
  ScalarField next = dirichlet_solve(rhs, dt);
  const bool overflow = !next.is_finite() || norm_linf(next) > blowup_linf;
  return {std::move(next), overflow};
}

double energy_residual(const ScalarField& before, const ScalarField& after, double dt, const ModelParams& params,
                       const KernelTable& table) {
  if (!(dt > 0.0)) throw std::invalid_argument("energy_residual: dt must be positive");
  const double j0 = energy_J(before, params, table);
  const double j1 = energy_J(after, params, table);
  const ScalarField du = after - before;
  const double dissipated = inner(du, du) / dt;  // dt * ||u_t||^2
  const double r = j1 - j0 + dissipated;
  return r / std::max({std::abs(j0), dissipated, DBL_MIN});
}

namespace {

// Cached quantities of the current state of a run.
struct FlowState {
  ScalarField u;
  ScalarField v;  // convolve(|u|^p)
  double G, P, energy, l2_sq, linf;
};

FlowState make_state(ScalarField u, const ModelParams& params, const KernelTable& table, double source_scale) {
  const double p = params.p();
  const ScalarField up = abs_pow(u, p);
  ScalarField v = convolve(up, table);
  const double pe = inner(v, up);
  const double g = grad_sq(u);
  const double l2 = inner(u, u);
  const double linf = norm_linf(u);
  const double energy = 0.5 * g - source_scale * pe / (2.0 * p);
  return {std::move(u), std::move(v), g, pe, energy, l2, linf};
}

TrajectorySample sample_of(const FlowState& s, double t, double M, double ut_sq, const ModelParams& params) {
  TrajectorySample out;
  out.t = t;
  out.l2_sq = s.l2_sq;
  out.grad_sq = s.G;
  out.P = s.P;
  out.J = 0.5 * s.G - s.P / (2.0 * params.p());
  out.I = s.G - s.P;
  out.l6 = norm_lq(s.u, 6.0);
  out.ut_sq = ut_sq;
  out.M = M;
  out.linf = s.linf;
  return out;
}

}  // namespace

RunResult run(const ScalarField& u0, const StepControl& ctrl, const ModelParams& params, const KernelTable& table) {
  ctrl.validate();
  if (!(u0.grid() == table.grid())) throw std::invalid_argument("run: grid mismatch with kernel table");
  if (!u0.is_finite()) throw std::invalid_argument("run: initial field is not finite");

  Trajectory traj;
  FlowState st = make_state(u0, params, table, ctrl.source_scale);
  const double l2_initial = st.l2_sq;

  auto record = [&](double t, double M, double ut_sq) {
    traj.samples.push_back(sample_of(st, t, M, ut_sq, params));
    if (ctrl.keep_snapshots) traj.snapshots.push_back(st.u);
  };

  {
    ScalarField ut = laplacian(st.u);
    if (ctrl.source_scale != 0.0) ut.axpy(ctrl.source_scale, nonlocal_source(st.u, st.v, params));
    record(0.0, 0.0, inner(ut, ut));
  }
  if (l2_initial == 0.0) return {std::move(traj), GlobalDecayed{0.0, 0.0}};

  double t = 0.0, M = 0.0, dt = ctrl.dt_init, last_ut_sq = traj.samples.back().ut_sq;
  double peak = st.linf;
  int streak = 0;
  long since_record = 0;
  std::deque<double> recent_linf{st.linf};

  auto monotone_growth = [&] {
    if (static_cast<int>(recent_linf.size()) < ctrl.growth_window + 1) return false;
    for (std::size_t q = 1; q < recent_linf.size(); ++q)
      if (!(recent_linf[q] > recent_linf[q - 1])) return false;
    return true;
  };
  auto finish = [&](RunOutcome outcome) {
    if (since_record > 0) record(t, M, last_ut_sq);
    return RunResult{std::move(traj), std::move(outcome)};
  };

  while (true) {
    if (t >= ctrl.t_max) return finish(Inconclusive{t, "t_max reached"});
    if (traj.accepted_steps + traj.rejected_steps >= ctrl.max_steps) return finish(Inconclusive{t, "step budget exhausted"});

    const double h = std::min(dt, ctrl.t_max - t);
    ScalarField rhs = st.u;
    if (ctrl.source_scale != 0.0) rhs.axpy(h * ctrl.source_scale, nonlocal_source(st.u, st.v, params));
    ScalarField next = dirichlet_solve(rhs, h);

    bool accept = false;
    std::optional<FlowState> cand;
    double residual = 0.0, du_sq = 0.0;
    if (next.is_finite()) {
      const ScalarField du = next - st.u;
      du_sq = inner(du, du);
      cand = make_state(std::move(next), params, table, ctrl.source_scale);
      const double dissipated = du_sq / h;
      residual = (cand->energy - st.energy + dissipated) / std::max({std::abs(st.energy), dissipated, DBL_MIN});
      accept = std::isfinite(residual) && std::abs(residual) <= ctrl.energy_tol;
    }

    if (!accept) {
      ++traj.rejected_steps;
      streak = 0;
      dt = 0.5 * h;
      if (dt < ctrl.dt_min) {
        if (monotone_growth()) return finish(BlewUp{t, peak});
        return finish(Inconclusive{t, "time step collapsed below dt_min"});
      }
      continue;
    }

    traj.max_abs_residual = std::max(traj.max_abs_residual, std::abs(residual));
    if (cand->energy > st.energy + ctrl.energy_tol * std::max(1.0, std::abs(st.energy))) traj.energy_monotone = false;
    M += h * 0.25 * (st.l2_sq + cand->l2_sq);
    t += h;
    last_ut_sq = du_sq / (h * h);
    st = std::move(*cand);
    ++traj.accepted_steps;
    ++since_record;
    peak = std::max(peak, st.linf);
    recent_linf.push_back(st.linf);
    if (static_cast<int>(recent_linf.size()) > ctrl.growth_window + 1) recent_linf.pop_front();

    if (since_record >= ctrl.record_every) {
      record(t, M, last_ut_sq);
      since_record = 0;
    }
    if (st.linf > ctrl.blowup_linf) return finish(BlewUp{t, peak});
    if (st.l2_sq < ctrl.decay_ratio * l2_initial) {
      if (st.energy < 0.0) return finish(Inconclusive{t, "decayed with negative energy"});
      return finish(GlobalDecayed{t, std::sqrt(st.l2_sq)});
    }

    if (++streak >= 20) {
      dt = std::min(1.2 * dt, ctrl.dt_max);
      streak = 0;
    }
  }
}

ConcavitySeries concavity_diagnostics(const Trajectory& traj, const ModelParams& params) {
  if (traj.samples.size() < 3) throw std::invalid_argument("concavity_diagnostics: need at least 3 samples");
  ConcavitySeries out;
  const double p = params.p();
  for (const auto& s : traj.samples) {
    const double dM = 0.5 * s.l2_sq;
    const double ddM = -s.I;
    out.t.push_back(s.t);
    out.M.push_back(s.M);
    out.dM.push_back(dM);
    out.ddM.push_back(ddM);
    out.indicator.push_back(s.M * ddM - p * dM * dM);
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, double d_depth) {
  os << "t,l2_sq,grad_sq,P,J,I,l6,ut_sq,M,H,L,linf\n";
  char buf[64];
  auto put = [&](double x, char sep) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    os << buf << sep;
  };
  for (const auto& s : traj.samples) {
    const double H = d_depth - s.J;
    put(s.t, ',');
    put(s.l2_sq, ',');
    put(s.grad_sq, ',');
    put(s.P, ',');
    put(s.J, ',');
    put(s.I, ',');
    put(s.l6, ',');
    put(s.ut_sq, ',');
    put(s.M, ',');
    put(H, ',');
    put(H + 0.5 * s.l2_sq, ',');
    put(s.linf, '\n');
  }
}

}  // namespace potwell
