#include "potwell/well.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace potwell {

double rayleigh(const ScalarField& u, const ModelParams& params, const KernelTable& table) {
  if (u.is_zero()) throw std::invalid_argument("rayleigh: undefined for the zero field");
  const double p = params.p();
  return potential_energy(u, p, table) / std::pow(grad_sq(u), p);
}

WellCurve::WellCurve(double p, double c_star) : p_(p), c_star_(c_star) {
  if (!(p > 1.0)) throw std::invalid_argument("WellCurve: need p > 1");
  if (!(c_star > 0.0) || !std::isfinite(c_star)) throw std::invalid_argument("WellCurve: c_star must be positive");
  d_depth_ = (0.5 - 0.5 / p) * std::pow(c_star, -1.0 / (p - 1.0));
}

WellCurve::WellCurve(double p, double c_star, ScalarField maximizer, std::vector<StartReport> provenance,
                     std::uint64_t seed)
    : WellCurve(p, c_star) {
  maximizer_ = std::move(maximizer);
  provenance_ = std::move(provenance);
  seed_ = seed;
}

const ScalarField& WellCurve::maximizer() const {
  if (!maximizer_) throw std::logic_error("WellCurve: no maximizer stored");
  return *maximizer_;
}

int WellCurve::total_iterations() const {
  return std::accumulate(provenance_.begin(), provenance_.end(), 0,
                         [](int acc, const StartReport& r) { return acc + r.iterations; });
}

namespace {

struct AscentState {
  ScalarField u;  // ||grad u|| = 1
  double r;
};

AscentState normalized(ScalarField u, const ModelParams& params, const KernelTable& table) {
  u *= 1.0 / std::sqrt(grad_sq(u));
  const double r = potential_energy(u, params.p(), table);
  return {std::move(u), r};
}

}  // namespace

WellCurve estimate_cstar(const ModelParams& params, const KernelTable& table, const OptimizerConfig& opt) {
  if (opt.starts < 1) throw std::invalid_argument("estimate_cstar: need at least one start");
  if (opt.max_iter < 1) throw std::invalid_argument("estimate_cstar: need max_iter >= 1");
  const GridSpec& grid = table.grid();
  const double p = params.p();

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  double best = 0.0;
  std::optional<ScalarField> best_field;
  std::vector<StartReport> reports;

  for (int s = 0; s < opt.starts; ++s) {
    StartReport rep;
    ScalarField u0(grid);
    if (s == 0) {
      rep.kind = "sine";
      u0 = sine_mode(grid, 1, 1, 1);
    } else {
      rep.kind = "random";
      for (double& x : u0.values()) x = 0.05 + unif(rng);
    }
    AscentState st = normalized(std::move(u0), params, table);
    auto consider = [&](const AscentState& a) {
      if (a.r > best) {
        best = a.r;
        best_field = a.u;
      }
    };
    consider(st);

    double step_scale = 1.0;
    int it = 0;
    int flat = 0;  // accepted steps without strict increase
    double gnorm = 0.0;
    for (; it < opt.max_iter; ++it) {
      // L2 gradient of the ratio at ||grad u|| = 1, then H^1 gradient.
      const ScalarField v = convolve(abs_pow(st.u, p), table);
      ScalarField grad_l2 = nonlocal_source(st.u, v, params);
      grad_l2 *= 2.0 * p;
      ScalarField minus_lap = laplacian(st.u);
      minus_lap *= -1.0;
      grad_l2.axpy(-2.0 * p * st.r, minus_lap);
      const ScalarField g = inverse_laplacian(grad_l2);
      gnorm = std::sqrt(std::max(0.0, inner(g, grad_l2))) / st.r;
      if (gnorm < opt.grad_tol) {
        rep.converged = true;
        break;
      }

      // step 1/(2p R) is the normalized fixed-point map u -> (-Lap)^{-1} v|u|^{p-2}u
      const double base = 1.0 / (2.0 * p * st.r);
      bool accepted = false;
      for (int halvings = 0; halvings < 60; ++halvings) {
        ScalarField trial = st.u;
        trial.axpy(base * step_scale, g);
        AscentState next = normalized(std::move(trial), params, table);
        consider(next);
        if (next.r >= st.r) {
          flat = next.r > st.r ? 0 : flat + 1;
          st = std::move(next);
          accepted = true;
          break;
        }
        step_scale *= 0.5;
      }
      rep.best_history.push_back(best);
      if (!accepted || flat >= 20) break;  // stalled at round-off level
      step_scale = std::min(step_scale * 1.5, 4.0);
    }
    rep.iterations = it;
    rep.final_rayleigh = st.r;
    rep.final_grad_norm = gnorm;
    reports.push_back(std::move(rep));
  }

  return WellCurve(p, best, std::move(*best_field), std::move(reports), opt.seed);
}

double d_of_delta(const WellCurve& curve, double delta) {
  const double p = curve.p();
  if (!(delta > 0.0 && delta < p))
    throw std::domain_error("d_of_delta: delta must lie in (0, p), got " + std::to_string(delta));
  const double e = 1.0 / (p - 1.0);
  return (0.5 * std::pow(delta, e) - std::pow(delta, p * e) / (2.0 * p)) * std::pow(curve.c_star(), -e);
}

namespace {

// f increasing on [lo, hi] if `increasing`; finds x with f(x) = target.
template <class F>
double bisect(F f, double lo, double hi, double target, bool increasing) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const bool below = f(mid) < target;
    if (below == increasing)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::pair<double, double> roots_delta(const WellCurve& curve, double e) {
  if (!(e > 0.0 && e < curve.d_depth()))
    throw std::domain_error("roots_delta: need 0 < e < d, got e = " + std::to_string(e));
  auto d = [&curve](double x) { return d_of_delta(curve, x); };
  const double p = curve.p();
  const double lo = std::nextafter(0.0, 1.0);
  const double hi = std::nextafter(p, 0.0);
  return {bisect(d, lo, 1.0, e, true), bisect(d, 1.0, hi, e, false)};
}

double barrier_g(const WellCurve& curve, double alpha) {
  const double p = curve.p();
  return 0.5 * alpha * alpha - curve.c_star() / (2.0 * p) * std::pow(alpha, 2.0 * p);
}

std::pair<double, double> alpha_barriers(const WellCurve& curve, double J0) {
  if (!(J0 > 0.0 && J0 <= curve.d_depth()))
    throw std::domain_error("alpha_barriers: need 0 < J0 <= d, got " + std::to_string(J0));
  const double p = curve.p();
  const double a1 = std::pow(curve.c_star(), -1.0 / (2.0 * p - 2.0));
  if (J0 == curve.d_depth()) return {a1, a1};
  // g decreases from d at a1 to -inf; the zero of g sits at p^{1/(2p-2)} a1
  double hi = 2.0 * std::pow(p, 1.0 / (2.0 * p - 2.0)) * a1;
  while (barrier_g(curve, hi) > J0) hi *= 2.0;
  const double a2 = bisect([&curve](double a) { return barrier_g(curve, a); }, a1, hi, J0, false);
  return {a1, std::max(a1, a2)};
}

}  // namespace potwell
