#include "potwell/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "potwell/experiments.hpp"

namespace potwell {

namespace fs = std::filesystem;
using nlohmann::json;

void SimConfig::validate() const {
  GridSpec grid(m);
  ModelParams params(p);
  control.validate();
  if (optimizer.starts < 1) throw std::invalid_argument("config: optimizer.starts must be >= 1");
  if (optimizer.max_iter < 1) throw std::invalid_argument("config: optimizer.max_iter must be >= 1");
  if (!(optimizer.grad_tol > 0.0)) throw std::invalid_argument("config: optimizer.grad_tol must be positive");
  static const std::set<std::string> kinds{"vacuum", "threshold", "rates", "critical"};
  if (!kinds.count(experiment)) throw std::invalid_argument("config: unknown experiment '" + experiment + "'");
  if (snapshot_stride < 0) throw std::invalid_argument("config: snapshot_stride must be >= 0");
  if (!(e_fraction > 0.0 && e_fraction < 1.0)) throw std::invalid_argument("config: e_fraction must lie in (0,1)");
  if (delta_grid < 1) throw std::invalid_argument("config: delta_grid must be >= 1");
  if (!(critical_gap > 0.0 && critical_gap < 1.0)) throw std::invalid_argument("config: critical_gap must lie in (0,1)");
}

namespace {

template <class T>
void take(const json& obj, const char* key, T& dst) {
  if (auto it = obj.find(key); it != obj.end()) dst = it->get<T>();
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw std::invalid_argument("config: " + where + " must be a JSON object");
  for (const auto& [k, v] : obj.items())
    if (!known.count(k)) throw std::invalid_argument("config: unknown key '" + where + k + "'");
}

json control_to_json(const StepControl& c) {
  return {{"dt_init", c.dt_init},         {"dt_min", c.dt_min},
          {"dt_max", c.dt_max},           {"energy_tol", c.energy_tol},
          {"blowup_linf", c.blowup_linf}, {"t_max", c.t_max},
          {"record_every", c.record_every}, {"max_steps", c.max_steps},
          {"decay_ratio", c.decay_ratio}, {"growth_window", c.growth_window},
          {"source_scale", c.source_scale}};
}

}  // namespace

SimConfig config_from_json(const json& j) {
  reject_unknown(j,
                 {"m", "p", "seed", "optimizer", "control", "experiment", "well_dir", "out_dir", "snapshot_stride",
                  "e_fraction", "delta_grid", "critical_gap", "s_lo", "s_hi"},
                 "");
  SimConfig c;
  try {
    take(j, "m", c.m);
    take(j, "p", c.p);
    take(j, "seed", c.seed);
    take(j, "experiment", c.experiment);
    take(j, "snapshot_stride", c.snapshot_stride);
    take(j, "e_fraction", c.e_fraction);
    take(j, "delta_grid", c.delta_grid);
    take(j, "critical_gap", c.critical_gap);
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("well_dir")) c.well_dir = j["well_dir"].get<std::string>();
    if (j.contains("s_lo") && !j["s_lo"].is_null()) c.s_lo = j["s_lo"].get<double>();
    if (j.contains("s_hi") && !j["s_hi"].is_null()) c.s_hi = j["s_hi"].get<double>();
    if (auto it = j.find("optimizer"); it != j.end()) {
      reject_unknown(*it, {"starts", "max_iter", "grad_tol"}, "optimizer.");
      take(*it, "starts", c.optimizer.starts);
      take(*it, "max_iter", c.optimizer.max_iter);
      take(*it, "grad_tol", c.optimizer.grad_tol);
    }
    if (auto it = j.find("control"); it != j.end()) {
      reject_unknown(*it,
                     {"dt_init", "dt_min", "dt_max", "energy_tol", "blowup_linf", "t_max", "record_every",
                      "max_steps", "decay_ratio", "growth_window", "source_scale"},
                     "control.");
      StepControl& s = c.control;
      take(*it, "dt_init", s.dt_init);
      take(*it, "dt_min", s.dt_min);
      take(*it, "dt_max", s.dt_max);
      take(*it, "energy_tol", s.energy_tol);
      take(*it, "blowup_linf", s.blowup_linf);
      take(*it, "t_max", s.t_max);
      take(*it, "record_every", s.record_every);
      take(*it, "max_steps", s.max_steps);
      take(*it, "decay_ratio", s.decay_ratio);
      take(*it, "growth_window", s.growth_window);
      take(*it, "source_scale", s.source_scale);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.optimizer.seed = c.seed;
  c.validate();
  return c;
}

json config_to_json(const SimConfig& c) {
  // out_dir is left out so that identical runs into different directories
  // produce identical files
  json j{{"m", c.m},
         {"p", c.p},
         {"seed", c.seed},
         {"optimizer", {{"starts", c.optimizer.starts}, {"max_iter", c.optimizer.max_iter}, {"grad_tol", c.optimizer.grad_tol}}},
         {"control", control_to_json(c.control)},
         {"experiment", c.experiment},
         {"well_dir", c.well_dir.string()},
         {"snapshot_stride", c.snapshot_stride},
         {"e_fraction", c.e_fraction},
         {"delta_grid", c.delta_grid},
         {"critical_gap", c.critical_gap},
         {"s_lo", c.s_lo ? json(*c.s_lo) : json(nullptr)},
         {"s_hi", c.s_hi ? json(*c.s_hi) : json(nullptr)}};
  return j;
}

SimConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

json well_to_json(const WellCurve& w, int m) {
  json starts = json::array();
  for (const auto& r : w.provenance())
    starts.push_back({{"kind", r.kind},
                      {"iterations", r.iterations},
                      {"converged", r.converged},
                      {"final_rayleigh", r.final_rayleigh},
                      {"final_grad_norm", r.final_grad_norm}});
  return {{"p", w.p()},
          {"m", m},
          {"c_star", w.c_star()},
          {"d_depth", w.d_depth()},
          {"starts", starts},
          {"iterations", w.total_iterations()},
          {"seed", w.seed()}};
}

namespace {

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Files are staged under temporary names and renamed together at commit().
class Staging {
 public:
  explicit Staging(fs::path dir) : dir_(std::move(dir)) {}
  Staging(const Staging&) = delete;
  Staging& operator=(const Staging&) = delete;
  ~Staging() {
    std::error_code ec;
    for (const auto& [tmp, dst] : files_) fs::remove(tmp, ec);
  }

  void text(const std::string& name, const std::string& body) {
    const fs::path tmp = temp_for(name);
    std::ofstream out(tmp, std::ios::binary);
    out << body;
    out.close();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  void checkpoint(const std::string& name, const ScalarField& u, std::uint64_t count, double time) {
    const std::vector<std::uint8_t> bytes = encode_checkpoint(u, count, time);
    text(name, std::string(bytes.begin(), bytes.end()));
  }
  void commit() {
    for (const auto& [tmp, dst] : files_) fs::rename(tmp, dst);
    files_.clear();
  }

 private:
  fs::path temp_for(const std::string& name) {
    fs::path tmp = dir_ / ("." + name + ".tmp");
    files_.emplace_back(tmp, dir_ / name);
    return tmp;
  }

  fs::path dir_;
  std::vector<std::pair<fs::path, fs::path>> files_;
};

void require_out_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("output directory does not exist: " + dir.string());
}

WellCurve obtain_well(const SimConfig& cfg, const ModelParams& params, const KernelTable& table) {
  if (cfg.well_dir.empty()) {
    OptimizerConfig opt = cfg.optimizer;
    opt.seed = cfg.seed;
    return estimate_cstar(params, table, opt);
  }
  std::ifstream in(cfg.well_dir / "well.json");
  if (!in) throw std::runtime_error("cannot open " + (cfg.well_dir / "well.json").string());
  json j;
  in >> j;
  if (j.at("m").get<int>() != cfg.m || j.at("p").get<double>() != cfg.p)
    throw std::runtime_error("well.json was computed for a different m or p");
  Checkpoint ck = read_checkpoint(cfg.well_dir / "maximizer.pwf");
  if (!(ck.field.grid() == table.grid())) throw std::runtime_error("maximizer.pwf grid does not match m");
  return WellCurve(cfg.p, j.at("c_star").get<double>(), std::move(ck.field), {}, j.at("seed").get<std::uint64_t>());
}

json outcome_json(const RunOutcome& o) {
  json j{{"kind", outcome_name(o)}};
  if (auto* g = std::get_if<GlobalDecayed>(&o)) {
    j["t_end"] = g->t_end;
    j["final_l2"] = g->final_l2;
  } else if (auto* b = std::get_if<BlewUp>(&o)) {
    j["t_blowup_lower_bound"] = b->t_blowup_lower_bound;
    j["peak_linf"] = b->peak_linf;
  } else if (auto* i = std::get_if<Inconclusive>(&o)) {
    j["t_end"] = i->t_end;
    j["reason"] = i->reason;
  }
  return j;
}

json run_json(const RunResult& r, const std::string& csv) {
  const Trajectory& t = r.trajectory;
  return {{"outcome", outcome_json(r.outcome)},
          {"accepted_steps", t.accepted_steps},
          {"rejected_steps", t.rejected_steps},
          {"max_abs_residual", t.max_abs_residual},
          {"energy_monotone", t.energy_monotone},
          {"samples", t.samples.size()},
          {"trajectory_csv", csv}};
}

json vacuum_json(const VacuumReport& v) {
  return {{"e", v.e},
          {"delta1", v.delta1},
          {"delta2", v.delta2},
          {"samples_checked", v.samples_checked},
          {"delta_points", v.delta_points},
          {"min_abs_I_delta", v.min_abs_I_delta},
          {"min_rel_I_delta", v.min_rel_I_delta},
          {"sign", v.sign},
          {"violated", v.violated}};
}

json fit_json(const RateFit& f) {
  return {{"quantity", f.quantity},
          {"t_a", f.t_a},
          {"t_b", f.t_b},
          {"slope", f.slope},
          {"intercept", f.intercept},
          {"r_squared", f.r_squared_defined ? json(f.r_squared) : json(nullptr)},
          {"samples", f.samples}};
}

std::string csv_of(const Trajectory& t, double d) {
  std::ostringstream os;
  write_trajectory_csv(os, t, d);
  return os.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

ScalarField parse_u0(const std::string& src, const SimConfig& cfg, const WellCurve& well, const GridSpec& grid) {
  static const std::string prefix = "builtin:scaled-maximizer:";
  if (src.rfind(prefix, 0) == 0) {
    const std::string num = src.substr(prefix.size());
    std::size_t used = 0;
    double s = 0.0;
    try {
      s = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != num.size() || !std::isfinite(s))
      throw std::invalid_argument("u0: cannot parse scale '" + num + "'");
    return s * well.maximizer();
  }
  if (src.rfind("builtin:", 0) == 0) throw std::invalid_argument("u0: unknown builtin '" + src + "'");
  Checkpoint ck = read_checkpoint(src);
  if (!(ck.field.grid() == grid))
    throw std::invalid_argument("u0: checkpoint has m = " + std::to_string(ck.field.grid().m()) + ", config has m = " +
                                std::to_string(cfg.m));
  return std::move(ck.field);
}

template <class Body>
int guarded(std::ostream& err, const char* what, Body body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << "potwell " << what << ": " << e.what() << "\n";
    return exit_code::operational;
  }
}

}  // namespace

int cmd_well(const SimConfig& cfg, std::ostream& err) {
  return guarded(err, "well", [&] {
    cfg.validate();
    require_out_dir(cfg.out_dir);
    const ModelParams params(cfg.p);
    const KernelTable table{GridSpec(cfg.m)};
    OptimizerConfig opt = cfg.optimizer;
    opt.seed = cfg.seed;
    const WellCurve well = estimate_cstar(params, table, opt);

    json doc = well_to_json(well, cfg.m);
    doc["maximizer"] = "maximizer.pwf";
    doc["config"] = config_to_json(cfg);

    std::string csv = "delta,d\n";
    const double p = cfg.p;
    // 100 points on (0,1] ending at 1, 100 points on (1,p)
    for (int k = 1; k <= 100; ++k) {
      const double delta = k / 100.0;
      csv += fmt17(delta) + "," + fmt17(d_of_delta(well, delta)) + "\n";
    }
    for (int k = 1; k <= 100; ++k) {
      const double delta = 1.0 + (p - 1.0) * k / 101.0;
      csv += fmt17(delta) + "," + fmt17(d_of_delta(well, delta)) + "\n";
    }

    Staging out(cfg.out_dir);
    out.text("well.json", dump(doc));
    out.text("d_of_delta.csv", csv);
    out.checkpoint("maximizer.pwf", well.maximizer(), 0, 0.0);
    out.commit();
    return exit_code::ok;
  });
}

int cmd_simulate(const SimConfig& cfg, const std::string& u0_source, std::ostream& err) {
  return guarded(err, "simulate", [&] {
    cfg.validate();
    require_out_dir(cfg.out_dir);
    const GridSpec grid(cfg.m);
    const ModelParams params(cfg.p);
    const KernelTable table{grid};
    // the maximizer is only needed for the builtin family, d_depth always
    const WellCurve well = obtain_well(cfg, params, table);
    const ScalarField u0 = parse_u0(u0_source, cfg, well, grid);

    StepControl ctrl = cfg.control;
    ctrl.keep_snapshots = cfg.snapshot_stride > 0;
    const RunResult res = run(u0, ctrl, params, table);

    json doc{{"config", config_to_json(cfg)},
             {"u0", u0_source},
             {"c_star", well.c_star()},
             {"d_depth", well.d_depth()},
             {"J0", energy_J(u0, params, table)},
             {"I0", nehari_I(u0, params, table)},
             {"initial_class", to_string(classify_initial(u0, params, table, well))},
             {"run", run_json(res, "trajectory.csv")}};

    Staging out(cfg.out_dir);
    json snaps = json::array();
    if (cfg.snapshot_stride > 0) {
      const auto& tr = res.trajectory;
      for (std::size_t k = 0; k < tr.snapshots.size(); k += cfg.snapshot_stride) {
        char name[32];
        std::snprintf(name, sizeof name, "snap_%06zu.pwf", k);
        out.checkpoint(name, tr.snapshots[k], k, tr.samples[k].t);
        snaps.push_back(name);
      }
    }
    doc["snapshots"] = snaps;
    out.text("trajectory.csv", csv_of(res.trajectory, well.d_depth()));
    out.text("outcome.json", dump(doc));
    out.commit();
    return exit_code::ok;
  });
}

int cmd_experiment(const SimConfig& cfg, const std::string& which, std::ostream& err) {
  return guarded(err, "experiment", [&] {
    cfg.validate();
    if (which != "vacuum" && which != "threshold" && which != "rates" && which != "critical")
      throw std::invalid_argument("unknown experiment '" + which + "'");
    require_out_dir(cfg.out_dir);
    const GridSpec grid(cfg.m);
    const ModelParams params(cfg.p);
    const KernelTable table{grid};
    const WellCurve well = obtain_well(cfg, params, table);
    const double d = well.d_depth();

    SimConfig resolved = cfg;
    resolved.experiment = which;
    json doc{{"config", config_to_json(resolved)},
             {"experiment", which},
             {"c_star", well.c_star()},
             {"d_depth", d},
             {"seed", cfg.seed}};
    Staging out(cfg.out_dir);
    bool ok = true;

    if (which == "vacuum") {
      const VacuumExperiment ex = vacuum_experiment(well, params, table, cfg.control, cfg.e_fraction, cfg.delta_grid);
      out.text("vacuum_decay.csv", csv_of(ex.decay.trajectory, d));
      out.text("vacuum_blowup.csv", csv_of(ex.blowup.trajectory, d));
      doc["e"] = ex.e;
      doc["s"] = {{"decay", ex.s_decay}, {"blowup", ex.s_blowup}};
      doc["runs"] = {{"blowup", run_json(ex.blowup, "vacuum_blowup.csv")},
                     {"decay", run_json(ex.decay, "vacuum_decay.csv")}};
      doc["vacuum"] = {{"blowup", vacuum_json(ex.blowup_report)}, {"decay", vacuum_json(ex.decay_report)}};
      const bool violated = ex.decay_report.violated || ex.blowup_report.violated;
      doc["violated"] = violated;
      ok = !violated;
    } else if (which == "threshold") {
      const ScalarField& phi = well.maximizer();
      const double cross = lambda_scale(1.0, phi, params, table);
      const double lo = cfg.s_lo.value_or(0.5 * cross);
      const double hi = cfg.s_hi.value_or(1.5 * cross);
      const ThresholdResult tr = threshold_scan(phi, lo, hi, cfg.control, params, table, well);
      json probes = json::array();
      for (const auto& pr : tr.probes) probes.push_back({{"s", pr.s}, {"outcome", pr.outcome}});
      const double rel = std::abs(tr.s_star - tr.s_nehari) / tr.s_nehari;
      doc["bracket"] = {{"s_lo", lo}, {"s_hi", hi}};
      doc["s_star"] = tr.s_star;
      doc["final_bracket"] = {{"s_lo", tr.s_lo}, {"s_hi", tr.s_hi}};
      doc["s_nehari"] = tr.s_nehari;
      doc["relative_gap"] = rel;
      doc["agrees_within_10pct"] = rel <= 0.1;
      doc["probes"] = probes;
      doc["warnings"] = tr.warnings;
      ok = rel <= 0.1;
    } else if (which == "rates") {
      const RatesExperiment ex = rates_experiment(well, params, table, cfg.control, cfg.e_fraction);
      out.text("rates_decay.csv", csv_of(ex.decay.trajectory, d));
      out.text("rates_blowup.csv", csv_of(ex.blowup.trajectory, d));
      out.text("rates_heat.csv", csv_of(ex.heat.trajectory, d));
      const bool decay_ok = ex.decay_fit.slope <= ex.decay_bound && ex.decay_fit.r_squared_defined &&
                            ex.decay_fit.r_squared >= 0.99;
      const bool heat_ok = std::abs(ex.heat_fit.slope - ex.heat_expected) <= 0.01 * std::abs(ex.heat_expected);
      const bool growth_ok = ex.growth_fit.slope > 0.0 && ex.growth_fit.r_squared_defined &&
                             ex.growth_fit.r_squared >= 0.95;
      doc["e"] = ex.e;
      doc["runs"] = {{"blowup", run_json(ex.blowup, "rates_blowup.csv")},
                     {"decay", run_json(ex.decay, "rates_decay.csv")},
                     {"heat", run_json(ex.heat, "rates_heat.csv")}};
      doc["lambda1"] = ex.lambda1;
      doc["delta1"] = ex.delta1;
      doc["delta0"] = ex.delta0;
      doc["decay_fit"] = fit_json(ex.decay_fit);
      doc["decay_bound"] = ex.decay_bound;
      doc["heat_fit"] = fit_json(ex.heat_fit);
      doc["heat_expected"] = ex.heat_expected;
      doc["growth_fit"] = fit_json(ex.growth_fit);
      doc["indicator_min_final_quarter"] = ex.indicator_min_final_quarter;
      doc["checks"] = {{"decay", decay_ok},
                       {"heat_calibration", heat_ok},
                       {"growth", growth_ok},
                       {"concavity", ex.indicator_positive_final_quarter}};
      ok = decay_ok && heat_ok && growth_ok && ex.indicator_positive_final_quarter;
    } else {
      const CriticalExperiment ex = critical_experiment(well, params, table, cfg.control, cfg.critical_gap);
      out.text("critical_decay.csv", csv_of(ex.decay.trajectory, d));
      out.text("critical_blowup.csv", csv_of(ex.blowup.trajectory, d));
      const bool decays = std::holds_alternative<GlobalDecayed>(ex.decay.outcome);
      const bool blows = std::holds_alternative<BlewUp>(ex.blowup.outcome);
      const bool grad_ok = ex.max_grad_sq_decay <= ex.grad_bound + 1e-6;
      const bool barrier_ok = ex.min_grad_sq_blowup >= ex.alpha2 * ex.alpha2 - 1e-6;
      doc["s"] = {{"above", ex.s_above}, {"below", ex.s_below}};
      doc["J0"] = {{"above", ex.J_above}, {"below", ex.J_below}};
      doc["I0"] = {{"above", ex.I_above}, {"below", ex.I_below}};
      doc["runs"] = {{"blowup", run_json(ex.blowup, "critical_blowup.csv")},
                     {"decay", run_json(ex.decay, "critical_decay.csv")}};
      doc["max_grad_sq_decay"] = ex.max_grad_sq_decay;
      doc["grad_bound"] = ex.grad_bound;
      doc["min_grad_sq_blowup"] = ex.min_grad_sq_blowup;
      doc["alpha1"] = ex.alpha1;
      doc["alpha2"] = ex.alpha2;
      doc["checks"] = {{"decay_outcome", decays},
                       {"blowup_outcome", blows},
                       {"grad_bound", grad_ok},
                       {"alpha2_barrier", barrier_ok}};
      ok = decays && blows && grad_ok && barrier_ok;
    }

    doc["passed"] = ok;
    out.text(which + "_report.json", dump(doc));
    out.commit();
    if (!ok) err << "potwell experiment: " << which << " check failed, see " << which << "_report.json\n";
    return ok ? exit_code::ok : exit_code::check_failed;
  });
}

}  // namespace potwell
