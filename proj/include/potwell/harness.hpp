#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "potwell/flow.hpp"
#include "potwell/well.hpp"

namespace potwell {

struct SimConfig {
  int m = 16;
  double p = 2.0;
  std::uint64_t seed = 1;
  OptimizerConfig optimizer;  // optimizer.seed is overwritten by seed
  StepControl control;
  std::string experiment = "vacuum";
  std::filesystem::path out_dir = ".";
  /// directory holding well.json and maximizer.pwf from an earlier `well`
  /// run; empty means compute the curve on the fly
  std::filesystem::path well_dir;
  int snapshot_stride = 0;  // recorded samples between snapshot files, 0 = none

  double e_fraction = 0.8;
  int delta_grid = 32;
  double critical_gap = 5e-7;
  std::optional<double> s_lo, s_hi;  // threshold bracket, default 0.5 and 1.5 times the crossing

  void validate() const;
};

/// Unknown keys are rejected so typos do not silently fall back to defaults.
SimConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SimConfig& c);
SimConfig load_config(const std::filesystem::path& path);

nlohmann::json well_to_json(const WellCurve& w, int m);

/// Writes well.json, d_of_delta.csv and maximizer.pwf into out_dir.
int cmd_well(const SimConfig& cfg, std::ostream& err);

/// u0_source is a checkpoint path or builtin:scaled-maximizer:<s>. Writes
/// trajectory.csv, outcome.json and snap_<k>.pwf files.
int cmd_simulate(const SimConfig& cfg, const std::string& u0_source, std::ostream& err);

/// which is vacuum, threshold, rates or critical. Writes <which>_report.json
/// and one trajectory CSV per run.
int cmd_experiment(const SimConfig& cfg, const std::string& which, std::ostream& err);

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int operational = 1;
inline constexpr int check_failed = 2;
}  // namespace exit_code

}  // namespace potwell
