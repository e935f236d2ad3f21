#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "potwell/harness.hpp"

using namespace potwell;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("potwell_harness_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

SimConfig small_config(const fs::path& out) {
  SimConfig c;
  c.m = 8;
  c.optimizer.starts = 2;
  c.out_dir = out;
  return c;
}

// well.json and maximizer.pwf for m = 8, shared by the simulate/experiment tests
const fs::path& well_dir() {
  static const fs::path dir = [] {
    const fs::path d = scratch("well8");
    std::ostringstream err;
    REQUIRE(cmd_well(small_config(d), err) == 0);
    return d;
  }();
  return dir;
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("configuration") {
  SimConfig c;
  c.m = 10;
  c.p = 2.5;
  c.seed = 18446744073709551557ull;
  c.control.dt_max = 5e-3;
  c.s_lo = 1.0;
  const json j = config_to_json(c);
  const SimConfig back = config_from_json(j);
  CHECK(config_to_json(back) == j);
  CHECK(back.seed == c.seed);
  CHECK(back.optimizer.seed == c.seed);
  CHECK(back.s_lo.value() == 1.0);
  CHECK_FALSE(back.s_hi.has_value());

  CHECK_THROWS_WITH_AS(config_from_json(json{{"mm", 8}}), doctest::Contains("unknown key"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(json{{"control", {{"dt", 1.0}}}}), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(json{{"m", 2}}), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(json{{"p", 6.0}}), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(json{{"m", "eight"}}), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(json{{"experiment", "sweep"}}), std::invalid_argument);
}

TEST_CASE("well command") {
  SUBCASE("byte-identical output for a fixed seed") {
    const fs::path a = scratch("well_a"), b = scratch("well_b");
    SimConfig c;
    c.m = 12;
    c.p = 2.0;
    c.seed = 1;
    std::ostringstream err;
    c.out_dir = a;
    REQUIRE(cmd_well(c, err) == 0);
    c.out_dir = b;
    REQUIRE(cmd_well(c, err) == 0);
    for (const char* f : {"well.json", "d_of_delta.csv", "maximizer.pwf"}) {
      CAPTURE(f);
      CHECK(!slurp(a / f).empty());
      CHECK(slurp(a / f) == slurp(b / f));
    }
    const json w = json::parse(slurp(a / "well.json"));
    for (const char* key : {"p", "m", "c_star", "d_depth", "starts", "iterations", "seed", "config"})
      CHECK(w.contains(key));
    CHECK(w["seed"] == 1);
    CHECK(w["config"]["seed"] == 1);

    std::istringstream csv(slurp(a / "d_of_delta.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "delta,d");
    int rows = 0;
    double best_d = -1.0, best_delta = 0.0;
    while (std::getline(csv, line)) {
      ++rows;
      const double delta = std::stod(line.substr(0, line.find(',')));
      const double d = std::stod(line.substr(line.find(',') + 1));
      if (d > best_d) best_d = d, best_delta = delta;
    }
    CHECK(rows == 200);
    CHECK(best_delta == 1.0);
    CHECK(best_d == w["d_depth"].get<double>());
  }
  SUBCASE("missing output directory") {
    const fs::path parent = scratch("missing");
    SimConfig c = small_config(parent / "nope");
    std::ostringstream err;
    CHECK(cmd_well(c, err) == exit_code::operational);
    CHECK(err.str().find("does not exist") != std::string::npos);
    CHECK(fs::is_empty(parent));
  }
}

TEST_CASE("simulate command") {
  const fs::path wd = well_dir();

  SUBCASE("rejects a checkpoint with the wrong magic") {
    const fs::path out = scratch("badmagic");
    std::ofstream(out / "u0.pwf", std::ios::binary) << std::string(32 + 8 * 512, 'x');
    SimConfig c = small_config(out);
    c.well_dir = wd;
    std::ostringstream err;
    CHECK(cmd_simulate(c, (out / "u0.pwf").string(), err) == exit_code::operational);
    CHECK(err.str().find("bad magic") != std::string::npos);
    CHECK_FALSE(fs::exists(out / "trajectory.csv"));
  }
  SUBCASE("rejects a truncated checkpoint") {
    const fs::path out = scratch("truncated");
    const std::string bytes = slurp(wd / "maximizer.pwf");
    std::ofstream(out / "u0.pwf", std::ios::binary) << bytes.substr(0, bytes.size() - 8);
    SimConfig c = small_config(out);
    c.well_dir = wd;
    std::ostringstream err;
    CHECK(cmd_simulate(c, (out / "u0.pwf").string(), err) == exit_code::operational);
    CHECK(err.str().find("bad length") != std::string::npos);
  }
  SUBCASE("zero scale decays immediately") {
    const fs::path out = scratch("zero");
    SimConfig c = small_config(out);
    c.well_dir = wd;
    std::ostringstream err;
    REQUIRE(cmd_simulate(c, "builtin:scaled-maximizer:0", err) == 0);
    const json o = json::parse(slurp(out / "outcome.json"));
    CHECK(o["run"]["outcome"]["kind"] == "GlobalDecayed");
    CHECK(o["initial_class"] == "W_prime");
    std::istringstream csv(slurp(out / "trajectory.csv"));
    std::string line;
    int rows = -1;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 1);
  }
  SUBCASE("identical inputs give identical artifacts") {
    const fs::path a = scratch("sim_a"), b = scratch("sim_b");
    SimConfig c = small_config(a);
    c.well_dir = wd;
    c.snapshot_stride = 10;
    std::ostringstream err;
    REQUIRE(cmd_simulate(c, "builtin:scaled-maximizer:9", err) == 0);
    c.out_dir = b;
    REQUIRE(cmd_simulate(c, "builtin:scaled-maximizer:9", err) == 0);
    CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
    CHECK(slurp(a / "outcome.json") == slurp(b / "outcome.json"));
    const json o = json::parse(slurp(a / "outcome.json"));
    REQUIRE(o["snapshots"].size() >= 2u);
    const std::string first = o["snapshots"][1];
    CHECK(slurp(a / first) == slurp(b / first));
    const Checkpoint ck = read_checkpoint(a / first);
    CHECK(ck.sample_count == 10u);
    CHECK(ck.time > 0.0);
  }
  SUBCASE("unknown builtin") {
    SimConfig c = small_config(scratch("builtin"));
    c.well_dir = wd;
    std::ostringstream err;
    CHECK(cmd_simulate(c, "builtin:gaussian:1", err) == exit_code::operational);
    CHECK(cmd_simulate(c, "builtin:scaled-maximizer:abc", err) == exit_code::operational);
  }
}

TEST_CASE("experiment command") {
  const fs::path wd = well_dir();

  SUBCASE("vacuum") {
    const fs::path out = scratch("exp_vacuum");
    SimConfig c = small_config(out);
    c.well_dir = wd;
    std::ostringstream err;
    CHECK(cmd_experiment(c, "vacuum", err) == exit_code::ok);
    const json r = json::parse(slurp(out / "vacuum_report.json"));
    CHECK(r["violated"] == false);
    CHECK(r["runs"]["decay"]["outcome"]["kind"] == "GlobalDecayed");
    CHECK(fs::exists(out / "vacuum_decay.csv"));
    CHECK(fs::exists(out / "vacuum_blowup.csv"));
  }
  SUBCASE("threshold with a bad bracket") {
    const fs::path out = scratch("exp_bracket");
    SimConfig c = small_config(out);
    c.well_dir = wd;
    c.s_lo = 1.0;
    c.s_hi = 2.0;
    std::ostringstream err;
    CHECK(cmd_experiment(c, "threshold", err) == exit_code::operational);
    CHECK(err.str().find("bracket") != std::string::npos);
    CHECK(fs::is_empty(out));
  }
  SUBCASE("rates report a positive growth slope") {
    const fs::path out = scratch("exp_rates");
    SimConfig c = small_config(out);
    c.well_dir = wd;
    std::ostringstream err;
    const int rc = cmd_experiment(c, "rates", err);
    CHECK((rc == exit_code::ok || rc == exit_code::check_failed));
    const json r = json::parse(slurp(out / "rates_report.json"));
    CHECK(r["growth_fit"]["quantity"] == "log_l6");
    CHECK(r["growth_fit"]["slope"].get<double>() > 0.0);
    CHECK(r["checks"]["decay"] == true);
    CHECK(r["checks"]["heat_calibration"] == true);
    CHECK(r["checks"]["concavity"] == true);
    CHECK(rc == (r["passed"] == true ? exit_code::ok : exit_code::check_failed));
  }
  SUBCASE("unknown experiment") {
    SimConfig c = small_config(scratch("exp_unknown"));
    std::ostringstream err;
    CHECK(cmd_experiment(c, "sweep", err) == exit_code::operational);
  }
  SUBCASE("well.json for another grid") {
    SimConfig c = small_config(scratch("exp_mismatch"));
    c.m = 9;
    c.well_dir = wd;
    std::ostringstream err;
    CHECK(cmd_experiment(c, "vacuum", err) == exit_code::operational);
  }
}

TEST_CASE("command-line tool") {
  const char* cli = std::getenv("POTWELL_CLI");
  if (!cli) {
    MESSAGE("POTWELL_CLI not set, skipping");
    return;
  }
  const fs::path out = scratch("cli");
  std::ofstream(out / "config.json") << R"({"m": 8, "optimizer": {"starts": 1}})";
  const std::string base = std::string(cli) + " ";
  const std::string cfg = " --config " + (out / "config.json").string();
  const std::string quiet = " 2>" + (out / "stderr.txt").string();

  CHECK(shell(base + "well" + cfg + " --out " + out.string() + " --seed 3" + quiet) == 0);
  CHECK(json::parse(slurp(out / "well.json"))["seed"] == 3);
  CHECK(shell(base + "well" + cfg + " --out " + (out / "absent").string() + quiet) == 1);
  CHECK(shell(base + "simulate" + cfg + " --out " + out.string() + quiet) != 0);
  CHECK(shell(base + "simulate" + cfg + " --out " + out.string() + " --u0 builtin:scaled-maximizer:0" + quiet) == 0);
  CHECK(shell(base + "experiment nonsense" + cfg + " --out " + out.string() + quiet) != 0);
  std::ofstream(out / "bad.json") << R"({"m": 8, "s_lo": 1.0, "s_hi": 2.0, "optimizer": {"starts": 1}})";
  CHECK(shell(base + "experiment threshold --config " + (out / "bad.json").string() + " --out " + out.string() +
              quiet) == 1);
  CHECK(slurp(out / "stderr.txt").find("bracket") != std::string::npos);
}
