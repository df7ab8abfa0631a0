#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = PAIRSIM_CLI_PATH;

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path out = dir / "stdout.txt";
  const std::string cmd = kCli + " " + args + " > " + out.string() + " 2> " +
                          (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  r.stdout_text = ss.str();
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, double> parse_kv(const std::string& text) {
  std::map<std::string, double> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    try {
      kv[line.substr(0, eq)] = std::stod(line.substr(eq + 1));
    } catch (...) {
    }
  }
  return kv;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pairsim_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("check subcommand reports the timescale ordering") {
  const auto dir = fresh_dir("check");
  const auto r = run_cli("--out " + dir.string() + " check", dir);
  REQUIRE(r.exit_code == 0);
  CHECK(r.stdout_text.find("pass=yes") != std::string::npos);
  const auto kv = parse_kv(r.stdout_text);
  CHECK(kv.at("laser_ratio") > 2.0);
  CHECK(kv.at("postselect_ratio") > 2.0);
}

TEST_CASE("budget subcommand reproduces the preset loss chains") {
  const auto dir = fresh_dir("budget");
  const auto r25 = run_cli("--out " + dir.string() + " --filter psfbg25mhz budget", dir);
  REQUIRE(r25.exit_code == 0);
  auto kv = parse_kv(r25.stdout_text);
  CHECK(kv.at("total_pair_loss_db") == Catch::Approx(20.4).margin(1e-9));
  CHECK(kv.at("mu_pairs_per_window") == Catch::Approx(0.01).margin(0.002));

  const auto rd = run_cli("--out " + dir.string() + " --filter dwdm100ghz budget", dir);
  CHECK(parse_kv(rd.stdout_text).at("total_pair_loss_db") == Catch::Approx(15.0).margin(1e-9));

  const auto r540 = run_cli("--out " + dir.string() + " --filter psfbg540mhz budget", dir);
  CHECK(parse_kv(r540.stdout_text).at("total_pair_loss_db") == Catch::Approx(19.4).margin(1e-9));

  // Improvement flags reduce the total with per-item clamping.
  const auto ri = run_cli(
      "--out " + dir.string() + " --filter psfbg25mhz budget --improve flat_top,cavity", dir);
  CHECK(parse_kv(ri.stdout_text).at("total_pair_loss_db") == Catch::Approx(14.4).margin(1e-9));

  // The emitted table carries the hash/seed/columns header.
  const std::string table = read_file(dir / "budget.txt");
  CHECK(table.find("# config_hash ") != std::string::npos);
  CHECK(table.find("# seed ") != std::string::npos);
  CHECK(table.find("# columns item_index item_db running_total_db") != std::string::npos);
}

TEST_CASE("spectrum subcommand emits the degenerate emission profile") {
  const auto dir = fresh_dir("spectrum");
  const auto r = run_cli("--out " + dir.string() + " spectrum --points 4001", dir);
  REQUIRE(r.exit_code == 0);
  const auto kv = parse_kv(r.stdout_text);
  CHECK(kv.at("peak_wavelength_nm") == Catch::Approx(1560.48).margin(0.05));
  CHECK(kv.at("fwhm_nm") == Catch::Approx(32.5).epsilon(0.02));
  CHECK(kv.at("fwhm_thz") == Catch::Approx(4.0).epsilon(0.02));
}

TEST_CASE("fringe runs are deterministic and config round-trips") {
  const auto dir_a = fresh_dir("fringe_a");
  const std::string common =
      " --seed 777 --filter psfbg540mhz fringe --points 8 --pairs-per-point 2000";
  const auto ra = run_cli("--out " + dir_a.string() +
                              " --emit-config " + (dir_a / "cfg.json").string() + common,
                          dir_a);
  REQUIRE(ra.exit_code == 0);

  // Rerun with identical flags: byte-identical table.
  const auto dir_b = fresh_dir("fringe_b");
  const auto rb = run_cli("--out " + dir_b.string() + common, dir_b);
  REQUIRE(rb.exit_code == 0);
  CHECK(read_file(dir_a / "fringe.txt") == read_file(dir_b / "fringe.txt"));

  // Rerun from the emitted effective config: identical output again.
  const auto dir_c = fresh_dir("fringe_c");
  const auto rc = run_cli("--config " + (dir_a / "cfg.json").string() + " --out " +
                              dir_c.string() + " fringe",
                          dir_c);
  REQUIRE(rc.exit_code == 0);
  CHECK(read_file(dir_a / "fringe.txt") == read_file(dir_c / "fringe.txt"));

  // Flags win over the config file.
  const auto dir_d = fresh_dir("fringe_d");
  const auto rd = run_cli("--config " + (dir_a / "cfg.json").string() + " --seed 778 --out " +
                              dir_d.string() + " fringe",
                          dir_d);
  REQUIRE(rd.exit_code == 0);
  CHECK(read_file(dir_a / "fringe.txt") != read_file(dir_d / "fringe.txt"));

  // Fit summary present and sane for the ideal state.
  const auto kv = parse_kv(ra.stdout_text);
  CHECK(kv.at("net_visibility") > 0.9);
  CHECK(kv.at("net_visibility") < 1.1);
}

TEST_CASE("bell subcommand reports a strong violation for the ideal state") {
  const auto dir = fresh_dir("bell");
  // InGaAs efficiencies thin the coincidences, so a 40 sigma violation needs
  // a few hundred thousand pairs per setting.
  const auto r = run_cli("--out " + dir.string() + " bell --pairs-per-setting 500000", dir);
  REQUIRE(r.exit_code == 0);
  const auto kv = parse_kv(r.stdout_text);
  CHECK(kv.at("s") > 2.7);
  CHECK(kv.at("s") < 2.95);
  CHECK(kv.at("n_sigma_violation") > 40.0);
}

TEST_CASE("config errors exit with code 2") {
  const auto dir = fresh_dir("err");
  CHECK(run_cli("--out " + dir.string() + " --filter nosuch budget", dir).exit_code == 2);
  CHECK(run_cli("--out " + dir.string() + " fringe --sweep bogus", dir).exit_code == 2);
  CHECK(run_cli("--config /nonexistent.json --out " + dir.string() + " budget", dir).exit_code ==
        2);
  // Unknown flags are CLI parse errors.
  CHECK(run_cli("--no-such-flag budget", dir).exit_code == 2);
}

TEST_CASE("histogram subcommand writes the histogram, profile, and event dump") {
  const auto dir = fresh_dir("hist");
  // Custom noiseless detectors through the config file: the three-peak
  // structure then stands clear of the accidental floor.
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"detector": {"preset": "custom", "efficiency": 1.0,
               "jitter_fwhm_s": 60e-12, "dark_rate_hz": 0.0, "dead_time_s": 0.0}})";
  }
  const auto r = run_cli("--config " + (dir / "cfg.json").string() + " --out " + dir.string() +
                             " --filter psfbg540mhz --pump-mw 0.05 histogram --duration 0.2"
                             " --bin-width 2e-10 --dump-events",
                         dir);
  REQUIRE(r.exit_code == 0);
  const auto kv = parse_kv(r.stdout_text);
  CHECK(std::abs(kv.at("central_peak_position_s")) < 2e-10);
  CHECK(std::abs(kv.at("left_peak_position_s") + 76e-9) < 4e-10);
  CHECK(kv.at("central_to_side_ratio") == Catch::Approx(2.0).margin(0.3));
  CHECK(fs::exists(dir / "histogram.txt"));
  CHECK(fs::exists(dir / "correlation.txt"));
  const std::string events = read_file(dir / "events.txt");
  CHECK(events.find("# columns timestamp_ns channel truth_tag") != std::string::npos);

  // Outputs land in $PAIRSIM_OUTDIR when --out is not given.
  const auto env_dir = fresh_dir("envout");
  setenv("PAIRSIM_OUTDIR", env_dir.string().c_str(), 1);
  const auto renv = run_cli("budget", env_dir);
  unsetenv("PAIRSIM_OUTDIR");
  REQUIRE(renv.exit_code == 0);
  CHECK(fs::exists(env_dir / "budget.txt"));
}

TEST_CASE("resource exhaustion exits with code 3") {
  const auto dir = fresh_dir("resource");
  // 80 GHz bandwidth at high pump for a long duration blows the event cap.
  const auto r = run_cli("--out " + dir.string() +
                             " --filter dwdm100ghz --pump-mw 10 histogram --duration 100",
                         dir);
  CHECK(r.exit_code == 3);
}

TEST_CASE("hwp sweep fits with the apparatus period") {
  const auto dir = fresh_dir("hwp");
  const auto r = run_cli("--out " + dir.string() +
                             " --seed 11 fringe --sweep hwp --points 24 --pairs-per-point 3000",
                         dir);
  REQUIRE(r.exit_code == 0);
  const auto kv = parse_kv(r.stdout_text);
  CHECK(kv.at("net_visibility") > 0.9);
  const std::string table = read_file(dir / "fringe.txt");
  CHECK(table.find("# columns x_rad counts accidental_counts") != std::string::npos);
}
