#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "brls/config.hpp"
#include "brls/model.hpp"
#include "brls/nh_eigen.hpp"

using namespace brls;
using Catch::Matchers::ContainsSubstring;

namespace {

ConfigFile parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is, "test");
}

// scratch directory for binary runs, removed on scope exit
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("brls-cli-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// run the real binary; returns the process exit code
int run_cli(const std::string& args, const std::filesystem::path& log_dir) {
  const std::string cmd = std::string("\"") + BRLS_CLI_PATH + "\" " + args +
                          " >\"" + (log_dir / "stdout.txt").string() +
                          "\" 2>\"" + (log_dir / "stderr.txt").string() + "\"";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

// split one CSV line, no quoting needed for our files
std::vector<std::string> cells(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& p) {
  std::ifstream is(p);
  REQUIRE(is.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) rows.push_back(cells(line));
  return rows;
}

const std::string basic_config = R"(
[model]
kind = tavis-cummings
n_emitters = 1
omega_c_ev = 2.0
omega_e_ev = 2.0
g_ec_ev = 0.1
gamma_c_ev = 0.1
gamma_e_ev = 0.0001

[bath]
kind = zero

[run]
method = nh-only
initial = up
t_max_fs = 50
samples = 81
)";

}  // namespace

TEST_CASE("config files parse sections comments and types", "[cli]") {
  const auto cfg = parse(R"(
# leading comment
[model]
kind = tavis-cummings   ; trailing comment
n_emitters = 3
g_ec_ev = 0.25

[run]
method = brls
method = br             # last assignment wins
)");
  CHECK(cfg.has("model"));
  CHECK(cfg.has("run"));
  CHECK_FALSE(cfg.has("bath"));
  CHECK(cfg.get_string("model", "kind") == "tavis-cummings");
  CHECK(cfg.get_int("model", "n_emitters") == 3);
  CHECK(cfg.get_double("model", "g_ec_ev") == 0.25);
  CHECK(cfg.get_string("run", "method") == "br");
  CHECK(cfg.get_double("model", "missing", 1.5) == 1.5);
  CHECK(cfg.get_int("model", "missing", 7) == 7);
  CHECK(cfg.get_string("model", "missing", "x") == "x");

  SECTION("serialization round trips") {
    std::ostringstream os;
    cfg.serialize(os);
    const auto again = parse(os.str());
    CHECK(again.sections == cfg.sections);
  }

  SECTION("set overrides an existing value") {
    auto copy = cfg;
    copy.set("run", "method", "exact");
    copy.set("exact", "modes", "50");
    CHECK(copy.get_string("run", "method") == "exact");
    CHECK(copy.get_int("exact", "modes") == 50);
  }
}

TEST_CASE("malformed configs are rejected with positions", "[cli]") {
  CHECK_THROWS_MATCHES(parse("[model]\nkind tavis"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           ContainsSubstring("test:2") &&
                           ContainsSubstring("expected key = value")));
  CHECK_THROWS_MATCHES(
      parse("kind = tc"), ConfigError,
      Catch::Matchers::MessageMatches(ContainsSubstring("outside any section")));
  CHECK_THROWS_MATCHES(
      parse("[model\nkind = tc"), ConfigError,
      Catch::Matchers::MessageMatches(ContainsSubstring("unterminated")));
  CHECK_THROWS_MATCHES(
      parse("[]\nk = v"), ConfigError,
      Catch::Matchers::MessageMatches(ContainsSubstring("empty section")));
  CHECK_THROWS_MATCHES(
      parse("[a]\n= v"), ConfigError,
      Catch::Matchers::MessageMatches(ContainsSubstring("empty key")));

  const auto cfg = parse("[run]\nsamples = many\nrel_tol = 1e-8x\n");
  CHECK_THROWS_MATCHES(cfg.get_int("run", "samples"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           ContainsSubstring("'run.samples'") &&
                           ContainsSubstring("not an integer") &&
                           ContainsSubstring("many")));
  CHECK_THROWS_MATCHES(cfg.get_double("run", "rel_tol"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           ContainsSubstring("'run.rel_tol'") &&
                           ContainsSubstring("not a number")));
  CHECK_THROWS_MATCHES(cfg.get_string("run", "missing"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           ContainsSubstring("'run.missing'")));
  CHECK_THROWS_AS(load_config("/nonexistent/path.cfg"), ConfigError);
}

TEST_CASE("run configs validate their fields", "[cli]") {
  SECTION("defaults fill an empty file") {
    const auto rc = parse_run_config(parse(""));
    CHECK(rc.model_kind == "tavis-cummings");
    CHECK(rc.method == "brls");
    CHECK(rc.initial == "up");
    CHECK(rc.t_max_fs == 200.0);
    CHECK(rc.samples == 400);
    CHECK(rc.bath_kind == "lorentzian");
    CHECK_FALSE(rc.has_exact);
    CHECK_FALSE(rc.has_sweep);
    CHECK(rc.nm_t_max_fs == 500.0);
    CHECK(rc.nm_samples == 1000);
  }

  const auto throws_with = [](const std::string& text,
                              const std::string& needle) {
    CHECK_THROWS_MATCHES(parse_run_config(parse(text)), ConfigError,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring(needle)));
  };

  SECTION("whitelists") {
    throws_with("[model]\nkind = spin-chain", "'model.kind'");
    throws_with("[model]\ncavity_jump = squeeze", "'model.cavity_jump'");
    throws_with("[bath]\nkind = ohmic", "'bath.kind'");
    throws_with("[run]\nmethod = magic", "'run.method'");
    throws_with("[run]\nsamples = 1", "'run.samples'");
    throws_with("[run]\nt_max_fs = -5", "'run.t_max_fs'");
  }

  SECTION("an exact run must spell out its discretization") {
    throws_with("[run]\nmethod = exact", "[exact] section");
    const auto rc = parse_run_config(
        parse("[run]\nmethod = exact\n[exact]\nmodes = 80\nphonon_cap = 2"));
    CHECK(rc.has_exact);
    CHECK(rc.modes == 80);
    CHECK(rc.phonon_cap == 2);
    CHECK(rc.window_min_ev == 0.05);
  }

  SECTION("sweep block") {
    throws_with("[sweep]\nparameter = g_ec_ev\nfrom = 0\nto = 1\nsteps = 0",
                "'sweep.steps'");
    throws_with("[sweep]\nparameter = g_ec_ev\nfrom = inf\nto = 1\nsteps = 2",
                "finite");
    const auto rc = parse_run_config(parse(
        "[sweep]\nparameter = gamma_c_ev\nfrom = 0.001\nto = 0.1\nsteps = 5"));
    CHECK(rc.has_sweep);
    CHECK(rc.sweep_parameter == "gamma_c_ev");
    CHECK(rc.sweep_steps == 5);
  }

  SECTION("matrix-file models need a path") {
    throws_with("[model]\nkind = matrix-file", "'model.path'");
  }
}

TEST_CASE("matrix csv round trips sparse complex entries", "[cli]") {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(3, 3);
  m(0, 0) = 1.25;
  m(0, 2) = {0.5, -0.125};
  m(2, 0) = {0.5, 0.125};
  m(1, 1) = -2.0;

  std::ostringstream os;
  write_matrix_csv(os, m);
  std::istringstream is(os.str());
  const Eigen::MatrixXcd back = read_matrix_csv(is, "roundtrip");
  REQUIRE(back.rows() == 3);
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);

  SECTION("three column rows default the imaginary part") {
    std::istringstream plain("0,1,0.5\n1,0,0.5\n");
    const auto h = read_matrix_csv(plain, "plain");
    CHECK(h(0, 1) == std::complex<double>(0.5, 0.0));
  }
  SECTION("bad rows are rejected with their line") {
    std::istringstream bad("i,j,re,im\n0,0,1\n0,x,2\n");
    CHECK_THROWS_MATCHES(read_matrix_csv(bad, "bad"), ConfigError,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("bad:3")));
    std::istringstream empty("");
    CHECK_THROWS_MATCHES(read_matrix_csv(empty, "none"), ConfigError,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("no matrix entries")));
  }
}

TEST_CASE("config driven models match direct construction", "[cli]") {
  const auto cfg = parse(R"(
[model]
kind = tavis-cummings
n_emitters = 2
omega_c_ev = 2.0
omega_e_ev = 1.95
g_ec_ev = 0.12
gamma_c_ev = 0.05
gamma_e_ev = 0.001

[bath]
kind = lorentzian
g_ev = 0.03
omega0_ev = 0.2
kappa_ev = 0.005
)");
  const auto rc = parse_run_config(cfg);
  const auto sd = build_bath(rc);
  const auto m = build_model(rc, sd);
  const auto direct = tavis_cummings(2, 2.0, 1.95, 0.12, 0.05, 0.001, sd);
  REQUIRE(m.h.rows() == direct.h.rows());
  CHECK((m.h - direct.h).norm() < 1e-14);
  CHECK(m.jumps.size() == direct.jumps.size());
  CHECK(m.couplings.size() == direct.couplings.size());
  CHECK(sd(0.2) == Catch::Approx(0.1145915590261646).epsilon(1e-12));

  SECTION("composite and zero baths") {
    auto rc2 = rc;
    rc2.bath_kind = "composite";
    rc2.bath_peaks = "0.03:0.2:0.005, 0.01:0.1:0.02";
    const auto comp = build_bath(rc2);
    const auto ref = SpectralDensity::composite(
        {{0.03, 0.2, 0.005}, {0.01, 0.1, 0.02}}, 0.0);
    CHECK(comp(0.15) == Catch::Approx(ref(0.15)).epsilon(1e-12));
    rc2.bath_peaks = "0.03:0.2";
    CHECK_THROWS_AS(build_bath(rc2), ConfigError);
    rc2.bath_kind = "zero";
    CHECK(build_bath(rc2).is_zero());
  }

  SECTION("named initial states pick the right eigenvectors") {
    const auto eig = decompose(build_nh(m));
    const auto up = initial_state("up", eig);
    const auto lp = initial_state("lp", eig);
    const auto ground = initial_state("ground", eig);
    for (const auto* rho : {&up, &lp, &ground})
      CHECK(std::abs(rho->trace().real() - 1.0) < 1e-12);
    double w_up = 0.0, w_lp = 0.0, w_g = 0.0;
    for (Eigen::Index a = 0; a < eig.dim(); ++a) {
      const auto in_eig = to_eigenbasis(eig, up);
      if (std::abs(in_eig(a, a)) > 0.5) w_up = eig.omega(a);
      const auto in_lp = to_eigenbasis(eig, lp);
      if (std::abs(in_lp(a, a)) > 0.5) w_lp = eig.omega(a);
      const auto in_g = to_eigenbasis(eig, ground);
      if (std::abs(in_g(a, a)) > 0.5) w_g = eig.omega(a);
    }
    CHECK(w_g < w_lp);
    CHECK(w_lp < w_up);
    CHECK(initial_state("basis:1", eig)(1, 1).real() == 1.0);
    CHECK_THROWS_AS(initial_state("eigen:99", eig), ConfigError);
    CHECK_THROWS_AS(initial_state("sideways", eig), ConfigError);
  }
}

TEST_CASE("sweep parameters map onto numeric fields", "[cli]") {
  RunConfig rc;
  apply_sweep_value(rc, "gamma_c_ev", 0.07);
  CHECK(rc.gamma_c_ev == 0.07);
  apply_sweep_value(rc, "bath_omega0_ev", 0.31);
  CHECK(rc.bath_omega0_ev == 0.31);
  CHECK_THROWS_MATCHES(apply_sweep_value(rc, "n_emitters", 3.0), ConfigError,
                       Catch::Matchers::MessageMatches(
                           ContainsSubstring("unknown key") &&
                           ContainsSubstring("gamma_c_ev")));
}

TEST_CASE("the binary reports spectra and trajectories", "[cli]") {
  TempDir tmp;
  const auto cfg_path = tmp.path / "run.cfg";
  write_file(cfg_path, basic_config);
  const auto out = tmp.path / "out";

  REQUIRE(run_cli("eig -c \"" + cfg_path.string() + "\" -o \"" +
                      out.string() + "\"",
                  tmp.path) == 0);
  const auto eig_rows = read_csv(out / "eig.csv");
  REQUIRE(eig_rows.size() == 4);  // header + three states
  CHECK(eig_rows[0][0] == "state");
  CHECK(slurp(tmp.path / "stdout.txt").find("omega_ev") != std::string::npos);

  // locate ground (lowest omega), then LP (lower of the remaining two)
  int ground = -1, lp = -1, up = -1;
  {
    double w[3];
    for (int a = 0; a < 3; ++a) w[a] = std::stod(eig_rows[a + 1][1]);
    ground = static_cast<int>(std::min_element(w, w + 3) - w);
    up = static_cast<int>(std::max_element(w, w + 3) - w);
    lp = 3 - ground - up;
    REQUIRE(ground != up);
  }

  REQUIRE(run_cli("evolve -c \"" + cfg_path.string() + "\" -o \"" +
                      out.string() + "\"",
                  tmp.path) == 0);
  const auto rows = read_csv(out / "trajectory.csv");
  REQUIRE(rows.size() == 82);  // header + samples
  REQUIRE(rows[0].size() == 8);
  CHECK(rows[0][0] == "t_fs");
  CHECK(rows[0][3 + ground] == "P_" + std::to_string(ground));
  CHECK(rows[0][6] == "re_n_cav");

  // without a structured bath there is no downhill channel: starting from the
  // upper polariton, the lower polariton must stay empty while cavity decay
  // funnels the population straight to the ground state
  for (std::size_t k = 1; k < rows.size(); ++k) {
    CHECK(std::abs(std::stod(rows[k][3 + lp])) < 1e-12);
    CHECK(std::abs(std::stod(rows[k][1]) - 1.0) < 1e-6);
  }
  CHECK(std::stod(rows[1][3 + up]) == Catch::Approx(1.0).margin(1e-9));
  CHECK(std::stod(rows.back()[3 + up]) < 0.05);
  CHECK(std::stod(rows.back()[3 + ground]) > 0.9);

  const auto manifest = slurp(out / "manifest.txt");
  CHECK(manifest.find("status = ok") != std::string::npos);
  CHECK(manifest.find("command =") != std::string::npos);
  CHECK(manifest.find("[model]") != std::string::npos);
}

TEST_CASE("reruns are byte for byte identical", "[cli]") {
  TempDir tmp;
  const auto cfg_path = tmp.path / "run.cfg";
  write_file(cfg_path, basic_config);

  for (const char* dir : {"a", "b"})
    REQUIRE(run_cli("evolve -c \"" + cfg_path.string() + "\" -o \"" +
                        (tmp.path / dir).string() + "\"",
                    tmp.path) == 0);
  CHECK(slurp(tmp.path / "a" / "trajectory.csv") ==
        slurp(tmp.path / "b" / "trajectory.csv"));
  CHECK(slurp(tmp.path / "a" / "eig.csv") ==
        slurp(tmp.path / "b" / "eig.csv"));
}

TEST_CASE("failures map to distinct exit codes", "[cli]") {
  TempDir tmp;
  const auto cfg_path = tmp.path / "run.cfg";
  write_file(cfg_path, basic_config);

  SECTION("missing config file") {
    CHECK(run_cli("eig -c \"" + (tmp.path / "absent.cfg").string() + "\"",
                  tmp.path) == 2);
  }
  SECTION("config errors, including ones injected via --set") {
    CHECK(run_cli("eig -c \"" + cfg_path.string() + "\" -o \"" +
                      (tmp.path / "out").string() +
                      "\" --set run.method=magic",
                  tmp.path) == 2);
    CHECK(slurp(tmp.path / "stderr.txt").find("run.method") !=
          std::string::npos);
  }
  SECTION("missing subcommand is a usage error") {
    CHECK(run_cli("-c \"" + cfg_path.string() + "\"", tmp.path) == 2);
  }
  SECTION("numeric failures during execution") {
    // a joint space far past the guard: the run starts, then refuses
    write_file(cfg_path, basic_config + R"(
[exact]
modes = 4000
phonon_cap = 2
)");
    const auto out = tmp.path / "out3";
    CHECK(run_cli("evolve -c \"" + cfg_path.string() + "\" -o \"" +
                      out.string() + "\" --set run.method=exact --set " +
                      "bath.kind=lorentzian",
                  tmp.path) == 3);
    const auto manifest = slurp(out / "manifest.txt");
    CHECK(manifest.find("status = failed") != std::string::npos);
    CHECK(manifest.find("error =") != std::string::npos);
  }
}

TEST_CASE("effective density curves come from the jeff subcommand", "[cli]") {
  TempDir tmp;
  const auto cfg_path = tmp.path / "run.cfg";
  write_file(cfg_path, R"(
[bath]
kind = lorentzian
g_ev = 0.03
omega0_ev = 0.2
kappa_ev = 0.005
)");
  const auto out = tmp.path / "out";
  REQUIRE(run_cli("jeff -c \"" + cfg_path.string() + "\" -o \"" +
                      out.string() +
                      "\" --gammas 0:0,0.05:0.1 --range 0:0.4 --points 41",
                  tmp.path) == 0);

  const auto sharp = read_csv(out / "jeff_00.csv");
  const auto broad = read_csv(out / "jeff_01.csv");
  REQUIRE(sharp.size() == 42);
  REQUIRE(broad.size() == 42);
  CHECK(sharp[0] == std::vector<std::string>{"omega_ev", "j_ev", "jeff_ev"});

  double peak_j = 0.0, peak_sharp = 0.0, peak_broad = 0.0;
  for (std::size_t k = 1; k < sharp.size(); ++k) {
    const double w = std::stod(sharp[k][0]);
    const double j = std::stod(sharp[k][1]);
    const double js = std::stod(sharp[k][2]);
    const double jb = std::stod(broad[k][2]);
    // without loss broadening the effective density collapses onto the bare
    // one on the positive axis
    if (w > 0.0) CHECK(js == Catch::Approx(j).margin(1e-12));
    peak_j = std::max(peak_j, j);
    peak_sharp = std::max(peak_sharp, js);
    peak_broad = std::max(peak_broad, jb);
  }
  CHECK(peak_sharp == Catch::Approx(peak_j).epsilon(1e-9));
  CHECK(peak_broad < 0.5 * peak_j);            // broadening flattens the peak
  CHECK(std::stod(broad[1][2]) > 1e-4);        // and leaks below the band edge
  CHECK(std::stod(sharp[1][2]) < 1e-12);       // where the sharp one vanishes

  SECTION("malformed flags are config errors") {
    CHECK(run_cli("jeff -c \"" + cfg_path.string() + "\" -o \"" +
                      out.string() + "\" --gammas 0.05",
                  tmp.path) == 2);
    CHECK(run_cli("jeff -c \"" + cfg_path.string() + "\" -o \"" +
                      out.string() + "\" --gammas 0:0 --range nope",
                  tmp.path) == 2);
  }
}

TEST_CASE("rates tables cover every ordered pair", "[cli]") {
  TempDir tmp;
  const auto cfg_path = tmp.path / "run.cfg";
  write_file(cfg_path, R"(
[model]
kind = tavis-cummings
g_ec_ev = 0.1
gamma_c_ev = 0.02
gamma_e_ev = 0.0001

[bath]
kind = lorentzian
g_ev = 0.03
omega0_ev = 0.2
kappa_ev = 0.005
)");
  const auto out = tmp.path / "out";
  REQUIRE(run_cli("rates -c \"" + cfg_path.string() + "\" -o \"" +
                      out.string() + "\"",
                  tmp.path) == 0);
  const auto rows = read_csv(out / "rates.csv");
  REQUIRE(rows.size() == 7);  // header + 3*2 ordered pairs
  CHECK(rows[0][4] == "k_ev");

  std::map<std::pair<int, int>, double> k;
  std::map<int, double> omega;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const int i = std::stoi(rows[r][0]);
    const int f = std::stoi(rows[r][1]);
    omega[i] = std::stod(rows[r][2]);
    k[{i, f}] = std::stod(rows[r][4]);
    CHECK(std::stod(rows[r][4]) >= 0.0);
  }
  // identify the polaritons by energy: the lowest state is the ground state,
  // the split pair sits above it; downhill transfer must win at kT = 0
  int ground = 0, up = 0;
  for (const auto& [a, w] : omega) {
    if (w < omega[ground]) ground = a;
    if (w > omega[up]) up = a;
  }
  const int lp = 3 - ground - up;
  CHECK(k[{up, lp}] > 10.0 * k[{lp, up}]);
}

TEST_CASE("parameter sweeps emit per point files and a merged map", "[cli]") {
  TempDir tmp;
  const auto cfg_path = tmp.path / "run.cfg";
  write_file(cfg_path, R"(
[model]
kind = tavis-cummings
gamma_c_ev = 0.001

[bath]
kind = zero

[run]
method = nh-only
initial = up
t_max_fs = 20
samples = 21

[sweep]
parameter = gamma_c_ev
from = 0.001
to = 0.005
steps = 3
)");
  const auto out = tmp.path / "out";
  REQUIRE(run_cli("sweep -c \"" + cfg_path.string() + "\" -o \"" +
                      out.string() + "\"",
                  tmp.path) == 0);
  for (const char* name : {"point_000.csv", "point_001.csv", "point_002.csv"})
    CHECK(std::filesystem::exists(out / "sweep" / name));

  const auto map = read_csv(out / "sweep" / "map.csv");
  REQUIRE(map.size() == 1 + 3 * 21);
  CHECK(map[0][0] == "gamma_c_ev");
  CHECK(std::stod(map[1][0]) == 0.001);
  CHECK(std::stod(map[1 + 21][0]) == 0.003);
  CHECK(std::stod(map[1 + 42][0]) == 0.005);

  // the initially filled state is the column at 1 in the first sample;
  // stronger cavity loss empties it faster
  int up_col = -1;
  for (int c = 3; c <= 5; ++c)
    if (std::stod(map[1][static_cast<std::size_t>(c)]) > 0.9) up_col = c;
  REQUIRE(up_col > 0);
  const auto col = static_cast<std::size_t>(up_col);
  CHECK(std::stod(map[63][col]) < std::stod(map[21][col]));

  SECTION("sweeping without a sweep section is refused") {
    write_file(cfg_path, basic_config);
    CHECK(run_cli("sweep -c \"" + cfg_path.string() + "\" -o \"" +
                      out.string() + "\"",
                  tmp.path) == 2);
  }
}

TEST_CASE("memory scans write per loss summaries", "[cli]") {
  TempDir tmp;
  const auto cfg_path = tmp.path / "run.cfg";
  // purely markovian setup: every pair must score exactly zero
  write_file(cfg_path, R"(
[model]
kind = tavis-cummings
gamma_c_ev = 0.01
gamma_e_ev = 0.0001

[bath]
kind = zero

[run]
method = brls

[nm]
t_max_fs = 50
samples = 51
random_pairs = 2
)");
  const auto out = tmp.path / "out";
  REQUIRE(run_cli("nm -c \"" + cfg_path.string() + "\" -o \"" + out.string() +
                      "\" --gamma-c 0.001,0.005",
                  tmp.path) == 0);

  const auto scan = read_csv(out / "nm_scan.csv");
  REQUIRE(scan.size() == 3);
  CHECK(scan[0][0] == "gamma_c_ev");
  CHECK(std::stod(scan[1][0]) == 0.001);
  CHECK(std::stod(scan[2][0]) == 0.005);
  CHECK(std::stod(scan[1][1]) < 1e-10);
  CHECK(std::stod(scan[2][1]) < 1e-10);

  for (const char* name : {"nm_00.csv", "nm_01.csv"}) {
    const auto text = slurp(out / name);
    CHECK(text.find("seeded") != std::string::npos);
    CHECK(text.find("max:") != std::string::npos);
  }

  SECTION("only propagating methods are allowed") {
    CHECK(run_cli("nm -c \"" + cfg_path.string() + "\" -o \"" + out.string() +
                      "\" --set run.method=nh-only",
                  tmp.path) == 2);
  }
}
