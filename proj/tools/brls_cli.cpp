// Command line front end.  Every run is driven by a config file; subcommands
// pick which pipeline to execute and write their results as CSV files into an
// output directory, together with a manifest recording how the run went.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "brls/config.hpp"
#include "brls/dynamics.hpp"
#include "brls/generator.hpp"
#include "brls/model.hpp"
#include "brls/nh_eigen.hpp"
#include "brls/nonmarkov.hpp"
#include "brls/oracle.hpp"
#include "brls/relaxation.hpp"
#include "brls/spectral_density.hpp"
#include "brls/units.hpp"
#include "brls/version.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = "brls-out";
  int workers = 0;  // 0: ask the hardware
  unsigned seed = 7;
  std::vector<std::string> overrides;  // section.key=value
};

int effective_workers(const GlobalArgs& g) {
  if (g.workers > 0) return g.workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void apply_overrides(brls::ConfigFile& cfg,
                     const std::vector<std::string>& overrides) {
  for (const auto& entry : overrides) {
    const auto eq = entry.find('=');
    const auto dot = entry.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw brls::ConfigError("--set: expected section.key=value, got '" +
                              entry + "'");
    cfg.set(entry.substr(0, dot), entry.substr(dot + 1, eq - dot - 1),
            entry.substr(eq + 1));
  }
}

double parse_number(const std::string& raw, const std::string& what) {
  try {
    return std::stod(raw);
  } catch (const std::exception&) {
    throw brls::ConfigError(what + ": not a number: '" + raw + "'");
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os)
    throw std::runtime_error("cannot write output file '" + path.string() +
                             "'");
  return os;
}

// manifest.txt: enough to rerun and to tell whether the run finished
struct Manifest {
  fs::path path;
  std::string command;
  std::string config_echo;
  unsigned seed = 7;
  int workers = 1;
  std::chrono::steady_clock::time_point started =
      std::chrono::steady_clock::now();

  void write(const std::string& status, const std::string& error = "") const {
    std::ofstream os(path);
    if (!os) return;  // never let manifest writing mask the real failure
    os << "status = " << status << "\n";
    os << "command = " << command << "\n";
    os << "version = " << brls::version << "\n";
    os << "eigen = " << brls::eigen_world << '.' << brls::eigen_major << '.'
       << brls::eigen_minor << "\n";
    os << "seed = " << seed << "\n";
    os << "workers = " << workers << "\n";
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      started)
            .count();
    os << "wall_time_s = " << wall << "\n";
    if (!error.empty()) os << "error = " << error << "\n";
    if (!config_echo.empty()) os << "\n" << config_echo;
  }
};

void write_eig_csv(std::ostream& os, const brls::NHEigensystem& eig) {
  os << "state,omega_ev,gamma_ev\n";
  os.precision(12);
  for (Eigen::Index a = 0; a < eig.dim(); ++a)
    os << a << ',' << eig.omega(a) << ',' << eig.gamma(a) << "\n";
}

struct Pipelines {
  GlobalArgs g;
  brls::ConfigFile cfg;
  brls::RunConfig rc;
  fs::path out;

  brls::SystemModel model() const {
    return brls::build_model(rc, brls::build_bath(rc));
  }

  std::vector<double> grid() const {
    return brls::uniform_grid_fs(rc.t_max_fs, rc.samples);
  }

  // eig: print the complex spectrum and persist it
  int run_eig() const {
    const auto m = model();
    const auto eig = brls::decompose(brls::build_nh(m));
    std::cout << "state   omega_ev      gamma_ev\n";
    for (Eigen::Index a = 0; a < eig.dim(); ++a)
      std::printf("%5td   %11.8f   %.8e\n", static_cast<std::ptrdiff_t>(a),
                  eig.omega(a), eig.gamma(a));
    auto os = open_out(out / "eig.csv");
    write_eig_csv(os, eig);
    return 0;
  }

  brls::Trajectory propagate(const brls::SystemModel& m,
                             const brls::NHEigensystem& eig,
                             const Eigen::MatrixXcd& rho0,
                             const std::vector<double>& t) const {
    const brls::EvolveOptions opts{rc.rel_tol, rc.abs_tol};
    if (rc.method == "exact") {
      const auto bath = brls::discretize(m.couplings.empty()
                                             ? brls::SpectralDensity::zero()
                                             : m.couplings.front().bath,
                                         rc.window_min_ev, rc.window_max_ev,
                                         rc.modes);
      if (!bath.warning.empty()) std::cerr << bath.warning << "\n";
      {
        auto os = open_out(out / "bath_modes.csv");
        brls::write_bath_csv(os, bath);
      }
      brls::ExactOptions eo;
      eo.phonon_cap = rc.phonon_cap;
      eo.rel_tol = rc.rel_tol;
      eo.abs_tol = rc.abs_tol;
      return brls::exact_evolve(m, bath, rho0, t, eo);
    }
    brls::RelaxationTensor tensor;
    if (rc.method == "brls")
      tensor = brls::brls_tensor(eig, brls::eigen_couplings(eig, m),
                                 effective_workers(g));
    else if (rc.method == "br")
      tensor = brls::br_tensor(eig, brls::eigen_couplings(eig, m),
                               effective_workers(g));
    // nh-only: empty tensor, losses alone
    return brls::evolve(brls::assemble_generator(eig, tensor, m.jumps), rho0,
                        t, opts);
  }

  // evolve: one trajectory with the configured method
  int run_evolve() const {
    const auto m = model();
    const auto eig = brls::decompose(brls::build_nh(m));
    {
      auto os = open_out(out / "eig.csv");
      write_eig_csv(os, eig);
    }
    const auto traj =
        propagate(m, eig, brls::initial_state(rc.initial, eig), grid());
    std::vector<std::string> names;
    Eigen::MatrixXcd series;
    if (rc.model_kind == "tavis-cummings") {
      names = {"n_cav"};
      series = brls::observables(traj, {m.space.number(0)});
    }
    auto os = open_out(out / "trajectory.csv");
    brls::write_trajectory_csv(os, traj, names, series);
    std::cout << "wrote " << (out / "trajectory.csv").string() << " ("
              << traj.size() << " samples)\n";
    return 0;
  }

  // sweep: rerun the evolve pipeline over a scanned parameter
  int run_sweep() const {
    if (!rc.has_sweep)
      throw brls::ConfigError("sweep requires a [sweep] section");
    const int n = rc.sweep_steps;
    std::vector<double> values(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
      values[static_cast<std::size_t>(k)] =
          n == 1 ? rc.sweep_from
                 : rc.sweep_from +
                       (rc.sweep_to - rc.sweep_from) * k / (n - 1.0);

    fs::create_directories(out / "sweep");
    std::vector<brls::Trajectory> trajs(values.size());
    const auto t = grid();

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(values.size());
    auto work = [&]() {
      while (true) {
        const std::size_t k = next.fetch_add(1);
        if (k >= values.size()) return;
        try {
          brls::RunConfig point = rc;
          brls::apply_sweep_value(point, rc.sweep_parameter, values[k]);
          const auto m = brls::build_model(point, brls::build_bath(point));
          const auto eig = brls::decompose(brls::build_nh(m));
          trajs[k] =
              propagate(m, eig, brls::initial_state(point.initial, eig), t);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
    };
    const int pool = std::max(
        1, std::min<int>(rc.sweep_workers > 0 ? rc.sweep_workers
                                              : effective_workers(g),
                         static_cast<int>(values.size())));
    std::vector<std::thread> threads;
    for (int w = 1; w < pool; ++w) threads.emplace_back(work);
    work();
    for (auto& th : threads) th.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);

    for (std::size_t k = 0; k < values.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "point_%03zu.csv", k);
      auto os = open_out(out / "sweep" / name);
      brls::write_trajectory_csv(os, trajs[k]);
    }
    auto os = open_out(out / "sweep" / "map.csv");
    const Eigen::Index d = trajs.front().eig.dim();
    os << rc.sweep_parameter << ",t_fs,trace";
    for (Eigen::Index a = 0; a < d; ++a) os << ",P_" << a;
    os << "\n";
    os.precision(12);
    for (std::size_t k = 0; k < values.size(); ++k)
      for (std::size_t s = 0; s < trajs[k].size(); ++s) {
        const Eigen::Index ss = static_cast<Eigen::Index>(s);
        os << values[k] << ',' << brls::internal_to_fs(trajs[k].time[s]) << ','
           << trajs[k].trace(ss);
        for (Eigen::Index a = 0; a < d; ++a)
          os << ',' << trajs[k].populations(ss, a);
        os << "\n";
      }
    std::cout << "wrote " << values.size() << " sweep points\n";
    return 0;
  }

  // jeff: loss-broadened effective spectral density over a detuning range,
  // one curve per requested linewidth pair
  int run_jeff(const std::string& gammas, const std::string& range,
               int points) const {
    const auto sd = brls::build_bath(rc);
    const auto lohi = brls::detail::split(range, ':');
    if (lohi.size() != 2)
      throw brls::ConfigError("--range: expected lo:hi, got '" + range + "'");
    const double lo = parse_number(lohi[0], "--range");
    const double hi = parse_number(lohi[1], "--range");
    if (!(hi > lo) || points < 2)
      throw brls::ConfigError("--range/--points: need hi > lo and points >= 2");

    int index = 0;
    for (const auto& pair : brls::detail::split(gammas, ',')) {
      const auto parts = brls::detail::split(pair, ':');
      if (parts.size() != 2)
        throw brls::ConfigError("--gammas: expected g1:g2 pairs, got '" + pair +
                                "'");
      const double g1 = parse_number(parts[0], "--gammas");
      const double g2 = parse_number(parts[1], "--gammas");
      char name[32];
      std::snprintf(name, sizeof name, "jeff_%02d.csv", index++);
      auto os = open_out(out / name);
      os << "omega_ev,j_ev,jeff_ev\n";
      os.precision(12);
      for (int k = 0; k < points; ++k) {
        const double w = lo + (hi - lo) * k / (points - 1.0);
        const auto f = brls::half_fourier(sd, 0.0, w, g1, g2);
        os << w << ',' << sd(w) << ','
           << f.real() / brls::SpectralDensity::pi << "\n";
      }
    }
    std::cout << "wrote " << index << " effective-density curves\n";
    return 0;
  }

  // rates: golden-rule population transfer rates between all eigenstate pairs
  int run_rates() const {
    const auto m = model();
    const auto eig = brls::decompose(brls::build_nh(m));
    const auto couplings = brls::eigen_couplings(eig, m);
    auto os = open_out(out / "rates.csv");
    os << "i,f,omega_i_ev,omega_f_ev,k_ev\n";
    os.precision(12);
    for (Eigen::Index i = 0; i < eig.dim(); ++i)
      for (Eigen::Index f = 0; f < eig.dim(); ++f) {
        if (i == f) continue;
        os << i << ',' << f << ',' << eig.omega(i) << ',' << eig.omega(f)
           << ',' << brls::secular_rate(eig, couplings, i, f) << "\n";
      }
    std::cout << "wrote " << (out / "rates.csv").string() << "\n";
    return 0;
  }

  // nm: trace-distance memory measure, optionally scanned over cavity loss
  int run_nm(const std::string& gamma_list) const {
    if (rc.method != "brls" && rc.method != "exact")
      throw brls::ConfigError("nm supports method brls or exact only");
    std::vector<double> gammas;
    if (gamma_list.empty())
      gammas.push_back(rc.gamma_c_ev);
    else
      for (const auto& s : brls::detail::split(gamma_list, ','))
        gammas.push_back(parse_number(s, "--gamma-c"));

    const auto t = brls::uniform_grid_fs(rc.nm_t_max_fs, rc.nm_samples);
    const double t_min = brls::fs_to_internal(rc.nm_t_min_fs);

    auto os = open_out(out / "nm_scan.csv");
    os << "gamma_c_ev,nm,optimal_pair\n";
    os.precision(12);
    int index = 0;
    for (const double gc : gammas) {
      brls::RunConfig point = rc;
      point.gamma_c_ev = gc;
      const auto sd = brls::build_bath(point);
      const auto m = brls::build_model(point, sd);
      const auto eig = brls::decompose(brls::build_nh(m));
      const auto pairs =
          brls::default_pairs(m.space, rc.nm_random_pairs, g.seed);

      std::function<std::vector<Eigen::MatrixXcd>(const Eigen::MatrixXcd&)>
          propagate_one;
      if (rc.method == "brls") {
        const auto gen = brls::assemble_generator(
            eig,
            brls::brls_tensor(eig, brls::eigen_couplings(eig, m),
                              effective_workers(g)),
            m.jumps);
        propagate_one = [gen, &t, this](const Eigen::MatrixXcd& rho0) {
          const auto traj = brls::evolve(gen, rho0, t,
                                         {rc.rel_tol, rc.abs_tol});
          std::vector<Eigen::MatrixXcd> states(traj.size());
          for (std::size_t k = 0; k < traj.size(); ++k)
            states[k] = traj.computational_state(k);
          return states;
        };
      } else {
        const auto bath = brls::discretize(sd, rc.window_min_ev,
                                           rc.window_max_ev, rc.modes);
        if (!bath.warning.empty()) std::cerr << bath.warning << "\n";
        brls::ExactOptions eo;
        eo.phonon_cap = rc.phonon_cap;
        eo.rel_tol = rc.rel_tol;
        eo.abs_tol = rc.abs_tol;
        propagate_one = [m, bath, &t, eo](const Eigen::MatrixXcd& rho0) {
          const auto traj = brls::exact_evolve(m, bath, rho0, t, eo);
          std::vector<Eigen::MatrixXcd> states(traj.size());
          for (std::size_t k = 0; k < traj.size(); ++k)
            states[k] = traj.computational_state(k);
          return states;
        };
      }

      // the measure itself parallelizes over pairs
      const auto result = brls::nm_measure(propagate_one, pairs, t, t_min,
                                           effective_workers(g));
      char name[32];
      std::snprintf(name, sizeof name, "nm_%02d.csv", index++);
      auto pair_os = open_out(out / name);
      brls::write_nm_csv(pair_os, result);
      os << gc << ',' << result.nm << ',' << result.optimal_pair << "\n";
      std::cout << "gamma_c = " << gc << " eV: nm = " << result.nm << " ("
                << result.optimal_pair << ")\n";
    }
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structured-bath open-system dynamics"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalArgs g;
  app.add_option("-c,--config", g.config_path, "run configuration file")
      ->required();
  app.add_option("-o,--out", g.out_dir, "output directory");
  app.add_option("-w,--workers", g.workers, "worker threads (0: all cores)");
  app.add_option("--seed", g.seed, "random seed for generated state pairs");
  app.add_option("--set", g.overrides,
                 "override a config value, section.key=value");

  auto* c_eig = app.add_subcommand("eig", "complex spectrum of the model");
  auto* c_evolve =
      app.add_subcommand("evolve", "propagate one trajectory");
  auto* c_sweep =
      app.add_subcommand("sweep", "scan a parameter, one trajectory each");
  std::string jeff_gammas;
  std::string jeff_range = "0:0.4";
  int jeff_points = 400;
  auto* c_jeff = app.add_subcommand(
      "jeff", "loss-broadened effective spectral density");
  c_jeff->add_option("--gammas", jeff_gammas, "linewidth pairs g1:g2,g1:g2,...")
      ->required();
  c_jeff->add_option("--range", jeff_range, "detuning range lo:hi in eV");
  c_jeff->add_option("--points", jeff_points, "samples across the range");
  auto* c_rates =
      app.add_subcommand("rates", "secular transfer rates between eigenstates");
  std::string nm_gammas;
  auto* c_nm = app.add_subcommand("nm", "trace-distance memory measure");
  c_nm->add_option("--gamma-c", nm_gammas, "cavity loss values, comma list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  Manifest manifest;
  for (int k = 0; k < argc; ++k)
    manifest.command += std::string(k ? " " : "") + argv[k];
  manifest.seed = g.seed;

  try {
    Pipelines p;
    p.g = g;
    p.cfg = brls::load_config(g.config_path);
    apply_overrides(p.cfg, g.overrides);
    p.rc = brls::parse_run_config(p.cfg);
    p.out = g.out_dir;
    fs::create_directories(p.out);

    manifest.path = p.out / "manifest.txt";
    {
      std::ostringstream echo;
      p.cfg.serialize(echo);
      manifest.config_echo = echo.str();
    }
    manifest.workers = effective_workers(g);
    manifest.write("running");

    int code = 0;
    if (c_eig->parsed())
      code = p.run_eig();
    else if (c_evolve->parsed())
      code = p.run_evolve();
    else if (c_sweep->parsed())
      code = p.run_sweep();
    else if (c_jeff->parsed())
      code = p.run_jeff(jeff_gammas, jeff_range, jeff_points);
    else if (c_rates->parsed())
      code = p.run_rates();
    else if (c_nm->parsed())
      code = p.run_nm(nm_gammas);

    manifest.write(code == 0 ? "ok" : "failed");
    return code;
  } catch (const brls::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    if (!manifest.path.empty()) manifest.write("failed", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!manifest.path.empty()) manifest.write("failed", e.what());
    return 3;
  }
}
