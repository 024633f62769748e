#pragma once

#include <Eigen/Dense>
#include <cctype>
#include <climits>
#include <cmath>
#include <complex>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "brls/dynamics.hpp"
#include "brls/model.hpp"
#include "brls/nh_eigen.hpp"
#include "brls/spectral_density.hpp"

// Run configuration: a sectioned key-value text file describing the model,
// the structured bath, the propagation method, and optional sweep and
// memory-measure blocks.  Every physical key carries its unit as a suffix
// (gamma_c_ev, t_max_fs) so files stay self-describing.

namespace brls {

// raised for anything wrong with the configuration rather than the physics
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace detail

class ConfigFile {
 public:
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& sec) const { return sections.count(sec) != 0; }
  bool has(const std::string& sec, const std::string& key) const {
    const auto it = sections.find(sec);
    return it != sections.end() && it->second.count(key) != 0;
  }

  void set(const std::string& sec, const std::string& key,
           const std::string& value) {
    sections[sec][key] = value;
  }

  std::string get_string(const std::string& sec, const std::string& key) const {
    const auto it = sections.find(sec);
    if (it != sections.end()) {
      const auto kt = it->second.find(key);
      if (kt != it->second.end()) return kt->second;
    }
    throw ConfigError("missing key '" + sec + "." + key + "'");
  }
  std::string get_string(const std::string& sec, const std::string& key,
                         const std::string& fallback) const {
    return has(sec, key) ? get_string(sec, key) : fallback;
  }

  double get_double(const std::string& sec, const std::string& key) const {
    const std::string raw = get_string(sec, key);
    try {
      std::size_t used = 0;
      const double v = std::stod(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("'" + sec + "." + key + "': not a number: '" + raw +
                        "'");
    }
  }
  double get_double(const std::string& sec, const std::string& key,
                    double fallback) const {
    return has(sec, key) ? get_double(sec, key) : fallback;
  }

  int get_int(const std::string& sec, const std::string& key) const {
    const std::string raw = get_string(sec, key);
    try {
      std::size_t used = 0;
      const long v = std::stol(raw, &used);
      if (used != raw.size() || v < INT_MIN || v > INT_MAX)
        throw std::invalid_argument(raw);
      return static_cast<int>(v);
    } catch (const std::exception&) {
      throw ConfigError("'" + sec + "." + key + "': not an integer: '" + raw +
                        "'");
    }
  }
  int get_int(const std::string& sec, const std::string& key,
              int fallback) const {
    return has(sec, key) ? get_int(sec, key) : fallback;
  }

  // canonical text form, used for the manifest echo
  void serialize(std::ostream& os) const {
    for (const auto& [sec, keys] : sections) {
      os << '[' << sec << "]\n";
      for (const auto& [key, value] : keys) os << key << " = " << value << "\n";
      os << "\n";
    }
  }
};

inline ConfigFile parse_config(std::istream& is, const std::string& name) {
  ConfigFile out;
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t cut = line.find_first_of("#;");
    if (cut != std::string::npos) line.erase(cut);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(name + ":" + std::to_string(line_no) +
                          ": unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(name + ":" + std::to_string(line_no) +
                          ": empty section name");
      out.sections[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(name + ":" + std::to_string(line_no) +
                        ": expected key = value or [section]");
    if (section.empty())
      throw ConfigError(name + ":" + std::to_string(line_no) +
                        ": key outside any section");
    const std::string key = detail::trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError(name + ":" + std::to_string(line_no) + ": empty key");
    out.sections[section][key] = detail::trim(line.substr(eq + 1));
  }
  return out;
}

inline ConfigFile load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(is, path);
}

// sparse complex matrix rows: i,j,re[,im]; a leading header line is skipped
inline Eigen::MatrixXcd read_matrix_csv(std::istream& is,
                                        const std::string& name) {
  std::string line;
  int line_no = 0;
  struct Entry {
    int i, j;
    std::complex<double> v;
  };
  std::vector<Entry> entries;
  int dim = 0;
  while (std::getline(is, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line_no == 1 && !std::isdigit(static_cast<unsigned char>(line[0])) &&
        line[0] != '-')
      continue;  // header
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(detail::trim(cell));
    if (cells.size() < 3 || cells.size() > 4)
      throw ConfigError(name + ":" + std::to_string(line_no) +
                        ": expected i,j,re[,im]");
    try {
      const int i = std::stoi(cells[0]);
      const int j = std::stoi(cells[1]);
      const double re = std::stod(cells[2]);
      const double im = cells.size() == 4 ? std::stod(cells[3]) : 0.0;
      if (i < 0 || j < 0) throw std::invalid_argument("negative index");
      entries.push_back({i, j, {re, im}});
      dim = std::max(dim, std::max(i, j) + 1);
    } catch (const std::exception&) {
      throw ConfigError(name + ":" + std::to_string(line_no) +
                        ": malformed matrix entry '" + line + "'");
    }
  }
  if (dim == 0) throw ConfigError(name + ": no matrix entries");
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& e : entries) m(e.i, e.j) = e.v;
  return m;
}

inline Eigen::MatrixXcd read_matrix_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open matrix file '" + path + "'");
  return read_matrix_csv(is, path);
}

inline void write_matrix_csv(std::ostream& os, const Eigen::MatrixXcd& m) {
  os << "i,j,re,im\n";
  os.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != std::complex<double>(0.0))
        os << i << ',' << j << ',' << m(i, j).real() << ',' << m(i, j).imag()
           << "\n";
}

// the fully typed configuration; string fields keep their raw spelling so
// error messages can echo them
struct RunConfig {
  // model
  std::string model_kind = "tavis-cummings";
  int n_emitters = 1;
  double omega_c_ev = 2.0;
  double omega_e_ev = 2.0;
  double g_ec_ev = 0.1;
  double gamma_c_ev = 0.1;
  double gamma_e_ev = 1e-4;
  JumpKind cavity_jump = JumpKind::decay;
  int excitation_cap = 1;
  std::string model_path;       // matrix-file Hamiltonian
  std::string model_jumps;      // "path:rate; path:rate"
  std::string model_couplings;  // "path; path"

  // bath
  std::string bath_kind = "lorentzian";
  double bath_g_ev = 0.03;
  double bath_omega0_ev = 0.2;
  double bath_kappa_ev = 0.005;
  double bath_kt_ev = 0.0;
  std::string bath_peaks;  // composite: "g:omega0:kappa, ..."
  std::string bath_path;   // table

  // run
  std::string method = "brls";
  std::string initial = "up";
  double t_max_fs = 200.0;
  int samples = 400;
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;

  // exact discretization block
  bool has_exact = false;
  double window_min_ev = 0.05;
  double window_max_ev = 0.35;
  int modes = 200;
  int phonon_cap = 1;

  // sweep block
  bool has_sweep = false;
  std::string sweep_parameter;
  double sweep_from = 0.0;
  double sweep_to = 0.0;
  int sweep_steps = 0;
  int sweep_workers = 0;

  // memory-measure block
  double nm_t_max_fs = 500.0;
  int nm_samples = 1000;
  int nm_random_pairs = 32;
  unsigned nm_seed = 7;
  double nm_t_min_fs = 0.0;
};

inline RunConfig parse_run_config(const ConfigFile& cfg) {
  RunConfig rc;

  rc.model_kind = cfg.get_string("model", "kind", rc.model_kind);
  if (rc.model_kind == "tavis-cummings") {
    rc.n_emitters = cfg.get_int("model", "n_emitters", rc.n_emitters);
    rc.omega_c_ev = cfg.get_double("model", "omega_c_ev", rc.omega_c_ev);
    rc.omega_e_ev = cfg.get_double("model", "omega_e_ev", rc.omega_e_ev);
    rc.g_ec_ev = cfg.get_double("model", "g_ec_ev", rc.g_ec_ev);
    rc.gamma_c_ev = cfg.get_double("model", "gamma_c_ev", rc.gamma_c_ev);
    rc.gamma_e_ev = cfg.get_double("model", "gamma_e_ev", rc.gamma_e_ev);
    rc.excitation_cap =
        cfg.get_int("model", "excitation_cap", rc.excitation_cap);
    const std::string jump =
        cfg.get_string("model", "cavity_jump", "decay");
    if (jump == "decay")
      rc.cavity_jump = JumpKind::decay;
    else if (jump == "dephasing")
      rc.cavity_jump = JumpKind::dephasing;
    else
      throw ConfigError("'model.cavity_jump': expected decay or dephasing, got '" +
                        jump + "'");
  } else if (rc.model_kind == "matrix-file") {
    rc.model_path = cfg.get_string("model", "path");
    rc.model_jumps = cfg.get_string("model", "jumps", "");
    rc.model_couplings = cfg.get_string("model", "couplings", "");
  } else {
    throw ConfigError(
        "'model.kind': expected tavis-cummings or matrix-file, got '" +
        rc.model_kind + "'");
  }

  rc.bath_kind = cfg.get_string("bath", "kind", rc.bath_kind);
  rc.bath_kt_ev = cfg.get_double("bath", "kt_ev", rc.bath_kt_ev);
  if (rc.bath_kind == "lorentzian") {
    rc.bath_g_ev = cfg.get_double("bath", "g_ev", rc.bath_g_ev);
    rc.bath_omega0_ev = cfg.get_double("bath", "omega0_ev", rc.bath_omega0_ev);
    rc.bath_kappa_ev = cfg.get_double("bath", "kappa_ev", rc.bath_kappa_ev);
  } else if (rc.bath_kind == "composite") {
    rc.bath_peaks = cfg.get_string("bath", "peaks");
  } else if (rc.bath_kind == "table") {
    rc.bath_path = cfg.get_string("bath", "path");
  } else if (rc.bath_kind != "zero") {
    throw ConfigError(
        "'bath.kind': expected lorentzian, composite, table or zero, got '" +
        rc.bath_kind + "'");
  }

  rc.method = cfg.get_string("run", "method", rc.method);
  if (rc.method != "brls" && rc.method != "br" && rc.method != "exact" &&
      rc.method != "nh-only")
    throw ConfigError("'run.method': expected brls, br, exact or nh-only, got '" +
                      rc.method + "'");
  rc.initial = cfg.get_string("run", "initial", rc.initial);
  rc.t_max_fs = cfg.get_double("run", "t_max_fs", rc.t_max_fs);
  rc.samples = cfg.get_int("run", "samples", rc.samples);
  rc.rel_tol = cfg.get_double("run", "rel_tol", rc.rel_tol);
  rc.abs_tol = cfg.get_double("run", "abs_tol", rc.abs_tol);
  if (!(rc.t_max_fs > 0.0))
    throw ConfigError("'run.t_max_fs': must be positive");
  if (rc.samples < 2) throw ConfigError("'run.samples': need at least 2");

  rc.has_exact = cfg.has("exact");
  if (rc.has_exact) {
    rc.window_min_ev = cfg.get_double("exact", "window_min_ev", rc.window_min_ev);
    rc.window_max_ev = cfg.get_double("exact", "window_max_ev", rc.window_max_ev);
    rc.modes = cfg.get_int("exact", "modes", rc.modes);
    rc.phonon_cap = cfg.get_int("exact", "phonon_cap", rc.phonon_cap);
  }
  // the discretization must be spelled out before an exact run allocates
  if (rc.method == "exact" && !rc.has_exact)
    throw ConfigError("'run.method' = exact requires an [exact] section");

  rc.has_sweep = cfg.has("sweep");
  if (rc.has_sweep) {
    rc.sweep_parameter = cfg.get_string("sweep", "parameter");
    rc.sweep_from = cfg.get_double("sweep", "from");
    rc.sweep_to = cfg.get_double("sweep", "to");
    rc.sweep_steps = cfg.get_int("sweep", "steps");
    rc.sweep_workers = cfg.get_int("sweep", "workers", 0);
    if (rc.sweep_steps < 1) throw ConfigError("'sweep.steps': need at least 1");
    if (!std::isfinite(rc.sweep_from) || !std::isfinite(rc.sweep_to))
      throw ConfigError("'sweep': range must be finite");
  }

  rc.nm_t_max_fs = cfg.get_double("nm", "t_max_fs", rc.nm_t_max_fs);
  rc.nm_samples = cfg.get_int("nm", "samples", rc.nm_samples);
  rc.nm_random_pairs = cfg.get_int("nm", "random_pairs", rc.nm_random_pairs);
  rc.nm_seed = static_cast<unsigned>(cfg.get_int("nm", "seed", 7));
  rc.nm_t_min_fs = cfg.get_double("nm", "t_min_fs", rc.nm_t_min_fs);

  return rc;
}

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

inline SpectralDensity build_bath(const RunConfig& rc) {
  if (rc.bath_kind == "zero") return SpectralDensity::zero();
  if (rc.bath_kind == "lorentzian")
    return SpectralDensity::lorentzian(rc.bath_g_ev, rc.bath_omega0_ev,
                                       rc.bath_kappa_ev, rc.bath_kt_ev);
  if (rc.bath_kind == "table")
    return SpectralDensity::from_file(rc.bath_path, rc.bath_kt_ev);
  // composite: "g:omega0:kappa" entries
  std::vector<LorentzianPeak> peaks;
  for (const auto& entry : detail::split(rc.bath_peaks, ',')) {
    const auto parts = detail::split(entry, ':');
    if (parts.size() != 3)
      throw ConfigError("'bath.peaks': expected g:omega0:kappa, got '" + entry +
                        "'");
    try {
      peaks.push_back({std::stod(parts[0]), std::stod(parts[1]),
                       std::stod(parts[2])});
    } catch (const std::exception&) {
      throw ConfigError("'bath.peaks': malformed number in '" + entry + "'");
    }
  }
  if (peaks.empty()) throw ConfigError("'bath.peaks': no peaks given");
  return SpectralDensity::composite(std::move(peaks), rc.bath_kt_ev);
}

inline SystemModel build_model(const RunConfig& rc, const SpectralDensity& sd) {
  if (rc.model_kind == "tavis-cummings")
    return tavis_cummings(rc.n_emitters, rc.omega_c_ev, rc.omega_e_ev,
                          rc.g_ec_ev, rc.gamma_c_ev, rc.gamma_e_ev, sd,
                          rc.cavity_jump, rc.excitation_cap);

  // matrix-file: the register is a single bosonic ladder of the right size
  const Eigen::MatrixXcd h = read_matrix_csv_file(rc.model_path);
  if (h.rows() < 2)
    throw ConfigError("'model.path': need a matrix of dimension >= 2");
  SystemModel m{HilbertSpace({Mode::boson(static_cast<int>(h.rows()) - 1)},
                             static_cast<int>(h.rows()) - 1),
                h,
                {},
                {}};
  for (const auto& entry : detail::split(rc.model_jumps, ';')) {
    const auto cut = entry.rfind(':');
    if (cut == std::string::npos)
      throw ConfigError("'model.jumps': expected path:rate, got '" + entry +
                        "'");
    double rate = 0.0;
    try {
      rate = std::stod(entry.substr(cut + 1));
    } catch (const std::exception&) {
      throw ConfigError("'model.jumps': malformed rate in '" + entry + "'");
    }
    const std::string path = detail::trim(entry.substr(0, cut));
    m.jumps.push_back({read_matrix_csv_file(path), rate, path});
  }
  for (const auto& path : detail::split(rc.model_couplings, ';'))
    m.couplings.push_back({read_matrix_csv_file(path), sd, path});
  m.validate();
  return m;
}

namespace detail {

inline Eigen::Index highest_state(const NHEigensystem& eig) {
  Eigen::Index up = 0;
  for (Eigen::Index a = 1; a < eig.dim(); ++a)
    if (eig.omega(a) > eig.omega(up)) up = a;
  return up;
}

inline Eigen::Index lowest_state(const NHEigensystem& eig) {
  Eigen::Index g = 0;
  for (Eigen::Index a = 1; a < eig.dim(); ++a)
    if (eig.omega(a) < eig.omega(g)) g = a;
  return g;
}

inline Eigen::Index lowest_excited_state(const NHEigensystem& eig) {
  const Eigen::Index ground = lowest_state(eig);
  Eigen::Index lp = highest_state(eig);
  for (Eigen::Index a = 0; a < eig.dim(); ++a)
    if (a != ground && eig.omega(a) < eig.omega(lp)) lp = a;
  return lp;
}

}  // namespace detail

// "up" | "lp" | "ground" | "eigen:K" | "basis:K"
inline Eigen::MatrixXcd initial_state(const std::string& spec,
                                      const NHEigensystem& eig) {
  if (spec == "up") return eigenstate_density(eig, detail::highest_state(eig));
  if (spec == "lp")
    return eigenstate_density(eig, detail::lowest_excited_state(eig));
  if (spec == "ground")
    return eigenstate_density(eig, detail::lowest_state(eig));
  const auto parse_index = [&](const std::string& num) {
    try {
      const long k = std::stol(num);
      if (k < 0 || k >= eig.dim()) throw std::out_of_range(num);
      return static_cast<Eigen::Index>(k);
    } catch (const std::exception&) {
      throw ConfigError("'run.initial': state index out of range in '" + spec +
                        "'");
    }
  };
  if (spec.rfind("eigen:", 0) == 0)
    return eigenstate_density(eig, parse_index(spec.substr(6)));
  if (spec.rfind("basis:", 0) == 0)
    return basis_state_density(eig.dim(), parse_index(spec.substr(6)));
  throw ConfigError(
      "'run.initial': expected up, lp, ground, eigen:K or basis:K, got '" +
      spec + "'");
}

// numeric keys a sweep may scan
inline void apply_sweep_value(RunConfig& rc, const std::string& parameter,
                              double value) {
  static const std::map<std::string, double RunConfig::*> keys = {
      {"g_ec_ev", &RunConfig::g_ec_ev},
      {"gamma_c_ev", &RunConfig::gamma_c_ev},
      {"gamma_e_ev", &RunConfig::gamma_e_ev},
      {"omega_c_ev", &RunConfig::omega_c_ev},
      {"omega_e_ev", &RunConfig::omega_e_ev},
      {"bath_g_ev", &RunConfig::bath_g_ev},
      {"bath_omega0_ev", &RunConfig::bath_omega0_ev},
      {"bath_kappa_ev", &RunConfig::bath_kappa_ev}};
  const auto it = keys.find(parameter);
  if (it == keys.end()) {
    std::string known;
    for (const auto& [k, unused] : keys) known += known.empty() ? k : ", " + k;
    throw ConfigError("'sweep.parameter': unknown key '" + parameter +
                      "' (have: " + known + ")");
  }
  rc.*(it->second) = value;
}

}  // namespace brls
