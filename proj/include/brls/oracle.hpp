#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "brls/dynamics.hpp"
#include "brls/model.hpp"
#include "brls/nh_eigen.hpp"
#include "brls/ode.hpp"
#include "brls/quadrature.hpp"
#include "brls/spectral_density.hpp"

// Numerically exact benchmark: the structured bath becomes explicit bosonic
// modes and the joint system-plus-bath Lindblad equation is propagated.
// Zero temperature only; every coupling operator attaches to the same mode
// set.

namespace brls {

struct DiscretizedBath {
  std::vector<double> omega;  // mode energies, strictly increasing
  std::vector<double> g;      // couplings sqrt(J * dw)
  double window_min = 0.0;
  double window_max = 0.0;
  double captured_fraction = 1.0;  // window weight over total weight
  std::string warning;             // nonempty when weight was missed

  int modes() const { return static_cast<int>(omega.size()); }
  double coupling_weight() const {
    double s = 0.0;
    for (double gk : g) s += gk * gk;
    return s;
  }
  // the discrete bath repeats itself after this horizon
  double recurrence_time() const {
    return omega.size() > 1
               ? 2.0 * SpectralDensity::pi / (omega[1] - omega[0])
               : std::numeric_limits<double>::infinity();
  }
};

// Midpoint discretization: w_k centered on M uniform cells, g_k^2 = J(w_k) dw.
inline DiscretizedBath discretize(const SpectralDensity& sd, double w_min,
                                  double w_max, int m) {
  if (m < 2) throw std::invalid_argument("discretize: need at least 2 modes");
  if (!(w_max > w_min) || w_min < 0.0)
    throw std::invalid_argument("discretize: bad window");
  DiscretizedBath out;
  out.window_min = w_min;
  out.window_max = w_max;
  const double dw = (w_max - w_min) / m;
  out.omega.resize(static_cast<std::size_t>(m));
  out.g.resize(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    const double w = w_min + (k + 0.5) * dw;
    out.omega[static_cast<std::size_t>(k)] = w;
    out.g[static_cast<std::size_t>(k)] = std::sqrt(sd.value(w) * dw);
  }

  QuadratureOptions opts;
  opts.seeds = sd.seeds();
  const double total =
      integrate([&](double w) { return sd.value(w); }, 0.0, sd.support_max(),
                opts)
          .value;
  if (total > 0.0) {
    const double inside =
        integrate([&](double w) { return sd.value(w); }, w_min,
                  std::min(w_max, sd.support_max()), opts)
            .value;
    out.captured_fraction = inside / total;
    if (out.captured_fraction < 0.99) {
      std::ostringstream msg;
      msg << "discretization window [" << w_min << ", " << w_max
          << "] captures only " << out.captured_fraction
          << " of the spectral weight";
      out.warning = msg.str();
    }
  }
  return out;
}

inline void write_bath_csv(std::ostream& os, const DiscretizedBath& bath) {
  os << "omega_ev,g_ev\n";
  os.precision(17);
  for (std::size_t k = 0; k < bath.omega.size(); ++k)
    os << bath.omega[k] << ',' << bath.g[k] << "\n";
}

namespace detail {

// Phonon occupation states with a joint total cap: each state is the sorted
// multiset of excited mode indices (repeats = multiple phonons in a mode).
struct BathBasis {
  std::vector<std::vector<int>> states;
  std::map<std::vector<int>, std::size_t> index;

  BathBasis(int modes, int cap) {
    std::vector<int> cur;
    build(modes, cap, 0, cur);
    for (std::size_t i = 0; i < states.size(); ++i) index[states[i]] = i;
  }
  std::size_t dim() const { return states.size(); }

 private:
  void build(int modes, int cap, int from, std::vector<int>& cur) {
    states.push_back(cur);
    if (static_cast<int>(cur.size()) == cap) return;
    for (int k = from; k < modes; ++k) {
      cur.push_back(k);
      build(modes, cap, k, cur);
      cur.pop_back();
    }
  }
};

inline int count_mode(const std::vector<int>& state, int k) {
  return static_cast<int>(std::count(state.begin(), state.end(), k));
}

// X = sum_k g_k (b_k + b_k^dag) on the capped basis
inline Eigen::SparseMatrix<std::complex<double>> bath_coupling_matrix(
    const BathBasis& basis, const DiscretizedBath& bath) {
  std::vector<Eigen::Triplet<std::complex<double>>> trip;
  for (std::size_t s = 0; s < basis.dim(); ++s) {
    const auto& occ = basis.states[s];
    for (int k = 0; k < bath.modes(); ++k) {
      const int n = count_mode(occ, k);
      // raising: amplitude sqrt(n+1), allowed while under the joint cap
      std::vector<int> up = occ;
      up.insert(std::lower_bound(up.begin(), up.end(), k), k);
      auto it = basis.index.find(up);
      if (it != basis.index.end()) {
        const double amp =
            bath.g[static_cast<std::size_t>(k)] * std::sqrt(n + 1.0);
        trip.emplace_back(static_cast<int>(it->second), static_cast<int>(s),
                          amp);
        trip.emplace_back(static_cast<int>(s), static_cast<int>(it->second),
                          amp);
      }
    }
  }
  Eigen::SparseMatrix<std::complex<double>> x(
      static_cast<int>(basis.dim()), static_cast<int>(basis.dim()));
  x.setFromTriplets(trip.begin(), trip.end());
  return x;
}

inline Eigen::VectorXd bath_energies(const BathBasis& basis,
                                     const DiscretizedBath& bath) {
  Eigen::VectorXd e(static_cast<Eigen::Index>(basis.dim()));
  for (std::size_t s = 0; s < basis.dim(); ++s) {
    double acc = 0.0;
    for (int k : basis.states[s]) acc += bath.omega[static_cast<std::size_t>(k)];
    e(static_cast<Eigen::Index>(s)) = acc;
  }
  return e;
}

// number of capped occupation states, sum of multiset coefficients
inline double bath_state_count(int modes, int phonon_cap) {
  double total = 0.0;
  for (int j = 0; j <= phonon_cap; ++j) {
    double c = 1.0;
    for (int i = 1; i <= j; ++i) c *= double(modes + i - 1) / i;
    total += c;
  }
  return total;
}

}  // namespace detail

inline Eigen::Index joint_dimension(const SystemModel& m,
                                    const DiscretizedBath& bath,
                                    int phonon_cap) {
  return static_cast<Eigen::Index>(
      double(m.space.dim()) *
      detail::bath_state_count(bath.modes(), phonon_cap));
}

struct ExactOptions {
  int phonon_cap = 1;
  // densely stored joint states above this dimension are refused
  Eigen::Index max_dense_dim = 1200;
  double rel_tol = 1e-6;
  double abs_tol = 1e-12;
  bool force_dense = false;  // disable the pure-decay structural path
};

namespace detail {

struct JointSetup {
  Eigen::Index d = 0;        // system dimension
  Eigen::Index nb = 0;       // bath basis dimension
  Eigen::Index ground = 0;   // system ground index
  double omega_ref = 0.0;    // internal frame shift per system excitation
  Eigen::VectorXd n_sys;     // excitation per system basis state
  Eigen::VectorXd e_bath;    // bath energy per bath state
  Eigen::SparseMatrix<std::complex<double>> x;  // shared mode displacement
};

inline JointSetup joint_setup(const SystemModel& m, const BathBasis& basis,
                              const DiscretizedBath& bath) {
  JointSetup js;
  js.d = static_cast<Eigen::Index>(m.space.dim());
  js.nb = static_cast<Eigen::Index>(basis.dim());
  const auto g0 = m.space.index_of(
      std::vector<int>(m.space.n_modes(), 0));
  if (!g0)
    throw std::invalid_argument("exact_evolve: model has no vacuum state");
  js.ground = static_cast<Eigen::Index>(*g0);
  js.n_sys.resize(js.d);
  for (Eigen::Index s = 0; s < js.d; ++s) {
    const auto& occ = m.space.occupations(static_cast<std::size_t>(s));
    int n = 0;
    for (int o : occ) n += o;
    js.n_sys(s) = n;
  }
  // shift each excitation by the mean excited-state energy so the carrier
  // frequency drops out of the integration.  The shift is a legal rotating
  // frame only when every Hamiltonian and coupling entry conserves the
  // excitation count and every jump changes it by a fixed amount; anything
  // else keeps the lab frame.
  bool shift_ok = true;
  const double tol = 1e-14;
  for (Eigen::Index s = 0; s < js.d && shift_ok; ++s)
    for (Eigen::Index t = 0; t < js.d && shift_ok; ++t) {
      if (js.n_sys(s) == js.n_sys(t)) continue;
      if (std::abs(m.h(s, t)) > tol) shift_ok = false;
      for (const auto& c : m.couplings)
        if (std::abs(c.op(s, t)) > tol) shift_ok = false;
    }
  for (const auto& j : m.jumps) {
    if (j.rate == 0.0) continue;
    bool found = false;
    double step = 0.0;
    for (Eigen::Index s = 0; s < js.d && shift_ok; ++s)
      for (Eigen::Index t = 0; t < js.d && shift_ok; ++t) {
        if (std::abs(j.op(s, t)) <= tol) continue;
        const double d = js.n_sys(t) - js.n_sys(s);
        if (!found) {
          step = d;
          found = true;
        } else if (d != step) {
          shift_ok = false;
        }
      }
  }
  if (shift_ok) {
    double acc = 0.0;
    int cnt = 0;
    for (Eigen::Index s = 0; s < js.d; ++s)
      if (js.n_sys(s) > 0.0) {
        acc += m.h(s, s).real() / js.n_sys(s);
        ++cnt;
      }
    js.omega_ref = cnt > 0 ? acc / cnt : 0.0;
  }
  js.e_bath = bath_energies(basis, bath);
  js.x = bath_coupling_matrix(basis, bath);
  return js;
}

// decay-cascade structure: every jump funnels straight to the system ground
// state and no coupling or Hamiltonian term leads back out of it
inline bool pure_decay_structure(const SystemModel& m, Eigen::Index ground) {
  const Eigen::Index d = m.h.rows();
  const double tol = 1e-14;
  for (Eigen::Index s = 0; s < d; ++s) {
    if (s == ground) continue;
    if (std::abs(m.h(ground, s)) > tol || std::abs(m.h(s, ground)) > tol)
      return false;
  }
  for (const auto& j : m.jumps) {
    if (j.rate == 0.0) continue;
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c) {
        const bool allowed = r == ground && c != ground;
        if (!allowed && std::abs(j.op(r, c)) > tol) return false;
      }
  }
  for (const auto& c : m.couplings)
    for (Eigen::Index s = 0; s < d; ++s)
      if (std::abs(c.op(ground, s)) > tol || std::abs(c.op(s, ground)) > tol)
        return false;
  return true;
}

}  // namespace detail

// Propagates the joint Lindblad equation and returns the reduced system
// trajectory in the NH eigenbasis, exactly like evolve().  rho0 is the
// system state; the bath starts in its vacuum.
//
// Two routes share the integrator.  When every jump is a decay straight to
// the system ground state (and rho0 carries no ground coherence), the
// excited block closes under the joint non-Hermitian Hamiltonian and is
// carried as a handful of pure vectors plus ground-sector occupations: the
// same equation, restructured, with the trace split across integrated
// components so conservation stays a real check.  Everything else takes the
// dense joint density matrix, guarded by max_dense_dim.
inline Trajectory exact_evolve(const SystemModel& m,
                               const DiscretizedBath& bath,
                               const Eigen::MatrixXcd& rho0,
                               const std::vector<double>& grid,
                               const ExactOptions& opts = {}) {
  using cd = std::complex<double>;
  const Eigen::Index d = static_cast<Eigen::Index>(m.space.dim());
  if (rho0.rows() != d || rho0.cols() != d)
    throw std::invalid_argument("exact_evolve: initial state dimension");
  if ((rho0 - rho0.adjoint()).norm() > 1e-10 * std::max(rho0.norm(), 1e-300))
    throw std::invalid_argument("exact_evolve: initial state not Hermitian");
  if (std::abs(rho0.trace() - cd(1.0)) > 1e-10)
    throw std::invalid_argument("exact_evolve: initial state trace not one");
  if (opts.phonon_cap < 1)
    throw std::invalid_argument("exact_evolve: phonon cap must be >= 1");

  const auto g0 = m.space.index_of(std::vector<int>(m.space.n_modes(), 0));
  if (!g0)
    throw std::invalid_argument("exact_evolve: model has no vacuum state");
  const Eigen::Index ground = static_cast<Eigen::Index>(*g0);

  bool ground_coherence_free = true;
  for (Eigen::Index s = 0; s < d; ++s)
    if (s != ground && std::abs(rho0(ground, s)) > 1e-12)
      ground_coherence_free = false;
  const bool fast = !opts.force_dense && ground_coherence_free &&
                    detail::pure_decay_structure(m, ground);

  // size the joint space before enumerating it
  const double nb_est = detail::bath_state_count(bath.modes(), opts.phonon_cap);
  if (fast) {
    // one wavefunction per nonzero excited-state weight, worst case d - 1
    const double worst = double(d) * double(d - 1) * nb_est + nb_est;
    if (worst > 8e6) {
      std::ostringstream msg;
      msg << "exact_evolve: pure-state sector needs up to " << worst
          << " amplitudes (" << d - 1 << " excited states x " << nb_est
          << " bath states per wavefunction); reduce the mode count or the "
             "phonon cap";
      throw std::invalid_argument(msg.str());
    }
  } else {
    const double jd_est = double(d) * nb_est;
    if (jd_est > double(opts.max_dense_dim)) {
      std::ostringstream msg;
      msg << "exact_evolve: joint dimension " << jd_est << " (" << d
          << " system x " << nb_est << " bath states, density matrix of "
          << jd_est * jd_est * 16.0 / 1048576.0
          << " MiB) exceeds the dense-path limit " << opts.max_dense_dim
          << "; reduce the mode count or raise max_dense_dim";
      throw std::invalid_argument(msg.str());
    }
  }

  const detail::BathBasis basis(bath.modes(), opts.phonon_cap);
  const detail::JointSetup js = detail::joint_setup(m, basis, bath);
  const Eigen::Index nb = js.nb;

  NHEigensystem eig = decompose(build_nh(m));

  Trajectory traj;
  traj.eig = eig;
  traj.time = grid;
  traj.states.resize(grid.size());
  traj.populations.resize(static_cast<Eigen::Index>(grid.size()), d);
  traj.trace.resize(static_cast<Eigen::Index>(grid.size()));
  traj.min_eigenvalue.resize(static_cast<Eigen::Index>(grid.size()));

  OdeOptions ode;
  ode.rel_tol = opts.rel_tol;
  ode.abs_tol = opts.abs_tol;

  const auto record = [&](std::size_t k, const Eigen::MatrixXcd& rho_s,
                          double joint_min_eig) {
    const Eigen::Index kk = static_cast<Eigen::Index>(k);
    traj.states[k] = to_eigenbasis(eig, rho_s);
    for (Eigen::Index a = 0; a < d; ++a)
      traj.populations(kk, a) = traj.states[k](a, a).real();
    traj.trace(kk) = rho_s.trace().real();
    traj.min_eigenvalue(kk) = joint_min_eig;
  };

  if (fast) {
    // excited system states, in model order
    std::vector<Eigen::Index> exc;
    for (Eigen::Index s = 0; s < d; ++s)
      if (s != ground) exc.push_back(s);
    const Eigen::Index ne = static_cast<Eigen::Index>(exc.size());
    const Eigen::Index edim = ne * nb;

    // rank-revealing split of the excited block into pure vectors
    Eigen::MatrixXcd rho_exc(ne, ne);
    for (Eigen::Index i = 0; i < ne; ++i)
      for (Eigen::Index j = 0; j < ne; ++j)
        rho_exc(i, j) = rho0(exc[static_cast<std::size_t>(i)],
                             exc[static_cast<std::size_t>(j)]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        0.5 * (rho_exc + rho_exc.adjoint()));
    std::vector<Eigen::VectorXcd> seeds;
    for (Eigen::Index i = 0; i < ne; ++i)
      if (es.eigenvalues()(i) > 1e-14)
        seeds.push_back(std::sqrt(es.eigenvalues()(i)) *
                        es.eigenvectors().col(i));
    const Eigen::Index rank = static_cast<Eigen::Index>(seeds.size());

    // H_E - (i/2) sum gamma A^dag A on the excited-times-bath block.  The
    // closed excited sector tolerates any uniform shift (a global phase on
    // each wavefunction), so the carrier is always removed here even when
    // the dense route must keep the lab frame.
    double w_fast = 0.0;
    {
      double acc = 0.0;
      int cnt = 0;
      for (Eigen::Index s = 0; s < d; ++s)
        if (js.n_sys(s) > 0.0) {
          acc += m.h(s, s).real() / js.n_sys(s);
          ++cnt;
        }
      if (cnt > 0) w_fast = acc / cnt;
    }
    Eigen::MatrixXcd h_nh_sys = build_nh(m);
    std::vector<Eigen::Triplet<cd>> trip;
    for (Eigen::Index i = 0; i < ne; ++i)
      for (Eigen::Index j = 0; j < ne; ++j) {
        cd hij = h_nh_sys(exc[static_cast<std::size_t>(i)],
                          exc[static_cast<std::size_t>(j)]);
        if (i == j) hij -= w_fast;
        if (hij != cd(0.0))
          for (Eigen::Index b = 0; b < nb; ++b)
            trip.emplace_back(static_cast<int>(i * nb + b),
                              static_cast<int>(j * nb + b), hij);
      }
    for (Eigen::Index i = 0; i < ne; ++i)
      for (Eigen::Index b = 0; b < nb; ++b)
        trip.emplace_back(static_cast<int>(i * nb + b),
                          static_cast<int>(i * nb + b), cd(js.e_bath(b)));
    for (const auto& c : m.couplings) {
      for (Eigen::Index i = 0; i < ne; ++i)
        for (Eigen::Index j = 0; j < ne; ++j) {
          const cd vij = c.op(exc[static_cast<std::size_t>(i)],
                              exc[static_cast<std::size_t>(j)]);
          if (vij == cd(0.0)) continue;
          for (int o = 0; o < js.x.outerSize(); ++o)
            for (Eigen::SparseMatrix<cd>::InnerIterator it(js.x, o); it;
                 ++it)
              trip.emplace_back(
                  static_cast<int>(i * nb + it.row()),
                  static_cast<int>(j * nb + it.col()), vij * it.value());
        }
    }
    Eigen::SparseMatrix<cd> h_e(static_cast<int>(edim),
                                static_cast<int>(edim));
    h_e.setFromTriplets(trip.begin(), trip.end());

    // per-jump ground-row weights over the excited states
    struct Funnel {
      double rate;
      Eigen::VectorXcd row;
    };
    std::vector<Funnel> funnels;
    for (const auto& j : m.jumps) {
      if (j.rate == 0.0) continue;
      Eigen::VectorXcd row(ne);
      for (Eigen::Index i = 0; i < ne; ++i)
        row(i) = j.op(ground, exc[static_cast<std::size_t>(i)]);
      funnels.push_back({j.rate, std::move(row)});
    }

    // state layout: rank excited vectors, then bath-diagonal ground weights
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(rank * edim + nb);
    for (Eigen::Index r = 0; r < rank; ++r)
      for (Eigen::Index i = 0; i < ne; ++i)
        for (Eigen::Index b = 0; b < nb; ++b)
          y(r * edim + i * nb + b) = seeds[static_cast<std::size_t>(r)](i) *
                                     (b == 0 ? 1.0 : 0.0);
    y(rank * edim + 0) = rho0(ground, ground).real();

    const cd mi(0.0, -1.0);
    auto deriv = [&](double, const Eigen::VectorXcd& v) {
      Eigen::VectorXcd dv(v.size());
      for (Eigen::Index r = 0; r < rank; ++r)
        dv.segment(r * edim, edim) = mi * (h_e * v.segment(r * edim, edim));
      Eigen::VectorXd feed = Eigen::VectorXd::Zero(nb);
      for (Eigen::Index r = 0; r < rank; ++r)
        for (const auto& f : funnels)
          for (Eigen::Index b = 0; b < nb; ++b) {
            cd amp = 0.0;
            for (Eigen::Index i = 0; i < ne; ++i)
              amp += f.row(i) * v(r * edim + i * nb + b);
            feed(b) += f.rate * std::norm(amp);
          }
      for (Eigen::Index b = 0; b < nb; ++b) dv(rank * edim + b) = feed(b);
      return dv;
    };

    integrate_adaptive(
        deriv, y, grid,
        [&](std::size_t k, double, const Eigen::VectorXcd& v) {
          Eigen::MatrixXcd rho_s = Eigen::MatrixXcd::Zero(d, d);
          for (Eigen::Index r = 0; r < rank; ++r)
            for (Eigen::Index i = 0; i < ne; ++i)
              for (Eigen::Index j = 0; j < ne; ++j) {
                cd acc = 0.0;
                for (Eigen::Index b = 0; b < nb; ++b)
                  acc += v(r * edim + i * nb + b) *
                         std::conj(v(r * edim + j * nb + b));
                rho_s(exc[static_cast<std::size_t>(i)],
                      exc[static_cast<std::size_t>(j)]) += acc;
              }
          double gpop = 0.0;
          double nmin = 0.0;
          for (Eigen::Index b = 0; b < nb; ++b) {
            gpop += v(rank * edim + b).real();
            nmin = std::min(nmin, v(rank * edim + b).real());
          }
          rho_s(ground, ground) = gpop;
          // excited block is a Gram matrix, ground block has the tracked
          // occupations as eigenvalue lower bounds
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ps(
              0.5 * (rho_s + rho_s.adjoint()), Eigen::EigenvaluesOnly);
          record(k, rho_s, std::min(nmin, ps.eigenvalues().minCoeff()));
        },
        ode);
    return traj;
  }

  // dense joint propagation, system-major index s*nb + b
  const Eigen::Index jd = d * nb;
  std::vector<Eigen::Triplet<cd>> trip;
  for (Eigen::Index s = 0; s < d; ++s)
    for (Eigen::Index t = 0; t < d; ++t) {
      cd h = m.h(s, t);
      if (s == t) h -= js.omega_ref * js.n_sys(s);
      if (h != cd(0.0))
        for (Eigen::Index b = 0; b < nb; ++b)
          trip.emplace_back(static_cast<int>(s * nb + b),
                            static_cast<int>(t * nb + b), h);
    }
  for (Eigen::Index s = 0; s < d; ++s)
    for (Eigen::Index b = 0; b < nb; ++b)
      trip.emplace_back(static_cast<int>(s * nb + b),
                        static_cast<int>(s * nb + b), cd(js.e_bath(b)));
  for (const auto& c : m.couplings)
    for (Eigen::Index s = 0; s < d; ++s)
      for (Eigen::Index t = 0; t < d; ++t) {
        const cd vst = c.op(s, t);
        if (vst == cd(0.0)) continue;
        for (int o = 0; o < js.x.outerSize(); ++o)
          for (Eigen::SparseMatrix<cd>::InnerIterator it(js.x, o); it; ++it)
            trip.emplace_back(static_cast<int>(s * nb + it.row()),
                              static_cast<int>(t * nb + it.col()),
                              vst * it.value());
      }
  Eigen::SparseMatrix<cd> h_joint(static_cast<int>(jd),
                                  static_cast<int>(jd));
  h_joint.setFromTriplets(trip.begin(), trip.end());

  struct JointJump {
    double rate;
    Eigen::SparseMatrix<cd> a;
    Eigen::SparseMatrix<cd> aa;  // A^dag A
  };
  std::vector<JointJump> jumps;
  for (const auto& j : m.jumps) {
    if (j.rate == 0.0) continue;
    std::vector<Eigen::Triplet<cd>> jt;
    for (Eigen::Index s = 0; s < d; ++s)
      for (Eigen::Index t = 0; t < d; ++t)
        if (j.op(s, t) != cd(0.0))
          for (Eigen::Index b = 0; b < nb; ++b)
            jt.emplace_back(static_cast<int>(s * nb + b),
                            static_cast<int>(t * nb + b), j.op(s, t));
    Eigen::SparseMatrix<cd> a(static_cast<int>(jd), static_cast<int>(jd));
    a.setFromTriplets(jt.begin(), jt.end());
    Eigen::SparseMatrix<cd> aa = a.adjoint() * a;
    jumps.push_back({j.rate, std::move(a), std::move(aa)});
  }

  Eigen::VectorXcd y(jd * jd);
  {
    Eigen::Map<Eigen::MatrixXcd> rho(y.data(), jd, jd);
    rho.setZero();
    for (Eigen::Index s = 0; s < d; ++s)
      for (Eigen::Index t = 0; t < d; ++t)
        rho(s * nb + 0, t * nb + 0) = rho0(s, t);
  }

  const cd mi(0.0, -1.0);
  auto deriv = [&](double, const Eigen::VectorXcd& v) {
    Eigen::Map<const Eigen::MatrixXcd> rho(v.data(), jd, jd);
    Eigen::VectorXcd out(v.size());
    Eigen::Map<Eigen::MatrixXcd> drho(out.data(), jd, jd);
    drho = mi * (h_joint * rho - rho * h_joint);
    for (const auto& j : jumps) {
      drho += j.rate * (j.a * rho * j.a.adjoint());
      const Eigen::MatrixXcd anti = j.aa * rho;
      drho -= (0.5 * j.rate) * (anti + anti.adjoint());
    }
    return out;
  };

  integrate_adaptive(
      deriv, y, grid,
      [&](std::size_t k, double t, const Eigen::VectorXcd& v) {
        Eigen::Map<const Eigen::MatrixXcd> rho(v.data(), jd, jd);
        Eigen::MatrixXcd rho_s = Eigen::MatrixXcd::Zero(d, d);
        for (Eigen::Index s = 0; s < d; ++s)
          for (Eigen::Index t2 = 0; t2 < d; ++t2)
            for (Eigen::Index b = 0; b < nb; ++b)
              rho_s(s, t2) += rho(s * nb + b, t2 * nb + b);
        // undo the frame shift; excitation-diagonal phases only
        for (Eigen::Index s = 0; s < d; ++s)
          for (Eigen::Index t2 = 0; t2 < d; ++t2)
            rho_s(s, t2) *= std::exp(
                cd(0.0, -js.omega_ref * (js.n_sys(s) - js.n_sys(t2)) * t));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
            Eigen::MatrixXcd(0.5 * (rho + rho.adjoint())),
            Eigen::EigenvaluesOnly);
        record(k, rho_s, es.eigenvalues().minCoeff());
      },
      ode);
  return traj;
}

}  // namespace brls
