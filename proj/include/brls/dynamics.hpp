#pragma once

#include <Eigen/Dense>
#include <complex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "brls/generator.hpp"
#include "brls/nh_eigen.hpp"
#include "brls/ode.hpp"
#include "brls/units.hpp"

// Time propagation of eigenbasis density matrices and observable extraction.
// Times are internal (1/eV) throughout; fs enters only at the edges.

namespace brls {

struct Trajectory {
  NHEigensystem eig;
  std::vector<double> time;              // internal units, strictly increasing
  std::vector<Eigen::MatrixXcd> states;  // rho_ab = (a|rho|b*) per sample
  Eigen::MatrixXd populations;           // (sample, a) -> Re(a|rho|a*)
  Eigen::VectorXd trace;                 // computational-basis trace
  Eigen::VectorXd min_eigenvalue;        // positivity monitor, not enforced

  std::size_t size() const { return time.size(); }

  std::vector<double> time_fs() const {
    std::vector<double> out(time.size());
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] = internal_to_fs(time[k]);
    return out;
  }

  Eigen::MatrixXcd computational_state(std::size_t k) const {
    return from_eigenbasis(eig, states.at(k));
  }
};

struct EvolveOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
};

inline std::vector<double> uniform_grid(double t0, double t1, int n) {
  if (n < 2 || !(t1 > t0))
    throw std::invalid_argument("uniform_grid: need n >= 2 and t1 > t0");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    g[static_cast<std::size_t>(k)] = t0 + (t1 - t0) * k / (n - 1);
  return g;
}

// default output grid: 400 points across 200 fs
inline std::vector<double> uniform_grid_fs(double t_end_fs = 200.0,
                                           int n = 400) {
  return uniform_grid(0.0, fs_to_internal(t_end_fs), n);
}

// rho for a single eigenstate: right-vector outer product, which is already
// Hermitian with unit trace for unit-norm vectors
inline Eigen::MatrixXcd eigenstate_density(const NHEigensystem& eig,
                                           Eigen::Index a) {
  if (a < 0 || a >= eig.dim())
    throw std::out_of_range("eigenstate_density: state index");
  Eigen::MatrixXcd rho = eig.right.col(a) * eig.right.col(a).adjoint();
  rho = 0.5 * (rho + rho.adjoint());
  return rho / rho.trace().real();
}

inline Eigen::MatrixXcd basis_state_density(Eigen::Index dim, Eigen::Index k) {
  if (k < 0 || k >= dim)
    throw std::out_of_range("basis_state_density: state index");
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
  rho(k, k) = 1.0;
  return rho;
}

inline Trajectory evolve(const Generator& gen, const Eigen::MatrixXcd& rho0,
                         const std::vector<double>& grid,
                         const EvolveOptions& opts = {}) {
  const Eigen::Index d = gen.dim;
  if (rho0.rows() != d || rho0.cols() != d)
    throw std::invalid_argument("evolve: initial state dimension mismatch");
  const double scale = std::max(rho0.norm(), 1e-300);
  if ((rho0 - rho0.adjoint()).norm() > 1e-10 * scale)
    throw std::invalid_argument("evolve: initial state not Hermitian");
  if (std::abs(rho0.trace() - std::complex<double>(1.0)) > 1e-10)
    throw std::invalid_argument("evolve: initial state trace is not one");
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        0.5 * (rho0 + rho0.adjoint()), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
      throw std::invalid_argument("evolve: initial state not positive");
  }

  Trajectory traj;
  traj.eig = gen.eig;
  traj.time = grid;
  traj.states.resize(grid.size());

  Eigen::VectorXcd v(d * d);
  {
    const Eigen::MatrixXcd r0 = to_eigenbasis(gen.eig, rho0);
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = 0; b < d; ++b) v(a * d + b) = r0(a, b);
  }

  OdeOptions ode;
  ode.rel_tol = opts.rel_tol;
  ode.abs_tol = opts.abs_tol;
  integrate_adaptive(
      [&](double, const Eigen::VectorXcd& y) { return gen.apply(y); }, v,
      grid,
      [&](std::size_t k, double, const Eigen::VectorXcd& y) {
        Eigen::MatrixXcd rho(d, d);
        for (Eigen::Index a = 0; a < d; ++a)
          for (Eigen::Index b = 0; b < d; ++b) rho(a, b) = y(a * d + b);
        traj.states[k] = std::move(rho);
      },
      ode);

  const std::size_t n = traj.states.size();
  traj.populations.resize(static_cast<Eigen::Index>(n), d);
  traj.trace.resize(static_cast<Eigen::Index>(n));
  traj.min_eigenvalue.resize(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    for (Eigen::Index a = 0; a < d; ++a)
      traj.populations(static_cast<Eigen::Index>(k), a) =
          traj.states[k](a, a).real();
    const Eigen::MatrixXcd rho = from_eigenbasis(gen.eig, traj.states[k]);
    traj.trace(static_cast<Eigen::Index>(k)) = rho.trace().real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    traj.min_eigenvalue(static_cast<Eigen::Index>(k)) =
        es.eigenvalues().minCoeff();
  }
  return traj;
}

// <O>(t) = Tr[O rho(t)] with rho reconstructed in the computational basis
inline Eigen::MatrixXcd observables(const Trajectory& traj,
                                    const std::vector<Eigen::MatrixXcd>& ops) {
  const Eigen::Index d = traj.eig.dim();
  for (const auto& op : ops)
    if (op.rows() != d || op.cols() != d)
      throw std::invalid_argument("observables: operator dimension mismatch");
  Eigen::MatrixXcd out(static_cast<Eigen::Index>(traj.size()),
                       static_cast<Eigen::Index>(ops.size()));
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Eigen::MatrixXcd rho = from_eigenbasis(traj.eig, traj.states[k]);
    for (std::size_t j = 0; j < ops.size(); ++j)
      out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
          (ops[j] * rho).trace();
  }
  return out;
}

// CSV layout: t_fs, trace, min_eig, P_0..P_{d-1}, then one Re/Im column pair
// per requested observable
inline void write_trajectory_csv(
    std::ostream& os, const Trajectory& traj,
    const std::vector<std::string>& obs_names = {},
    const Eigen::MatrixXcd& obs_series = Eigen::MatrixXcd()) {
  if (static_cast<Eigen::Index>(obs_names.size()) != obs_series.cols() ||
      (obs_series.cols() > 0 &&
       obs_series.rows() != static_cast<Eigen::Index>(traj.size())))
    throw std::invalid_argument("write_trajectory_csv: observable shape");
  const Eigen::Index d = traj.eig.dim();
  os << "t_fs,trace,min_eig";
  for (Eigen::Index a = 0; a < d; ++a) os << ",P_" << a;
  for (const auto& name : obs_names)
    os << ",re_" << name << ",im_" << name;
  os << "\n";
  os.precision(12);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Eigen::Index kk = static_cast<Eigen::Index>(k);
    os << internal_to_fs(traj.time[k]) << ',' << traj.trace(kk) << ','
       << traj.min_eigenvalue(kk);
    for (Eigen::Index a = 0; a < d; ++a) os << ',' << traj.populations(kk, a);
    for (Eigen::Index j = 0; j < obs_series.cols(); ++j)
      os << ',' << obs_series(kk, j).real() << ',' << obs_series(kk, j).imag();
    os << "\n";
  }
}

}  // namespace brls
