#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "brls/hilbert.hpp"
#include "brls/spectral_density.hpp"

// System models: a Hermitian Hamiltonian, Markovian jump channels, and
// Hermitian coupling operators each tied to a structured bath.

namespace brls {

struct JumpOperator {
  Eigen::MatrixXcd op;
  double rate = 0.0;  // eV
  std::string label;
};

struct BathCoupling {
  Eigen::MatrixXcd op;  // Hermitian with real entries, dimensionless
  SpectralDensity bath;
  std::string label;
};

enum class JumpKind { decay, dephasing };

struct SystemModel {
  HilbertSpace space;
  Eigen::MatrixXcd h;  // Hermitian, eV
  std::vector<JumpOperator> jumps;
  std::vector<BathCoupling> couplings;

  void validate() const {
    const Eigen::Index d = h.rows();
    if (d == 0 || h.cols() != d)
      throw std::invalid_argument("SystemModel: Hamiltonian must be square");
    if (static_cast<std::size_t>(d) != space.dim())
      throw std::invalid_argument(
          "SystemModel: Hamiltonian does not match the space dimension");
    const double scale = std::max(h.norm(), 1e-300);
    if ((h - h.adjoint()).norm() > 1e-12 * scale)
      throw std::invalid_argument("SystemModel: Hamiltonian not Hermitian");
    for (const auto& j : jumps) {
      if (j.op.rows() != d || j.op.cols() != d)
        throw std::invalid_argument("SystemModel: jump operator shape");
      if (!(j.rate >= 0.0))
        throw std::invalid_argument("SystemModel: negative jump rate");
    }
    for (const auto& c : couplings) {
      if (c.op.rows() != d || c.op.cols() != d)
        throw std::invalid_argument("SystemModel: coupling operator shape");
      const double cs = std::max(c.op.norm(), 1e-300);
      if ((c.op - c.op.adjoint()).norm() > 1e-12 * cs)
        throw std::invalid_argument("SystemModel: coupling not Hermitian");
      if (c.op.imag().norm() > 1e-12 * cs)
        throw std::invalid_argument(
            "SystemModel: coupling must be real in the computational basis");
    }
  }
};

// H - (i/2) sum_A gamma_A A^dag A; the anti-Hermitian part is negative
// semidefinite by construction
inline Eigen::MatrixXcd build_nh(const SystemModel& m) {
  Eigen::MatrixXcd nh = m.h;
  const std::complex<double> half_i(0.0, 0.5);
  for (const auto& j : m.jumps)
    nh -= half_i * j.rate * (j.op.adjoint() * j.op);
  return nh;
}

// Cavity mode plus N identical emitters restricted to the given excitation
// cap (default: ground + single-excitation manifold, dimension N + 2).
// Collective coupling is g_ec, so each emitter couples at g_ec / sqrt(N).
inline SystemModel tavis_cummings(int n_emitters, double omega_c,
                                  double omega_e, double g_ec, double gamma_c,
                                  double gamma_e, const SpectralDensity& bath,
                                  JumpKind cavity_jump = JumpKind::decay,
                                  int excitation_cap = 1) {
  if (n_emitters < 1)
    throw std::invalid_argument("tavis_cummings: need at least one emitter");
  if (gamma_c < 0.0 || gamma_e < 0.0)
    throw std::invalid_argument("tavis_cummings: negative loss rate");
  if (excitation_cap < 1)
    throw std::invalid_argument("tavis_cummings: excitation cap must be >= 1");

  std::vector<Mode> modes;
  modes.push_back(Mode::boson(excitation_cap));  // cavity first
  for (int j = 0; j < n_emitters; ++j) modes.push_back(Mode::qubit());
  HilbertSpace space(std::move(modes), excitation_cap);

  const auto a = space.annihilation(0);
  Eigen::MatrixXcd h = omega_c * space.number(0);
  const double g = g_ec / std::sqrt(static_cast<double>(n_emitters));
  for (int j = 1; j <= n_emitters; ++j) {
    const auto sm = space.annihilation(static_cast<std::size_t>(j));
    h += omega_e * space.number(static_cast<std::size_t>(j));
    h += g * (a.adjoint() * sm + sm.adjoint() * a);
  }

  SystemModel m{std::move(space), std::move(h), {}, {}};
  if (cavity_jump == JumpKind::decay) {
    m.jumps.push_back({a, gamma_c, "cavity decay"});
  } else {
    m.jumps.push_back({a.adjoint() * a, gamma_c, "cavity dephasing"});
  }
  for (int j = 1; j <= n_emitters; ++j) {
    const auto sm = m.space.annihilation(static_cast<std::size_t>(j));
    m.jumps.push_back(
        {sm, gamma_e, "emitter " + std::to_string(j) + " decay"});
    m.couplings.push_back({sm.adjoint() * sm, bath,
                           "emitter " + std::to_string(j) + " bath"});
  }
  m.validate();
  return m;
}

// Lindblad rates comparable to system gaps push the weak-loss description
// out of its regime (artificial pumping); flag it, do not forbid it.
inline std::vector<std::string> validity_warnings(const SystemModel& m) {
  std::vector<std::string> out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m.h);
  const auto& ev = es.eigenvalues();
  double min_gap = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    for (Eigen::Index j = i + 1; j < ev.size(); ++j) {
      const double gap = std::abs(ev[j] - ev[i]);
      if (gap > 1e-12 && (min_gap == 0.0 || gap < min_gap)) min_gap = gap;
    }
  if (min_gap == 0.0) return out;
  for (const auto& j : m.jumps)
    if (j.rate > min_gap)
      out.push_back("jump rate " + std::to_string(j.rate) + " eV (" +
                    j.label + ") exceeds the smallest transition energy " +
                    std::to_string(min_gap) + " eV");
  return out;
}

}  // namespace brls
