#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

#include "brls/model.hpp"
#include "brls/nh_eigen.hpp"
#include "brls/relaxation.hpp"

namespace brls {

// Master-equation generator in the eigenbasis of the effective non-Hermitian
// Hamiltonian, acting on vectorized density matrices rho_vec(a*d+b) = rho_ab
// with rho_ab = (a|rho|b*):
//
//   d rho_ab / dt = -i (w_a - w_b - i(G_a+G_b)/2) rho_ab
//                   + sum_cd [ sum_A gamma_A A~_ac conj(A~_bd) - R_abcd ] rho_cd
//
// The three parts are kept separately so diagnostics and tests can switch
// them on and off; matrix() folds them into one dense superoperator.
struct Generator {
  Eigen::Index dim = 0;
  // the basis the superoperator lives in; carried along so propagation and
  // observable extraction need no second handle
  NHEigensystem eig;
  // coherent evolution plus anticommutator decay, -i(lam_a - conj(lam_b))
  Eigen::VectorXcd nh_diagonal;
  // quantum-jump refill, gamma A~ rho A~^dag; restores the trace flow the
  // non-Hermitian part only drains
  Eigen::MatrixXcd refill;
  // relaxation tensor contribution, entering with a minus sign
  Eigen::MatrixXcd redfield;

  Eigen::MatrixXcd matrix() const {
    Eigen::MatrixXcd l = refill - redfield;
    l.diagonal() += nh_diagonal;
    return l;
  }

  // d rho / dt for a vectorized eigenbasis density matrix
  Eigen::VectorXcd apply(const Eigen::VectorXcd& rho_vec) const {
    return nh_diagonal.cwiseProduct(rho_vec) + refill * rho_vec -
           redfield * rho_vec;
  }
};

inline Generator assemble_generator(const NHEigensystem& eig,
                                    const RelaxationTensor& tensor,
                                    const std::vector<JumpOperator>& jumps) {
  const Eigen::Index d = eig.dim();
  if (tensor.dim != 0 && tensor.dim != d)
    throw std::invalid_argument("assemble_generator: tensor dimension mismatch");
  for (const auto& j : jumps)
    if (j.op.rows() != d || j.op.cols() != d)
      throw std::invalid_argument("assemble_generator: jump dimension mismatch");

  Generator gen;
  gen.dim = d;
  gen.eig = eig;

  gen.nh_diagonal.resize(d * d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b)
      gen.nh_diagonal(a * d + b) =
          std::complex<double>(0.0, -1.0) *
          (eig.eigenvalues(a) - std::conj(eig.eigenvalues(b)));

  gen.refill = Eigen::MatrixXcd::Zero(d * d, d * d);
  for (const auto& j : jumps) {
    if (j.rate == 0.0) continue;
    const Eigen::MatrixXcd at = eig.left * j.op * eig.right;
    // rho -> gamma A~ rho A~^dag, i.e. gamma * kron(A~, conj(A~)) on
    // row-major vectorization
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = 0; b < d; ++b)
        for (Eigen::Index c = 0; c < d; ++c)
          for (Eigen::Index e = 0; e < d; ++e)
            gen.refill(a * d + b, c * d + e) +=
                j.rate * at(a, c) * std::conj(at(b, e));
  }

  gen.redfield = tensor.dim == 0 ? Eigen::MatrixXcd::Zero(d * d, d * d)
                                 : tensor.r;
  return gen;
}

}  // namespace brls
