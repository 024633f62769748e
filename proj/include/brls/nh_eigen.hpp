#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Biorthogonal eigendecomposition of an effective non-Hermitian Hamiltonian.
// Left vectors come from inverting the right-vector matrix, so (a|b) = δ_ab
// holds by construction up to linear-solver error.

namespace brls {

class NearDefectiveError : public std::runtime_error {
 public:
  NearDefectiveError(const std::string& msg, double condition)
      : std::runtime_error(msg), condition(condition) {}
  double condition;
};

struct NHEigensystem {
  Eigen::VectorXcd eigenvalues;  // sorted by (Re, Im) ascending
  Eigen::MatrixXcd right;        // columns |a), unit norm, phase-fixed
  Eigen::MatrixXcd left;         // rows (a|, the inverse of right
  double max_residual = 0.0;     // max_a ||H|a) - λ_a|a)|| / ||H||
  double biorth_defect = 0.0;    // ||L R - I||_F
  double completeness_defect = 0.0;  // ||R L - I||_F
  double condition = 1.0;            // cond_2 of the right-vector matrix

  Eigen::Index dim() const { return eigenvalues.size(); }
  double omega(Eigen::Index a) const { return eigenvalues(a).real(); }
  // linewidth: λ_a = ω_a - iΓ_a/2
  double gamma(Eigen::Index a) const { return -2.0 * eigenvalues(a).imag(); }
};

namespace detail {

// deterministic phase: largest-magnitude component made real positive
inline void fix_phase(Eigen::Ref<Eigen::VectorXcd> v) {
  Eigen::Index imax = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double m = std::abs(v(i));
    if (m > best + 1e-15) {
      best = m;
      imax = i;
    }
  }
  const std::complex<double> z = v(imax);
  if (std::abs(z) > 0.0) v *= std::abs(z) / z;
}

}  // namespace detail

inline NHEigensystem decompose(const Eigen::MatrixXcd& h_nh) {
  const Eigen::Index d = h_nh.rows();
  if (d == 0 || h_nh.cols() != d)
    throw std::invalid_argument("decompose: matrix must be square");
  const double hnorm = std::max(h_nh.norm(), 1e-300);

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(h_nh);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("decompose: eigensolver failed to converge");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  const auto& raw = es.eigenvalues();
  std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    if (raw(i).real() != raw(j).real()) return raw(i).real() < raw(j).real();
    return raw(i).imag() < raw(j).imag();
  });

  NHEigensystem out;
  out.eigenvalues.resize(d);
  out.right.resize(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    out.eigenvalues(a) = raw(order[static_cast<std::size_t>(a)]);
    out.right.col(a) = es.eigenvectors().col(order[static_cast<std::size_t>(a)]);
    out.right.col(a).normalize();
  }

  // physical losses only: a gain eigenvalue upstream would make the
  // half-Fourier transforms diverge
  for (Eigen::Index a = 0; a < d; ++a)
    if (out.eigenvalues(a).imag() > 1e-12 * std::max(1.0, hnorm))
      throw std::invalid_argument(
          "decompose: eigenvalue with gain (positive imaginary part)");

  // Re-orthonormalize ill-conditioned degenerate clusters.  An exactly
  // degenerate diagonalizable subspace admits any basis, so the QR swap is
  // free there; a defective (Jordan) cluster has no such basis, which shows
  // up either as a rank-deficient block or as a residual blowup afterwards.
  const double gap_tol = 1e-9 * std::max(1.0, hnorm);
  Eigen::Index cluster_start = 0;
  for (Eigen::Index a = 1; a <= d; ++a) {
    const bool boundary =
        a == d || std::abs(out.eigenvalues(a) - out.eigenvalues(a - 1)) >
                      gap_tol;
    if (!boundary) continue;
    const Eigen::Index n = a - cluster_start;
    if (n > 1) {
      auto block = out.right.middleCols(cluster_start, n);
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(block);
      const double smin = svd.singularValues()(n - 1);
      const double smax = svd.singularValues()(0);
      const auto cluster_error = [&](const char* what) {
        std::ostringstream msg;
        msg << "decompose: " << what << " in the degenerate cluster of states "
            << cluster_start << ".." << a - 1 << " near eigenvalue "
            << out.eigenvalues(cluster_start) << " (defective spectrum)";
        throw NearDefectiveError(msg.str(), smax / std::max(smin, 1e-300));
      };
      if (smin < 1e-8 * smax) {
        // the solver collapsed the cluster; rebuild it as the nullspace of
        // H - mean(λ), which exists in full dimension iff the cluster is
        // diagonalizable
        std::complex<double> mean = 0.0;
        for (Eigen::Index c = cluster_start; c < a; ++c)
          mean += out.eigenvalues(c);
        mean /= static_cast<double>(n);
        Eigen::MatrixXcd shifted = h_nh;
        shifted.diagonal().array() -= mean;
        Eigen::JacobiSVD<Eigen::MatrixXcd> null_svd(shifted,
                                                    Eigen::ComputeFullV);
        // singular values are sorted descending; the cluster needs the n
        // smallest to vanish at the cluster's own width
        if (null_svd.singularValues()(d - n) > gap_tol)
          cluster_error("no eigenbasis");
        block = null_svd.matrixV().rightCols(n);
        // the rebuilt vectors belong to the mean, not to the solver's
        // scattered readings of it; keep values and vectors consistent
        for (Eigen::Index c = cluster_start; c < a; ++c)
          out.eigenvalues(c) = mean;
      }
    }
    cluster_start = a;
  }
  for (Eigen::Index a = 0; a < d; ++a) detail::fix_phase(out.right.col(a));

  {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(out.right);
    const double smin = svd.singularValues()(d - 1);
    out.condition = (smin > 0.0)
                        ? svd.singularValues()(0) / smin
                        : std::numeric_limits<double>::infinity();
  }
  if (!(out.condition < 1e12)) {
    // name the tightest eigenvalue pair; that is where the defect lives
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index bi = 0, bj = 1;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = i + 1; j < d; ++j) {
        const double gap = std::abs(out.eigenvalues(i) - out.eigenvalues(j));
        if (gap < best) {
          best = gap;
          bi = i;
          bj = j;
        }
      }
    std::ostringstream msg;
    msg << "decompose: right-vector matrix condition " << out.condition
        << " exceeds 1e12 (near-defective spectrum); closest eigenvalue pair "
        << bi << ", " << bj << " with gap " << best;
    throw NearDefectiveError(msg.str(), out.condition);
  }

  out.left = out.right.partialPivLu().inverse();

  const Eigen::Index dd = d;
  out.biorth_defect =
      (out.left * out.right - Eigen::MatrixXcd::Identity(dd, dd)).norm();
  out.completeness_defect =
      (out.right * out.left - Eigen::MatrixXcd::Identity(dd, dd)).norm();
  for (Eigen::Index a = 0; a < d; ++a) {
    const double r =
        (h_nh * out.right.col(a) - out.eigenvalues(a) * out.right.col(a))
            .norm() /
        hnorm;
    out.max_residual = std::max(out.max_residual, r);
  }
  return out;
}

// rho_ab = (a|rho|b*): both indices contract against left vectors, so the
// map is L rho L^dag and the inverse is R rho_eig R^dag.  The round trip is
// exact up to the biorthogonality defect; Hermiticity survives both ways.
inline Eigen::MatrixXcd to_eigenbasis(const NHEigensystem& eig,
                                      const Eigen::MatrixXcd& rho) {
  if (rho.rows() != eig.dim() || rho.cols() != eig.dim())
    throw std::invalid_argument("to_eigenbasis: dimension mismatch");
  return eig.left * rho * eig.left.adjoint();
}

inline Eigen::MatrixXcd from_eigenbasis(const NHEigensystem& eig,
                                        const Eigen::MatrixXcd& rho_eig) {
  if (rho_eig.rows() != eig.dim() || rho_eig.cols() != eig.dim())
    throw std::invalid_argument("from_eigenbasis: dimension mismatch");
  return eig.right * rho_eig * eig.right.adjoint();
}

// Ṽ_ab = (a|V|b) and Ṽ*_ab = (a*|V|b*), the same element taken between the
// adjoint system's states.  For Hermitian V the second is the conjugate
// transpose of the first, independent of eigenvector normalization.
inline std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> coupling_matrices(
    const NHEigensystem& eig, const Eigen::MatrixXcd& v) {
  if (v.rows() != eig.dim() || v.cols() != eig.dim())
    throw std::invalid_argument("coupling_matrices: dimension mismatch");
  Eigen::MatrixXcd vt = eig.left * v * eig.right;
  Eigen::MatrixXcd vt_star =
      (eig.left * v.adjoint() * eig.right).adjoint();
  return {std::move(vt), std::move(vt_star)};
}

}  // namespace brls
