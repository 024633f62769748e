#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "brls/hilbert.hpp"
#include "brls/units.hpp"

// Trace-distance memory witness: information flowing back into the system
// shows up as intervals where the distinguishability of two evolved states
// grows.  Summing those increases over a sampled pair set, optionally
// discarding intervals that start before a threshold, quantifies how
// non-Markovian the propagated dynamics are.

namespace brls {

// D = half the sum of singular values of the difference
inline double trace_distance(const Eigen::MatrixXcd& rho1,
                             const Eigen::MatrixXcd& rho2) {
  if (rho1.rows() != rho2.rows() || rho1.cols() != rho2.cols())
    throw std::invalid_argument("trace_distance: dimension mismatch");
  const Eigen::MatrixXcd diff = rho1 - rho2;
  // states are Hermitian, so the singular values are |eigenvalues|
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
      0.5 * (diff + diff.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

struct StatePair {
  Eigen::MatrixXcd rho1;
  Eigen::MatrixXcd rho2;
  std::string id;
};

struct PairNM {
  std::string id;
  double nm = 0.0;
  // (a_i, b_i) in internal time, disjoint and increasing
  std::vector<std::pair<double, double>> intervals;
};

struct NMResult {
  double nm = 0.0;
  std::vector<std::pair<double, double>> intervals;  // of the optimal pair
  std::string optimal_pair;
  double t_min = 0.0;
  std::vector<PairNM> pairs;  // every evaluated pair, input order
};

namespace detail {

// maximal runs of strict increase (forward differences above threshold),
// keeping only runs that begin at or after t_min
inline PairNM score_distance_series(const std::vector<double>& grid,
                                    const std::vector<double>& dist,
                                    double t_min, std::string id) {
  PairNM out;
  out.id = std::move(id);
  const double threshold = 1e-12;
  std::size_t k = 0;
  while (k + 1 < dist.size()) {
    if (dist[k + 1] - dist[k] > threshold) {
      const std::size_t start = k;
      while (k + 1 < dist.size() && dist[k + 1] - dist[k] > threshold) ++k;
      if (grid[start] >= t_min) {
        out.intervals.emplace_back(grid[start], grid[k]);
        out.nm += dist[k] - dist[start];
      }
    } else {
      ++k;
    }
  }
  return out;
}

}  // namespace detail

// propagate(rho0) -> one computational-basis density matrix per grid point.
// The trace distance is unitarily invariant but not invariant under the
// skewed eigenbasis map, so the comparison must happen on physical states.
// The closure is called concurrently when workers > 1.
template <class Propagate>
NMResult nm_measure(Propagate&& propagate, const std::vector<StatePair>& pairs,
                    const std::vector<double>& grid, double t_min = 0.0,
                    int workers = 1) {
  if (pairs.empty())
    throw std::invalid_argument("nm_measure: empty pair list");
  if (grid.size() < 2)
    throw std::invalid_argument("nm_measure: need at least 2 grid points");
  for (std::size_t k = 0; k + 1 < grid.size(); ++k)
    if (!(grid[k] < grid[k + 1]))
      throw std::invalid_argument("nm_measure: grid must strictly increase");
  for (const auto& p : pairs)
    if (p.rho1.rows() != p.rho2.rows() || p.rho1.cols() != p.rho2.cols())
      throw std::invalid_argument("nm_measure: pair dimension mismatch");

  NMResult result;
  result.t_min = t_min;
  result.pairs.resize(pairs.size());

  auto score_pair = [&](std::size_t i) {
    const auto s1 = propagate(pairs[i].rho1);
    const auto s2 = propagate(pairs[i].rho2);
    if (s1.size() != grid.size() || s2.size() != grid.size())
      throw std::runtime_error(
          "nm_measure: propagator returned the wrong sample count");
    std::vector<double> dist(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
      dist[k] = trace_distance(s1[k], s2[k]);
    result.pairs[i] =
        detail::score_distance_series(grid, dist, t_min, pairs[i].id);
  };

  if (workers <= 1 || pairs.size() < 2) {
    for (std::size_t i = 0; i < pairs.size(); ++i) score_pair(i);
  } else {
    const int n = std::min<int>(workers, static_cast<int>(pairs.size()));
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    for (int w = 0; w < n; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < pairs.size(); i = next++)
            score_pair(i);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.pairs.size(); ++i)
    if (result.pairs[i].nm > result.pairs[best].nm) best = i;
  result.nm = result.pairs[best].nm;
  result.intervals = result.pairs[best].intervals;
  result.optimal_pair = result.pairs[best].id;
  return result;
}

// The known optimum plus a reproducible Haar sample, all in the
// single-excitation manifold.  The seeded pair superposes the collective
// emitter excitation with the first mode's quantum at a quarter-turn phase.
inline std::vector<StatePair> default_pairs(const HilbertSpace& space,
                                            int random_pairs = 32,
                                            unsigned seed = 7) {
  if (random_pairs < 0)
    throw std::invalid_argument("default_pairs: negative sample size");
  const Eigen::Index d = static_cast<Eigen::Index>(space.dim());

  std::vector<Eigen::Index> manifold;
  for (std::size_t s = 0; s < space.dim(); ++s) {
    int total = 0;
    for (int o : space.occupations(s)) total += o;
    if (total == 1) manifold.push_back(static_cast<Eigen::Index>(s));
  }
  if (manifold.size() < 2)
    throw std::invalid_argument(
        "default_pairs: need at least two single-excitation states");

  std::vector<StatePair> out;

  Eigen::VectorXcd cavity = Eigen::VectorXcd::Zero(d);
  Eigen::VectorXcd bright = Eigen::VectorXcd::Zero(d);
  for (Eigen::Index s : manifold) {
    const auto& occ = space.occupations(static_cast<std::size_t>(s));
    if (occ[0] == 1)
      cavity(s) = 1.0;
    else
      bright(s) = 1.0;
  }
  if (cavity.norm() > 0.0 && bright.norm() > 0.0) {
    bright.normalize();
    const std::complex<double> i_unit(0.0, 1.0);
    Eigen::VectorXcd plus = (bright + i_unit * cavity) / std::sqrt(2.0);
    Eigen::VectorXcd minus = (bright - i_unit * cavity) / std::sqrt(2.0);
    out.push_back(
        {plus * plus.adjoint(), minus * minus.adjoint(), "seeded"});
  }

  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto haar_state = [&] {
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(d);
    for (Eigen::Index s : manifold)
      psi(s) = std::complex<double>(gauss(rng), gauss(rng));
    psi.normalize();
    return psi;
  };
  for (int k = 0; k < random_pairs; ++k) {
    const Eigen::VectorXcd a = haar_state();
    const Eigen::VectorXcd b = haar_state();
    out.push_back({a * a.adjoint(), b * b.adjoint(),
                   "random-" + std::to_string(k)});
  }
  if (out.empty())
    throw std::invalid_argument(
        "default_pairs: no seeded pair possible and no random pairs asked");
  return out;
}

// one row per pair plus a summary row carrying the winner
inline void write_nm_csv(std::ostream& os, const NMResult& result) {
  os.precision(12);
  os << "pair,nm,t_min_fs,intervals_fs\n";
  const auto row = [&](const std::string& id, double nm,
                       const std::vector<std::pair<double, double>>& iv) {
    os << id << ',' << nm << ',' << internal_to_fs(result.t_min) << ',';
    for (std::size_t k = 0; k < iv.size(); ++k) {
      if (k) os << '|';
      os << internal_to_fs(iv[k].first) << ':' << internal_to_fs(iv[k].second);
    }
    os << "\n";
  };
  for (const auto& p : result.pairs) row(p.id, p.nm, p.intervals);
  row("max:" + result.optimal_pair, result.nm, result.intervals);
}

}  // namespace brls
