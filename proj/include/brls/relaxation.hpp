#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "brls/model.hpp"
#include "brls/nh_eigen.hpp"
#include "brls/spectral_density.hpp"

namespace brls {

// Memoized half-range Fourier transforms of one bath correlation function.
// The transform depends on an index triple only through the frequency gap and
// the summed linewidth, so keys are quantized on a 1e-14 eV grid and shared
// by every triple that lands on the same point.  Degenerate manifolds make
// most triples coincide; this turns O(d^3) quadratures into O(distinct gaps).
class HalfFourierCache {
 public:
  static constexpr double key_quantum = 1e-14;

  explicit HalfFourierCache(const SpectralDensity& sd) : sd_(&sd) {}

  std::complex<double> operator()(double delta, double gamma_sum) {
    // eigen-solver roundoff can leave a width at -1e-16; F needs >= 0
    const Key k{quantize(delta), quantize(std::max(gamma_sum, 0.0))};
    auto it = table_.find(k);
    if (it != table_.end()) {
      ++hits_;
      return it->second;
    }
    ++misses_;
    // evaluate at the key coordinates, so the stored value is a function of
    // the key alone and not of whichever caller missed first
    const std::complex<double> v = half_fourier(
        *sd_, key_quantum * static_cast<double>(k.delta), 0.0,
        key_quantum * static_cast<double>(k.width), 0.0);
    table_.emplace(k, v);
    return v;
  }

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  const SpectralDensity& bath() const { return *sd_; }

 private:
  struct Key {
    std::int64_t delta;
    std::int64_t width;
    bool operator<(const Key& o) const {
      return delta != o.delta ? delta < o.delta : width < o.width;
    }
  };

  static std::int64_t quantize(double x) { return std::llround(x / key_quantum); }

  const SpectralDensity* sd_;
  std::map<Key, std::complex<double>> table_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

// One system-bath coupling carried into the eigenbasis: v_ab = (a|V|b),
// v_star_ab = (a*|V|b*).  Produced by eigen_couplings or coupling_matrices.
struct EigenCoupling {
  Eigen::MatrixXcd v;
  Eigen::MatrixXcd v_star;
  SpectralDensity bath;
};

inline std::vector<EigenCoupling> eigen_couplings(const NHEigensystem& eig,
                                                  const SystemModel& m) {
  std::vector<EigenCoupling> out;
  out.reserve(m.couplings.size());
  for (const auto& c : m.couplings) {
    auto [v, vs] = coupling_matrices(eig, c.op);
    out.push_back({std::move(v), std::move(vs), c.bath});
  }
  return out;
}

enum class TensorFlavor { brls, br };

// Rank-4 relaxation tensor R_{abcd}, stored as a d^2 x d^2 matrix acting on
// vectorized eigenbasis density matrices with rho_vec(a*d + b) = rho_ab.
struct RelaxationTensor {
  TensorFlavor flavor = TensorFlavor::brls;
  Eigen::Index dim = 0;
  Eigen::MatrixXcd r;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;

  std::complex<double> element(Eigen::Index a, Eigen::Index b, Eigen::Index c,
                               Eigen::Index d) const {
    return r(a * dim + b, c * dim + d);
  }
};

namespace detail {

// R_{abcd} = sum over couplings of
//   delta_bd sum_q F_{cdq} v_aq v_qc + delta_ac sum_q conj(F_{dcq}) v*_dq v*_qb
//   - (F_{cda} + conj(F_{dcb})) v_ac v*_db
// with F_{jsq} the half-range transform at gap w_q - w_j and width G_q + G_s
// (widths forced to zero for the BR flavor).  F values are looked up through
// a per-bath cache in a serial pre-pass; the column loop that follows only
// reads them, so it can be partitioned over threads freely.
inline RelaxationTensor assemble_tensor(
    const NHEigensystem& eig, const std::vector<EigenCoupling>& couplings,
    bool zero_width, TensorFlavor flavor, int workers) {
  const Eigen::Index d = eig.dim();
  for (const auto& c : couplings)
    if (c.v.rows() != d || c.v.cols() != d || c.v_star.rows() != d ||
        c.v_star.cols() != d)
      throw std::invalid_argument(
          "relaxation tensor: coupling dimension mismatch");

  RelaxationTensor out;
  out.flavor = flavor;
  out.dim = d;
  out.r = Eigen::MatrixXcd::Zero(d * d, d * d);

  std::map<std::uint64_t, HalfFourierCache> caches;
  std::map<std::uint64_t, std::vector<std::complex<double>>> f_tables;
  const auto fidx = [d](Eigen::Index j, Eigen::Index s, Eigen::Index q) {
    return (static_cast<std::size_t>(j) * d + s) * d + q;
  };

  for (const auto& c : couplings) {
    if (c.bath.is_zero() || f_tables.count(c.bath.id())) continue;
    auto& cache = caches.try_emplace(c.bath.id(), c.bath).first->second;
    auto& f = f_tables[c.bath.id()];
    f.resize(static_cast<std::size_t>(d) * d * d);
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index s = 0; s < d; ++s)
        for (Eigen::Index q = 0; q < d; ++q) {
          const double gap = eig.omega(q) - eig.omega(j);
          const double width =
              zero_width ? 0.0 : eig.gamma(q) + eig.gamma(s);
          f[fidx(j, s, q)] = cache(gap, width);
        }
  }

  for (const auto& c : couplings) {
    if (c.bath.is_zero()) continue;
    const auto& f = f_tables.at(c.bath.id());
    const Eigen::MatrixXcd& v = c.v;
    const Eigen::MatrixXcd& vs = c.v_star;

    auto columns = [&](Eigen::Index c0, Eigen::Index c1) {
      Eigen::VectorXcd g1(d), g2(d);
      for (Eigen::Index cc = c0; cc < c1; ++cc)
        for (Eigen::Index dd = 0; dd < d; ++dd) {
          const Eigen::Index col = cc * d + dd;
          for (Eigen::Index q = 0; q < d; ++q) {
            g1(q) = f[fidx(cc, dd, q)] * v(q, cc);
            g2(q) = std::conj(f[fidx(dd, cc, q)]) * vs(dd, q);
          }
          const Eigen::VectorXcd t1 = v * g1;
          const Eigen::RowVectorXcd t2 = g2.transpose() * vs;
          for (Eigen::Index a = 0; a < d; ++a) out.r(a * d + dd, col) += t1(a);
          for (Eigen::Index b = 0; b < d; ++b) out.r(cc * d + b, col) += t2(b);
          // the g vectors double as the q = a, q = b factors of the last term
          for (Eigen::Index a = 0; a < d; ++a) {
            const std::complex<double> xa = g1(a);
            const std::complex<double> va = v(a, cc);
            for (Eigen::Index b = 0; b < d; ++b)
              out.r(a * d + b, col) -= xa * vs(dd, b) + va * g2(b);
          }
        }
    };

    if (workers <= 1 || d < 4) {
      columns(0, d);
    } else {
      const int n = std::min<int>(workers, static_cast<int>(d));
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(n));
      for (int w = 0; w < n; ++w) {
        const Eigen::Index c0 = d * w / n;
        const Eigen::Index c1 = d * (w + 1) / n;
        pool.emplace_back(columns, c0, c1);
      }
      for (auto& t : pool) t.join();
    }
  }

  for (const auto& [id, cache] : caches) {
    out.cache_hits += cache.hits();
    out.cache_misses += cache.misses();
  }
  if (!out.r.allFinite())
    throw std::runtime_error("relaxation tensor: non-finite entries");
  return out;
}

}  // namespace detail

inline RelaxationTensor brls_tensor(const NHEigensystem& eig,
                                    const std::vector<EigenCoupling>& couplings,
                                    int workers = 1) {
  return detail::assemble_tensor(eig, couplings, false, TensorFlavor::brls,
                                 workers);
}

// Same contraction with every linewidth forced to zero inside F: the bath is
// treated independently of the losses even when the eigenbasis carries them.
inline RelaxationTensor br_tensor(const NHEigensystem& eig,
                                  const std::vector<EigenCoupling>& couplings,
                                  int workers = 1) {
  return detail::assemble_tensor(eig, couplings, true, TensorFlavor::br,
                                 workers);
}

// Population transfer rate i -> f when everything but the two populations is
// integrated out: K = 2 Re[F_{iif}] |v_fi|^2 per coupling.  Identical to
// -R_{ffii} of the full tensor.
inline double secular_rate(const NHEigensystem& eig,
                           const std::vector<EigenCoupling>& couplings,
                           Eigen::Index i, Eigen::Index f) {
  const Eigen::Index d = eig.dim();
  if (i == f) throw std::invalid_argument("secular_rate: states must differ");
  if (i < 0 || f < 0 || i >= d || f >= d)
    throw std::out_of_range("secular_rate: state index out of range");
  double k = 0.0;
  for (const auto& c : couplings) {
    if (c.bath.is_zero()) continue;
    const std::complex<double> fiif =
        half_fourier(c.bath, eig.omega(f), eig.omega(i),
                     std::max(eig.gamma(f), 0.0), std::max(eig.gamma(i), 0.0));
    k += 2.0 * fiif.real() * std::real(c.v(f, i) * c.v_star(i, f));
  }
  return k;
}

// Debug dump: one CSV row per entry with magnitude above the threshold.
inline void dump_tensor(const RelaxationTensor& t, std::ostream& os,
                        double threshold = 0.0) {
  os << "a,b,c,d,re,im\n";
  const auto prec = os.precision(17);
  for (Eigen::Index a = 0; a < t.dim; ++a)
    for (Eigen::Index b = 0; b < t.dim; ++b)
      for (Eigen::Index c = 0; c < t.dim; ++c)
        for (Eigen::Index dd = 0; dd < t.dim; ++dd) {
          const std::complex<double> z = t.element(a, b, c, dd);
          if (std::abs(z) > threshold)
            os << a << ',' << b << ',' << c << ',' << dd << ',' << z.real()
               << ',' << z.imag() << '\n';
        }
  os.precision(prec);
}

}  // namespace brls
