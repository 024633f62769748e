#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// Adaptive Gauss-Kronrod 15(7) integration on a finite interval, with
// optional caller-supplied subdivision seeds for integrands that have known
// sharp features (resonance peaks, interpolation kinks, kernel poles).
// Refinement always bisects the subinterval with the largest error estimate.

namespace brls {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  std::size_t max_intervals = 4000;
  std::vector<double> seeds;  // initial subdivision points, unordered is fine
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& msg, double achieved, double requested)
      : std::runtime_error(msg), achieved(achieved), requested(requested) {}
  double achieved;
  double requested;
};

template <class T>
struct QuadratureResult {
  T value{};
  double error = 0.0;          // accumulated error estimate
  std::size_t evaluations = 0;
  std::size_t intervals = 0;
};

namespace detail {

// Kronrod-15 abscissae (positive half) and weights; Gauss-7 weights embedded.
inline constexpr double gk_x[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class T>
double qnorm(const T& v) {
  return std::abs(v);
}

template <class F>
struct GkEstimate {
  using value_type = decltype(std::declval<F&>()(0.0));
  value_type integral{};
  double error = 0.0;
};

template <class F>
GkEstimate<F> gk15(F& f, double a, double b) {
  using T = typename GkEstimate<F>::value_type;
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  T fv[15];
  T kron{};
  T gauss{};
  double resabs = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double dx = h * gk_x[i];
    if (i == 7) {
      fv[7] = f(c);
      kron += gk_wk[7] * fv[7];
      gauss += gk_wg[3] * fv[7];
      resabs += gk_wk[7] * qnorm<T>(fv[7]);
    } else {
      fv[i] = f(c - dx);
      fv[14 - i] = f(c + dx);
      kron += gk_wk[i] * (fv[i] + fv[14 - i]);
      if (i % 2 == 1)
        gauss += gk_wg[i / 2] * (fv[i] + fv[14 - i]);
      resabs += gk_wk[i] * (qnorm<T>(fv[i]) + qnorm<T>(fv[14 - i]));
    }
  }
  GkEstimate<F> out;
  out.integral = h * kron;
  // QUADPACK dqk15 error estimate: the raw Kronrod-Gauss gap alone is
  // easily fooled on wide panels, so it is rescaled by the integrand's
  // deviation from its panel mean (resasc)
  const T mean = 0.5 * kron;
  double resasc = gk_wk[7] * qnorm<T>(fv[7] - mean);
  for (int i = 0; i < 7; ++i)
    resasc += gk_wk[i] * (qnorm<T>(fv[i] - mean) + qnorm<T>(fv[14 - i] - mean));
  resasc *= std::abs(h);
  resabs *= std::abs(h);
  const double diff = qnorm<T>(h * (kron - gauss));
  out.error = diff;
  if (resasc != 0.0 && diff != 0.0)
    out.error =
        resasc * std::min(1.0, std::pow(200.0 * diff / resasc, 1.5));
  const double eps50 = 50.0 * std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / eps50)
    out.error = std::max(eps50 * resabs, out.error);
  return out;
}

}  // namespace detail

// Integrate f over [a, b].  f may return double or std::complex<double>.
template <class F>
auto integrate(F&& f, double a, double b, const QuadratureOptions& opts = {})
    -> QuadratureResult<decltype(f(0.0))> {
  using T = decltype(f(0.0));
  QuadratureResult<T> res;
  if (!(a < b)) return res;

  std::vector<double> edges;
  edges.push_back(a);
  for (double s : opts.seeds)
    if (s > a && s < b) edges.push_back(s);
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  // A panel spanning several decades hides structure between its nodes and
  // no error estimate can recover it, so split such panels geometrically.
  {
    std::vector<double> refined;
    refined.reserve(edges.size());
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      const double lo = edges[i], hi = edges[i + 1];
      refined.push_back(lo);
      const double mag_lo = std::min(std::abs(lo), std::abs(hi));
      const double mag_hi = std::max(std::abs(lo), std::abs(hi));
      if (lo * hi > 0.0 && mag_hi > 4.0 * mag_lo) {
        const bool neg = lo < 0.0;
        std::vector<double> cuts;
        for (double m = 4.0 * mag_lo; m < mag_hi && cuts.size() < 60;
             m *= 4.0)
          cuts.push_back(neg ? -m : m);
        if (neg) std::reverse(cuts.begin(), cuts.end());
        for (double cpt : cuts) refined.push_back(cpt);
      }
    }
    refined.push_back(edges.back());
    edges = std::move(refined);
  }

  struct Piece {
    double a, b, err;
    T val;
  };
  std::vector<Piece> pieces;
  pieces.reserve(edges.size() + 64);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    auto est = detail::gk15(f, edges[i], edges[i + 1]);
    pieces.push_back({edges[i], edges[i + 1], est.error, est.integral});
    res.evaluations += 15;
  }

  const std::size_t max_intervals =
      std::max(opts.max_intervals, 2 * edges.size());
  while (true) {
    T total{};
    double err = 0.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      total += pieces[i].val;
      err += pieces[i].err;
      if (pieces[i].err > pieces[worst].err) worst = i;
    }
    const double tol =
        std::max(opts.abs_tol, opts.rel_tol * detail::qnorm<T>(total));
    if (err <= tol || pieces[worst].err == 0.0) {
      res.value = total;
      res.error = err;
      res.intervals = pieces.size();
      return res;
    }
    if (pieces.size() >= max_intervals) {
      std::ostringstream msg;
      msg << "quadrature failed to converge: error " << err << " > tolerance "
          << tol << " with " << pieces.size()
          << " subintervals; worst subinterval [" << pieces[worst].a << ", "
          << pieces[worst].b << "] contributes " << pieces[worst].err;
      throw QuadratureError(msg.str(), err, tol);
    }
    Piece p = pieces[worst];
    const double mid = 0.5 * (p.a + p.b);
    auto left = detail::gk15(f, p.a, mid);
    auto right = detail::gk15(f, mid, p.b);
    res.evaluations += 30;
    pieces[worst] = {p.a, mid, left.error, left.integral};
    pieces.push_back({mid, p.b, right.error, right.integral});
  }
}

// Cauchy principal value of  ∫_a^b f(x) / (x - pole) dx  with a < pole < b.
// The symmetric window around the pole is folded to
//   ∫_0^d [f(pole+u) - f(pole-u)] / u du,
// which is regular (limit 2 f'(pole)); the remainder is integrated directly.
template <class F>
auto integrate_pv(F&& f, double a, double b, double pole,
                  const QuadratureOptions& opts = {})
    -> QuadratureResult<decltype(f(0.0))> {
  using T = decltype(f(0.0));
  if (!(a < pole && pole < b))
    throw std::invalid_argument("integrate_pv: pole must lie inside (a, b)");
  const double d = std::min(pole - a, b - pole);

  auto folded = [&](double u) -> T {
    return (f(pole + u) - f(pole - u)) / u;
  };
  QuadratureOptions fold_opts = opts;
  fold_opts.seeds.clear();
  for (double s : opts.seeds) {
    double u = std::abs(s - pole);
    if (u > 0.0 && u < d) fold_opts.seeds.push_back(u);
  }
  auto res = integrate(folded, 0.0, d, fold_opts);

  auto rest = [&](double x) -> T { return f(x) / (x - pole); };
  if (a < pole - d) {
    auto r = integrate(rest, a, pole - d, opts);
    res.value += r.value;
    res.error += r.error;
    res.evaluations += r.evaluations;
    res.intervals += r.intervals;
  }
  if (pole + d < b) {
    auto r = integrate(rest, pole + d, b, opts);
    res.value += r.value;
    res.error += r.error;
    res.evaluations += r.evaluations;
    res.intervals += r.intervals;
  }
  return res;
}

}  // namespace brls
