#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quadrature.hpp"

namespace brls {

// One antisymmetrized-Lorentzian peak,
//   J(w) = (2 g^2 / pi) * kappa * w * w0 / ((w^2 - w0^2)^2 + kappa^2 w^2)
// for w > 0 and zero otherwise.  Integrates to g^2 in the narrow limit
// kappa << w0.
struct LorentzianPeak {
  double g;       // coupling strength, eV
  double omega0;  // peak position, eV
  double kappa;   // width, eV
};

// Bath spectral density J(w) plus its thermal occupation.  Supported kinds:
// a sum of Lorentzian peaks (one peak being the common case), a tabulated
// density with linear interpolation and zero extrapolation, and the zero
// density.  Instances carry a stable id used by the half-Fourier cache.
class SpectralDensity {
 public:
  static SpectralDensity lorentzian(double g, double omega0, double kappa,
                                    double kT = 0.0) {
    return composite({LorentzianPeak{g, omega0, kappa}}, kT);
  }

  static SpectralDensity composite(std::vector<LorentzianPeak> peaks,
                                   double kT = 0.0) {
    SpectralDensity sd;
    sd.kind_ = Kind::lorentzian_sum;
    sd.kt_ = check_kt(kT);
    for (const auto& p : peaks) {
      if (!(p.g >= 0.0))
        throw std::invalid_argument("spectral density: coupling g must be >= 0");
      if (!(p.omega0 > 0.0) || !(p.kappa > 0.0))
        throw std::invalid_argument(
            "spectral density: peak position and width must be > 0");
    }
    sd.peaks_ = std::move(peaks);
    sd.init_lorentzian_meta();
    return sd;
  }

  static SpectralDensity tabulated(std::vector<double> omega,
                                   std::vector<double> j, double kT = 0.0) {
    SpectralDensity sd;
    sd.kind_ = Kind::table;
    sd.kt_ = check_kt(kT);
    if (omega.size() != j.size() || omega.size() < 2)
      throw std::invalid_argument(
          "tabulated spectral density needs >= 2 (omega, J) samples");
    for (std::size_t i = 0; i < omega.size(); ++i) {
      if (i > 0 && !(omega[i] > omega[i - 1]))
        throw std::invalid_argument(
            "tabulated spectral density: omega samples must be strictly "
            "increasing");
      if (!(omega[i] >= 0.0))
        throw std::invalid_argument(
            "tabulated spectral density: omega samples must be >= 0");
      if (!(j[i] >= 0.0))
        throw std::invalid_argument(
            "tabulated spectral density: J values must be >= 0");
    }
    sd.tab_w_ = std::move(omega);
    sd.tab_j_ = std::move(j);
    sd.peak_ = 0.0;
    for (double v : sd.tab_j_) sd.peak_ = std::max(sd.peak_, v);
    sd.support_ = sd.tab_w_.back();
    sd.seeds_ = sd.tab_w_;
    return sd;
  }

  static SpectralDensity zero() {
    SpectralDensity sd;
    sd.kind_ = Kind::none;
    sd.support_ = 1.0;
    return sd;
  }

  // Text format: '#' starts a comment, blank lines ignored, data lines hold
  // "omega J" in eV.  Samples must be strictly increasing in omega.
  static SpectralDensity from_file(const std::string& path, double kT = 0.0) {
    std::ifstream in(path);
    if (!in)
      throw std::invalid_argument("cannot open spectral density file: " + path);
    std::vector<double> w, j;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      double a, b;
      if (!(ls >> a)) continue;  // blank or comment-only
      if (!(ls >> b)) {
        std::ostringstream msg;
        msg << path << ":" << lineno << ": expected \"omega J\" pair";
        throw std::invalid_argument(msg.str());
      }
      double extra;
      if (ls >> extra) {
        std::ostringstream msg;
        msg << path << ":" << lineno << ": trailing data after \"omega J\" pair";
        throw std::invalid_argument(msg.str());
      }
      w.push_back(a);
      j.push_back(b);
    }
    try {
      return tabulated(std::move(w), std::move(j), kT);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path + ": " + e.what());
    }
  }

  double value(double w) const {
    switch (kind_) {
      case Kind::none:
        return 0.0;
      case Kind::lorentzian_sum: {
        if (w <= 0.0) return 0.0;
        double s = 0.0;
        for (const auto& p : peaks_) {
          const double d = w * w - p.omega0 * p.omega0;
          s += (2.0 * p.g * p.g / pi) * p.kappa * w * p.omega0 /
               (d * d + p.kappa * p.kappa * w * w);
        }
        return s;
      }
      case Kind::table: {
        if (w <= tab_w_.front() || w >= tab_w_.back()) {
          // zero extrapolation; endpoints included in-range below
          if (w == tab_w_.front()) return tab_j_.front();
          if (w == tab_w_.back()) return tab_j_.back();
          return 0.0;
        }
        auto it = std::upper_bound(tab_w_.begin(), tab_w_.end(), w);
        std::size_t hi = static_cast<std::size_t>(it - tab_w_.begin());
        std::size_t lo = hi - 1;
        const double t = (w - tab_w_[lo]) / (tab_w_[hi] - tab_w_[lo]);
        return tab_j_[lo] + t * (tab_j_[hi] - tab_j_[lo]);
      }
    }
    return 0.0;
  }
  double operator()(double w) const { return value(w); }

  bool is_zero() const { return kind_ == Kind::none; }
  double kT() const { return kt_; }

  // Bose occupation n(w); zero at kT = 0 and for w <= 0.
  double bose(double w) const {
    if (kt_ <= 0.0 || w <= 0.0) return 0.0;
    return 1.0 / std::expm1(w / kt_);
  }

  // Upper integration cutoff: beyond this J has fallen below 1e-14 of its
  // peak value (tabulated densities simply end).
  double support_max() const { return support_; }
  double peak_value() const { return peak_; }

  // Cut X <= support_max with integrated tail bound ∫_X^∞ J dw < eps.  Used
  // by oscillatory integrals where resolving the deep 1/w^3 tail would cost
  // far more than it contributes.
  double tail_cut(double eps) const {
    if (kind_ != Kind::lorentzian_sum || !(eps > 0.0)) return support_;
    double a = 0.0;  // J tail ~ a / w^3  =>  ∫_X^∞ J ~ a / (2 X^2)
    double lo = 0.0;
    for (const auto& p : peaks_) {
      a += 2.0 * p.g * p.g * p.kappa * p.omega0 / pi;
      lo = std::max(lo, p.omega0 + 10.0 * p.kappa);
    }
    if (a <= 0.0) return std::min(lo > 0.0 ? lo : 1.0, support_);
    const double x = std::sqrt(a / (2.0 * eps));
    return std::min(std::max(x, lo), support_);
  }

  // Subdivision seeds for quadrature: peak neighborhoods or table nodes.
  const std::vector<double>& seeds() const { return seeds_; }

  std::uint64_t id() const { return id_; }

  static constexpr double pi = 3.14159265358979323846;

 private:
  enum class Kind { none, lorentzian_sum, table };

  SpectralDensity() : id_(next_id()) {}

  static double check_kt(double kT) {
    if (!(kT >= 0.0))
      throw std::invalid_argument("spectral density: kT must be >= 0");
    return kT;
  }

  void init_lorentzian_meta() {
    peak_ = 0.0;
    support_ = 0.0;
    seeds_.clear();
    for (const auto& p : peaks_) {
      peak_ = std::max(peak_, value(p.omega0));
      for (double s : {p.omega0 - 3.0 * p.kappa, p.omega0 - p.kappa, p.omega0,
                       p.omega0 + p.kappa, p.omega0 + 3.0 * p.kappa})
        if (s > 0.0) seeds_.push_back(s);
    }
    for (const auto& p : peaks_) {
      // tail of one peak: J ~ (2 g^2 kappa w0 / pi) / w^3
      const double num = 2.0 * p.g * p.g * p.kappa * p.omega0 / pi;
      if (num > 0.0 && peak_ > 0.0)
        support_ = std::max(support_, std::cbrt(num / (1e-14 * peak_)));
      support_ = std::max(support_, p.omega0 + 10.0 * p.kappa);
    }
    if (support_ <= 0.0) support_ = 1.0;
  }

  static std::uint64_t next_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
  }

  Kind kind_ = Kind::none;
  std::vector<LorentzianPeak> peaks_;
  std::vector<double> tab_w_, tab_j_;
  double kt_ = 0.0;
  double peak_ = 0.0;
  double support_ = 1.0;
  std::vector<double> seeds_;
  std::uint64_t id_;
};

// Bath correlation function
//   C(t) = ∫_0^∞ dw J(w) [ (n(w)+1) e^{-i w t} + n(w) e^{+i w t} ].
inline std::complex<double> correlation(const SpectralDensity& sd, double t) {
  if (sd.is_zero()) return {0.0, 0.0};
  QuadratureOptions opts;
  const double up = sd.tail_cut(0.1 * opts.abs_tol);
  opts.seeds = sd.seeds();
  // enough initial resolution for the oscillation e^{iwt}
  const double cycles = std::abs(t) * up / (2.0 * SpectralDensity::pi);
  if (cycles > 1.0) {
    const std::size_t n = static_cast<std::size_t>(std::min(cycles, 4000.0));
    for (std::size_t k = 1; k <= n; ++k)
      opts.seeds.push_back(up * double(k) / double(n + 1));
    opts.max_intervals = std::max<std::size_t>(4000, 16 * n);
  }
  auto f = [&](double w) -> std::complex<double> {
    const double n = sd.bose(w);
    const std::complex<double> ph(std::cos(w * t), -std::sin(w * t));
    return sd.value(w) * ((n + 1.0) * ph + n * std::conj(ph));
  };
  return integrate(f, 0.0, up, opts).value;
}

// Loss-broadened half-Fourier transform of the bath correlation function,
//   F = ∫_0^∞ dt C(t) e^{-i (w_q - w_j) t} e^{-(G_q + G_s) t / 2},
// evaluated in the frequency domain.  With D = w_q - w_j and G = G_q + G_s:
//   F = ∫_0^∞ dw J(w) [ (n+1) k(D + w) + n k(D - w) ],
//   k(x) = (G/2 - i x) / (x^2 + G^2/4).
// At G = 0 the kernel degenerates to pi*delta(x) - i PV(1/x); the delta
// residue and the principal value are then taken explicitly.
inline std::complex<double> half_fourier(const SpectralDensity& sd,
                                         double omega_q, double omega_j,
                                         double gamma_q, double gamma_s) {
  if (!(gamma_q >= 0.0) || !(gamma_s >= 0.0))
    throw std::invalid_argument("half_fourier: widths must be >= 0");
  if (sd.is_zero()) return {0.0, 0.0};

  const double delta = omega_q - omega_j;
  const double g2 = 0.5 * (gamma_q + gamma_s);
  const double up = sd.support_max();
  const bool thermal = sd.kT() > 0.0;

  // Relaxation tensors difference these values at the 1e-10 scale; keep the
  // quadrature an order below that.
  auto tight = []() {
    QuadratureOptions o;
    o.rel_tol = 1e-11;
    o.abs_tol = 1e-13;
    o.max_intervals = 8000;
    return o;
  };

  // A combined width this small (sub-microHz lifetimes) cannot be resolved
  // against any bath structure; the limit branch below is then exact to
  // rounding and the damped kernel would only burn the interval budget.
  if (g2 > 1e-13) {
    QuadratureOptions opts = tight();
    opts.seeds = sd.seeds();
    auto add_pole_seeds = [&](double center) {
      if (center <= 0.0 || center >= up) return;
      for (double m : {-5.0, -1.0, 0.0, 1.0, 5.0}) {
        double s = center + m * g2;
        if (s > 0.0 && s < up) opts.seeds.push_back(s);
      }
    };
    add_pole_seeds(-delta);
    if (thermal) add_pole_seeds(delta);
    auto kern = [&](double x) -> std::complex<double> {
      return std::complex<double>(g2, -x) / (x * x + g2 * g2);
    };
    auto f = [&](double w) -> std::complex<double> {
      const double n = sd.bose(w);
      std::complex<double> v = (n + 1.0) * kern(delta + w);
      if (thermal) v += n * kern(delta - w);
      return sd.value(w) * v;
    };
    return integrate(f, 0.0, up, opts).value;
  }

  // zero total width: Sokhotski-Plemelj branch
  std::complex<double> out(0.0, 0.0);

  // A thermal gap indistinguishable from zero must be taken as the symmetric
  // limit: the 1/w endpoint divergences of the two kernels cancel exactly
  // when combined, and the residue tends to lim_{w->0+} J(w) n(w).
  if (thermal && std::abs(delta) <= 1e-12 * std::max(1.0, up)) {
    const double eps = std::min(1e-6, sd.kT());
    auto jn = [&](double w) { return sd.value(w) * sd.bose(w); };
    const double res = 2.0 * jn(eps) - jn(2.0 * eps);
    QuadratureOptions opts = tight();
    opts.seeds = sd.seeds();
    auto reg = [&](double w) -> double { return sd.value(w) / w; };
    return {SpectralDensity::pi * res,
            -integrate(reg, 0.0, up, opts).value};
  }

  // (n+1) e^{-iwt} part: pole of 1/(delta + w) at w = -delta
  {
    const double pole = -delta;
    auto f = [&](double w) -> double {
      return sd.value(w) * (sd.bose(w) + 1.0);
    };
    if (pole > 0.0 && pole < up) {
      out += SpectralDensity::pi * f(pole);  // residue, real part
      QuadratureOptions opts = tight();
      opts.seeds = sd.seeds();
      auto pv = integrate_pv(f, 0.0, up, pole, opts);
      out += std::complex<double>(0.0, -1.0) * pv.value;
    } else {
      auto reg = [&](double w) -> double { return f(w) / (delta + w); };
      QuadratureOptions opts = tight();
      opts.seeds = sd.seeds();
      out += std::complex<double>(0.0, -1.0) * integrate(reg, 0.0, up, opts).value;
    }
  }

  // n e^{+iwt} part: pole of 1/(delta - w) at w = +delta
  if (thermal) {
    auto f = [&](double w) -> double { return sd.value(w) * sd.bose(w); };
    if (delta > 0.0 && delta < up) {
      out += SpectralDensity::pi * f(delta);
      QuadratureOptions opts = tight();
      opts.seeds = sd.seeds();
      // -i PV ∫ f/(delta - w) = +i PV ∫ f/(w - delta)
      auto pv = integrate_pv(f, 0.0, up, delta, opts);
      out += std::complex<double>(0.0, 1.0) * pv.value;
    } else {
      auto reg = [&](double w) -> double { return f(w) / (delta - w); };
      QuadratureOptions opts = tight();
      opts.seeds = sd.seeds();
      out += std::complex<double>(0.0, -1.0) * integrate(reg, 0.0, up, opts).value;
    }
  }
  return out;
}

// Lorentzian transition spectrum between two NH eigenstates:
//   T_{i->f}(w) = (1/pi) * h / ((w_i - w_f - w)^2 + h^2),  h = (G_i + G_f)/2.
// A zero combined width means the transition line is a delta function; the
// delta branch of effective_sd must be used instead of a pointwise value.
struct TransitionSpectrum {
  double omega_i = 0.0;
  double omega_f = 0.0;
  double gamma_i = 0.0;
  double gamma_f = 0.0;

  double center() const { return omega_i - omega_f; }
  double half_width() const { return 0.5 * (gamma_i + gamma_f); }
  bool is_delta() const { return gamma_i + gamma_f == 0.0; }

  void validate() const {
    if (!(gamma_i >= 0.0) || !(gamma_f >= 0.0))
      throw std::invalid_argument("transition spectrum: widths must be >= 0");
  }
};

inline std::optional<double> transition_spectrum_value(
    const TransitionSpectrum& ts, double w) {
  ts.validate();
  if (ts.is_delta()) return std::nullopt;
  const double h = ts.half_width();
  const double d = ts.center() - w;
  return h / (SpectralDensity::pi * (d * d + h * h));
}

// Effective (loss-broadened) spectral density sampled by a transition:
//   Jeff = ∫_0^∞ dw J(w) [ (n(w)+1) T(w) + n(w) T(-w) ].
// For a delta transition line this reduces to (n+1) J at the transition
// energy (plus the thermal mirror term, which the Heaviside kills for one
// of the two signs).
inline double effective_sd(const SpectralDensity& sd,
                           const TransitionSpectrum& ts) {
  ts.validate();
  if (sd.is_zero()) return 0.0;
  const double c = ts.center();
  if (ts.is_delta()) {
    double v = (sd.bose(c) + 1.0) * sd.value(c);
    if (sd.kT() > 0.0) v += sd.bose(-c) * sd.value(-c);
    return v;
  }
  const double up = sd.support_max();
  const double h = ts.half_width();
  QuadratureOptions opts;
  opts.seeds = sd.seeds();
  auto add_seeds = [&](double center) {
    for (double m : {-10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0}) {
      double s = center + m * h;
      if (s > 0.0 && s < up) opts.seeds.push_back(s);
    }
  };
  add_seeds(c);
  const bool thermal = sd.kT() > 0.0;
  if (thermal) add_seeds(-c);
  auto tval = [&](double w) -> double {
    const double d = c - w;
    return h / (SpectralDensity::pi * (d * d + h * h));
  };
  auto f = [&](double w) -> double {
    const double n = sd.bose(w);
    double v = (n + 1.0) * tval(w);
    if (thermal) v += n * tval(-w);
    return sd.value(w) * v;
  };
  return integrate(f, 0.0, up, opts).value;
}

}  // namespace brls
