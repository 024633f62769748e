#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "brls/units.hpp"

// Adaptive Dormand-Prince 5(4) integration of complex linear or nonlinear
// first-order systems.  Steps are clamped to land exactly on requested
// sample times, so no dense-output interpolation error enters the samples.

namespace brls {

struct OdeOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  std::size_t max_steps = 5000000;
};

// f(t, y) -> dy/dt; emit(index, t, y) fires once per entry of `samples`,
// which must be strictly increasing.  Integration starts at samples.front().
template <class Deriv, class OnSample>
void integrate_adaptive(Deriv&& f, Eigen::VectorXcd y,
                        const std::vector<double>& samples, OnSample&& emit,
                        const OdeOptions& opts = {}) {
  if (samples.empty())
    throw std::invalid_argument("integrate_adaptive: empty sample grid");
  for (std::size_t k = 1; k < samples.size(); ++k)
    if (!(samples[k] > samples[k - 1]))
      throw std::invalid_argument(
          "integrate_adaptive: sample grid must be strictly increasing");

  double t = samples.front();
  emit(std::size_t{0}, t, y);
  if (samples.size() == 1) return;

  const double span = samples.back() - t;
  Eigen::VectorXcd k1 = f(t, y);

  // first step from the local derivative scale, adapted from there
  double h = span;
  {
    const double dy = k1.cwiseAbs().maxCoeff();
    const double yy = std::max(y.cwiseAbs().maxCoeff(), 1.0);
    if (dy > 0.0) h = std::min(h, 0.01 * yy / dy);
    h = std::min(h, samples[1] - t);
  }

  Eigen::VectorXcd k2, k3, k4, k5, k6, k7, ynew;
  std::size_t next = 1;
  for (std::size_t step = 0; step < opts.max_steps; ++step) {
    if (next >= samples.size()) return;
    const double target = samples[next];
    bool clamped = false;
    if (t + h >= target - 1e-14 * std::abs(target)) {
      h = target - t;
      clamped = true;
    }
    if (!(h > std::max(1e-14, 4e-16 * std::abs(t)))) {
      std::ostringstream msg;
      msg << "integrate_adaptive: step size underflow at t = " << t << " ("
          << internal_to_fs(t) << " fs); problem too stiff for the tolerance";
      throw std::runtime_error(msg.str());
    }

    k2 = f(t + h / 5.0, y + (h / 5.0) * k1);
    k3 = f(t + 3.0 * h / 10.0, y + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
    k4 = f(t + 4.0 * h / 5.0,
           y + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3));
    k5 = f(t + 8.0 * h / 9.0,
           y + h * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 +
                    64448.0 / 6561.0 * k3 - 212.0 / 729.0 * k4));
    k6 = f(t + h, y + h * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 +
                           46732.0 / 5247.0 * k3 + 49.0 / 176.0 * k4 -
                           5103.0 / 18656.0 * k5));
    ynew = y + h * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 +
                    125.0 / 192.0 * k4 - 2187.0 / 6784.0 * k5 +
                    11.0 / 84.0 * k6);
    k7 = f(t + h, ynew);

    // embedded 4th-order difference, scaled per component
    const Eigen::VectorXcd ediff =
        h * (71.0 / 57600.0 * k1 - 71.0 / 16695.0 * k3 + 71.0 / 1920.0 * k4 -
             17253.0 / 339200.0 * k5 + 22.0 / 525.0 * k6 - 1.0 / 40.0 * k7);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc =
          opts.abs_tol +
          opts.rel_tol * std::max(std::abs(y(i)), std::abs(ynew(i)));
      const double e = std::abs(ediff(i)) / sc;
      acc += e * e;
    }
    const double err = std::sqrt(acc / static_cast<double>(y.size()));

    if (err <= 1.0) {
      t += h;
      y.swap(ynew);
      k1.swap(k7);  // first-same-as-last
      if (clamped) {
        t = target;  // kill accumulated roundoff at the sample
        emit(next, t, y);
        ++next;
      }
    }
    const double grow =
        err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    h *= std::clamp(grow, 0.2, 5.0);
  }
  std::ostringstream msg;
  msg << "integrate_adaptive: step budget exhausted at t = " << t << " ("
      << internal_to_fs(t) << " fs)";
  throw std::runtime_error(msg.str());
}

}  // namespace brls
