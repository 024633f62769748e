#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <complex>
#include <sstream>

#include "brls/dynamics.hpp"
#include "brls/generator.hpp"
#include "brls/model.hpp"
#include "brls/oracle.hpp"
#include "brls/relaxation.hpp"
#include "brls/spectral_density.hpp"
#include "brls/units.hpp"

using namespace brls;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;
using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

namespace {

// lowest and highest excited eigenstates by real energy; ground sits at zero
struct Polaritons {
  Eigen::Index ground, lp, up;
};

Polaritons find_polaritons(const NHEigensystem& eig) {
  Polaritons p{0, 0, 0};
  for (Eigen::Index a = 1; a < eig.dim(); ++a) {
    if (eig.omega(a) < eig.omega(p.ground)) p.ground = a;
    if (eig.omega(a) > eig.omega(p.up)) p.up = a;
  }
  p.lp = p.up;
  for (Eigen::Index a = 0; a < eig.dim(); ++a)
    if (a != p.ground && eig.omega(a) < eig.omega(p.lp)) p.lp = a;
  return p;
}

double sup_population_gap(const Trajectory& a, const Trajectory& b) {
  return (a.populations - b.populations).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("silent baths discretize to silent mode sets", "[oracle]") {
  const auto sd = SpectralDensity::zero();
  const auto bath = discretize(sd, 0.05, 0.35, 16);
  REQUIRE(bath.modes() == 16);
  for (double g : bath.g) CHECK(g == 0.0);
  CHECK(bath.coupling_weight() == 0.0);
  CHECK(bath.captured_fraction == 1.0);
  CHECK(bath.warning.empty());

  CHECK_THROWS_AS(discretize(sd, 0.3, 0.1, 16), std::invalid_argument);
  CHECK_THROWS_AS(discretize(sd, -0.1, 0.3, 16), std::invalid_argument);
  CHECK_THROWS_AS(discretize(sd, 0.05, 0.35, 1), std::invalid_argument);
}

TEST_CASE("discretized weight matches the spectral integral", "[oracle]") {
  const auto sd = SpectralDensity::lorentzian(0.03, 0.2, 0.005);
  const double w0 = 0.05, w1 = 0.35;
  const auto bath = discretize(sd, w0, w1, 200);

  // independent quadrature of J over the same window
  double err = 0.0;
  const double reference = GK::integrate(
      [&](double w) { return sd.value(w); }, w0, w1, 12, 1e-12, &err);
  REQUIRE(err < 1e-10);

  CHECK(bath.coupling_weight() == Approx(reference).epsilon(1e-3));
  // nearly all of the g^2 = 9e-4 total weight sits inside this window
  CHECK(bath.coupling_weight() == Approx(9e-4).epsilon(0.02));
  CHECK(bath.captured_fraction > 0.99);
  CHECK(bath.warning.empty());

  const auto finer = discretize(sd, w0, w1, 400);
  CHECK(finer.coupling_weight() ==
        Approx(bath.coupling_weight()).epsilon(1e-3));

  // uniform grid, centered cells
  const double dw = (w1 - w0) / 200;
  CHECK(bath.omega.front() == Approx(w0 + 0.5 * dw).margin(1e-15));
  CHECK(bath.omega.back() == Approx(w1 - 0.5 * dw).margin(1e-15));
  CHECK(bath.recurrence_time() ==
        Approx(2.0 * SpectralDensity::pi / dw).epsilon(1e-12));
}

TEST_CASE("narrow windows are flagged with the missing weight", "[oracle]") {
  const auto sd = SpectralDensity::lorentzian(0.03, 0.2, 0.005);
  const auto bath = discretize(sd, 0.19, 0.21, 40);
  CHECK_FALSE(bath.warning.empty());
  CHECK(bath.captured_fraction > 0.70);
  CHECK(bath.captured_fraction < 0.95);
  CHECK_THAT(bath.warning, ContainsSubstring("captures only"));
}

TEST_CASE("bath manifests list one row per mode", "[oracle]") {
  const auto sd = SpectralDensity::lorentzian(0.03, 0.2, 0.005);
  const auto bath = discretize(sd, 0.05, 0.35, 12);
  std::ostringstream os;
  write_bath_csv(os, bath);
  std::istringstream is(os.str());
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "omega_ev,g_ev");
  int rows = 0;
  double prev = -1.0;
  while (std::getline(is, line)) {
    const auto comma = line.find(',');
    REQUIRE(comma != std::string::npos);
    const double w = std::stod(line.substr(0, comma));
    CHECK(w > prev);
    prev = w;
    ++rows;
  }
  CHECK(rows == 12);
}

TEST_CASE("a silent bath reproduces pure lindblad dynamics", "[oracle]") {
  const auto sd = SpectralDensity::zero();
  const auto model = tavis_cummings(1, 2.0, 2.0, 0.1, 0.1, 1e-4, sd);
  const auto eig = decompose(build_nh(model));
  const auto pol = find_polaritons(eig);
  const auto rho0 = eigenstate_density(eig, pol.up);
  const auto grid = uniform_grid_fs(200.0, 40);

  const auto gen = assemble_generator(eig, {}, model.jumps);
  const auto lindblad = evolve(gen, rho0, grid);

  ExactOptions opts;
  opts.rel_tol = 1e-9;
  const auto bath = discretize(sd, 0.05, 0.35, 8);
  const auto exact = exact_evolve(model, bath, rho0, grid, opts);

  REQUIRE(exact.size() == lindblad.size());
  CHECK(sup_population_gap(exact, lindblad) < 1e-6);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(std::abs(exact.trace(static_cast<Eigen::Index>(k)) - 1.0) < 1e-7);
    CHECK((exact.states[k] - lindblad.states[k]).cwiseAbs().maxCoeff() <
          1e-6);
  }
}

TEST_CASE("fast and dense joint propagations agree", "[oracle]") {
  // wide peak so a handful of modes carries real weight
  const auto sd = SpectralDensity::lorentzian(0.03, 0.2, 0.05);
  const auto model = tavis_cummings(1, 2.0, 2.0, 0.1, 0.02, 1e-4, sd);
  const auto eig = decompose(build_nh(model));
  const auto pol = find_polaritons(eig);
  const auto rho0 = eigenstate_density(eig, pol.up);
  const auto grid = uniform_grid_fs(100.0, 21);
  const auto bath = discretize(sd, 0.05, 0.35, 6);

  ExactOptions opts;
  opts.rel_tol = 1e-9;
  const auto fast = exact_evolve(model, bath, rho0, grid, opts);

  opts.force_dense = true;
  const auto dense = exact_evolve(model, bath, rho0, grid, opts);

  CHECK(sup_population_gap(fast, dense) < 1e-6);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK((fast.states[k] - dense.states[k]).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(fast.trace(static_cast<Eigen::Index>(k)) -
                   dense.trace(static_cast<Eigen::Index>(k))) < 1e-7);
  }
  CHECK(fast.min_eigenvalue.minCoeff() > -1e-8);
  CHECK(dense.min_eigenvalue.minCoeff() > -1e-8);
}

TEST_CASE("one phonon per mode saturates the weak-coupling ladder",
          "[oracle]") {
  const auto sd = SpectralDensity::lorentzian(0.03, 0.2, 0.005);
  const auto model = tavis_cummings(1, 2.0, 2.0, 0.1, 0.01, 1e-4, sd);
  const auto eig = decompose(build_nh(model));
  const auto pol = find_polaritons(eig);
  const auto rho0 = eigenstate_density(eig, pol.up);
  const auto grid = uniform_grid_fs(100.0, 21);
  const auto bath = discretize(sd, 0.05, 0.35, 12);

  CHECK(joint_dimension(model, bath, 1) == 3 * 13);
  CHECK(joint_dimension(model, bath, 2) == 3 * (1 + 12 + 78));

  ExactOptions opts;
  const auto one = exact_evolve(model, bath, rho0, grid, opts);
  opts.phonon_cap = 2;
  const auto two = exact_evolve(model, bath, rho0, grid, opts);

  CHECK(sup_population_gap(one, two) < 1e-2);
}

TEST_CASE("mode-count refinement converges over the observation window",
          "[oracle]") {
  const auto sd = SpectralDensity::lorentzian(0.03, 0.2, 0.005);
  const auto model = tavis_cummings(1, 2.0, 2.0, 0.1, 0.1, 1e-4, sd);
  const auto eig = decompose(build_nh(model));
  const auto pol = find_polaritons(eig);
  const auto rho0 = eigenstate_density(eig, pol.up);
  const auto grid = uniform_grid_fs(200.0, 41);

  const auto coarse_bath = discretize(sd, 0.05, 0.35, 150);
  const auto fine_bath = discretize(sd, 0.05, 0.35, 300);
  // both grids resolve the window: recurrences sit far beyond 200 fs
  CHECK(internal_to_fs(coarse_bath.recurrence_time()) > 1000.0);

  const auto coarse = exact_evolve(model, coarse_bath, rho0, grid);
  const auto fine = exact_evolve(model, fine_bath, rho0, grid);

  // the transfer is real, and refinement no longer moves it
  CHECK(fine.populations.col(pol.lp).maxCoeff() > 1e-4);
  CHECK(sup_population_gap(coarse, fine) < 1e-2);

  for (std::size_t k = 0; k < grid.size(); ++k)
    CHECK(std::abs(fine.trace(static_cast<Eigen::Index>(k)) - 1.0) < 1e-6);
  CHECK(fine.min_eigenvalue.minCoeff() > -1e-8);
}

TEST_CASE("oversized joint spaces are refused with a size estimate",
          "[oracle]") {
  const auto sd = SpectralDensity::lorentzian(0.03, 0.2, 0.005);
  const auto model = tavis_cummings(1, 2.0, 2.0, 0.1, 0.1, 1e-4, sd);
  const auto rho0 = basis_state_density(3, 1);
  const auto grid = uniform_grid_fs(10.0, 3);

  const auto big = discretize(sd, 0.05, 0.35, 500);
  CHECK(joint_dimension(model, big, 1) == 3 * 501);

  ExactOptions opts;
  opts.force_dense = true;
  CHECK_THROWS_WITH(exact_evolve(model, big, rho0, grid, opts),
                    ContainsSubstring("exceeds the dense-path limit") &&
                        ContainsSubstring("1503"));

  // the wavefunction route refuses on its own budget
  const auto huge = discretize(sd, 0.05, 0.35, 4000);
  ExactOptions wf;
  wf.phonon_cap = 2;
  CHECK_THROWS_WITH(exact_evolve(model, huge, rho0, grid, wf),
                    ContainsSubstring("amplitudes"));
}

TEST_CASE("dephasing noise rides the dense route with conserved excitation",
          "[oracle]") {
  // silent bath: the joint propagation must land exactly on the Lindblad
  // generator, through the dense route that dephasing jumps force
  const auto sd = SpectralDensity::zero();
  const auto model = tavis_cummings(1, 2.0, 2.0, 0.1, 0.02, 0.0, sd,
                                    JumpKind::dephasing);
  const auto eig = decompose(build_nh(model));
  const auto pol = find_polaritons(eig);
  const auto grid = uniform_grid_fs(50.0, 11);
  const auto bath = discretize(sd, 0.05, 0.35, 4);
  const auto gen = assemble_generator(eig, {}, model.jumps);

  ExactOptions opts;
  opts.rel_tol = 1e-9;
  EvolveOptions ref_opts;
  ref_opts.rel_tol = 1e-10;

  SECTION("polariton populations equilibrate at the phase-noise rate") {
    const auto rho0 = eigenstate_density(eig, pol.up);
    const auto traj = exact_evolve(model, bath, rho0, grid, opts);
    const auto ref = evolve(gen, rho0, grid, ref_opts);

    CHECK(sup_population_gap(traj, ref) < 1e-6);
    const Eigen::Index last = static_cast<Eigen::Index>(grid.size()) - 1;
    for (Eigen::Index k = 0; k <= last; ++k) {
      CHECK(std::abs(traj.trace(k) - 1.0) < 1e-7);
      // no decay channel: the vacuum stays empty
      CHECK(std::abs(traj.populations(k, pol.ground)) < 1e-10);
    }
    // cavity-occupation noise swaps the polaritons at gamma/4 per direction
    const double rate = 0.25 * 0.02;
    const double expected = 0.5 * (1.0 + std::exp(-2.0 * rate * grid.back()));
    CHECK(traj.populations(last, pol.up) == Approx(expected).epsilon(0.05));
    // eigenbasis populations sum to the trace only up to right-vector
    // overlaps; phase noise keeps standing coherences, so the residue sits
    // at the coherence scale rather than at zero
    CHECK(traj.populations(last, pol.up) + traj.populations(last, pol.lp) ==
          Approx(1.0).margin(0.01));
  }

  SECTION("ground coherences keep their lab-frame phase") {
    // a ground-excited superposition disqualifies the wavefunction route and
    // oscillates at the carrier, probing the frame restoration
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(3);
    psi(static_cast<Eigen::Index>(*model.space.index_of({0, 0}))) =
        1.0 / std::sqrt(2.0);
    psi(static_cast<Eigen::Index>(*model.space.index_of({0, 1}))) =
        1.0 / std::sqrt(2.0);
    const Eigen::MatrixXcd rho0 = psi * psi.adjoint();

    const auto traj = exact_evolve(model, bath, rho0, grid, opts);
    const auto ref = evolve(gen, rho0, grid, ref_opts);
    for (std::size_t k = 0; k < grid.size(); ++k)
      CHECK((traj.states[k] - ref.states[k]).cwiseAbs().maxCoeff() < 1e-6);
  }
}
