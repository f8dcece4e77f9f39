// Copyright 2026 The HSI Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "hsi/errors.hpp"
#include "hsi/lindblad.hpp"
#include "hsi/models.hpp"

using namespace hsi;
using testing::max_diff;

namespace {

HilbertSpace one_mode(int n) { return build_space({SiteSpec::boson(n)}); }

LindbladModel decaying_mode(int n, double gamma) {
  const HilbertSpace s = one_mode(n);
  return LindbladModel(Operator::zero(s), {{gamma, annihilation(s, 0)}});
}

Matrix projector(int d, int k) {
  Matrix p = Matrix::Zero(d, d);
  p(k, k) = 1.0;
  return p;
}

}  // namespace

TEST_SUITE("lindblad") {

TEST_CASE("dissipator on Fock states") {
  const HilbertSpace s = one_mode(3);
  const Operator a = annihilation(s, 0);
  CHECK(dissipator_apply(a, projector(4, 0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(max_diff(dissipator_apply(a, projector(4, 1)), projector(4, 0) - projector(4, 1)) < 1e-15);
}

TEST_CASE("dissipator of s- on the maximally mixed spin") {
  // s- rho s+ = 1/2 |g><g|; s+s- = |e><e| so the anticommutator term is
  // -1/2 |e><e|.
  const HilbertSpace s = build_space({SiteSpec::spin()});
  const Matrix rho = 0.5 * Matrix::Identity(2, 2);
  const Matrix expected = 0.5 * (projector(2, 0) - projector(2, 1));
  CHECK(max_diff(dissipator_apply(spin_op(s, 0, SpinComponent::Lower), rho), expected) < 1e-16);
}

TEST_CASE("dissipator is traceless and Hermiticity preserving") {
  std::mt19937_64 rng(3);
  const HilbertSpace s = build_space({SiteSpec::boson(2), SiteSpec::boson(2)});
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix rho = testing::random_hermitian(9, rng);
    for (const Operator& c : {annihilation(s, 0), annihilation(s, 1) + number(s, 0)}) {
      const Matrix d = dissipator_apply(c, rho);
      CHECK(std::abs(d.trace()) < 1e-12 * 9);
      CHECK(max_diff(d, d.adjoint()) < 1e-13);
    }
  }
  CHECK_THROWS_AS(dissipator_apply(annihilation(s, 0), Matrix::Zero(4, 4)), InvalidArgument);
}

TEST_CASE("liouvillian matches a dense reference on random states") {
  std::mt19937_64 rng(11);
  const int n = 4;
  DimerParams p{5.0, 1.0, 15.0, 10.0, 1.0, 2, n};
  const LindbladModel model = build_dimer(p);
  const Matrix h = testing::dimer_hamiltonian(n, 5.0, 1.0, 15.0, 10.0);
  const std::vector<std::pair<double, Matrix>> ch{{1.0, testing::dimer_annihilation(n, 0)},
                                                  {1.0, testing::dimer_annihilation(n, 1)}};
  for (int trial = 0; trial < 4; ++trial) {
    const Matrix rho = testing::random_density(25, rng);
    const Matrix ref = testing::dense_lindblad(h, ch, rho);
    CHECK(max_diff(liouvillian_apply(model, rho), ref) < 1e-12 * ref.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("liouvillian simple cases") {
  const HilbertSpace s = one_mode(3);
  const LindbladModel closed(3.0 * number(s, 0), {{0.0, annihilation(s, 0)}});
  CHECK(liouvillian_apply(closed, projector(4, 2)).cwiseAbs().maxCoeff() == 0.0);
  const LindbladModel decay = decaying_mode(3, 0.7);
  CHECK(max_diff(liouvillian_apply(decay, projector(4, 1)), 0.7 * (projector(4, 0) - projector(4, 1))) <
        1e-15);
}

TEST_CASE("liouvillian at the dimer parameters is traceless on |1,1>") {
  const LindbladModel m = build_dimer({5.0, 1.0, 15.0, 10.0, 1.0, 2, 6});
  const int occ[] = {1, 1};
  const Matrix out = liouvillian_apply(m, DensityMatrix::fock(m.space(), occ).matrix());
  CHECK(std::abs(out.trace()) < 1e-12);
}

TEST_CASE("liouvillian is linear and traceless on arbitrary Hermitian input") {
  std::mt19937_64 rng(5);
  const LindbladModel m = build_dimer({-2.0, 0.3, 4.0, 1.5, 0.8, 2, 3});
  const Matrix r1 = testing::random_hermitian(16, rng);
  const Matrix r2 = testing::random_hermitian(16, rng);
  const cplx alpha(0.3, -1.2), beta(-2.0, 0.5);
  const Matrix lhs = liouvillian_apply(m, alpha * r1 + beta * r2);
  const Matrix rhs = alpha * liouvillian_apply(m, r1) + beta * liouvillian_apply(m, r2);
  CHECK(max_diff(lhs, rhs) < 1e-11);
  const Matrix l1 = liouvillian_apply(m, r1);
  CHECK(std::abs(l1.trace()) < 1e-11);
  CHECK(max_diff(l1, l1.adjoint()) < 1e-11);
}

TEST_CASE("vectorized liouvillian acts like apply") {
  std::mt19937_64 rng(9);
  const LindbladModel m = build_dimer({1.0, -0.5, 2.0, 0.7, 1.3, 2, 2});
  const Matrix rho = testing::random_density(9, rng);
  const Vector v = Eigen::Map<const Vector>(rho.data(), 81);
  const Vector lv = vectorized_liouvillian(m) * v;
  const Matrix out = Eigen::Map<const Matrix>(lv.data(), 9, 9);
  CHECK(max_diff(out, liouvillian_apply(m, rho)) < 1e-13);
}

TEST_CASE("model validation") {
  const HilbertSpace s = one_mode(2);
  const HilbertSpace t = one_mode(3);
  CHECK_THROWS_AS(LindbladModel(annihilation(s, 0), {}), InvalidArgument);
  CHECK_THROWS_AS(LindbladModel(number(s, 0), {{-1.0, annihilation(s, 0)}}), InvalidArgument);
  CHECK_THROWS_AS(LindbladModel(number(s, 0), {{1.0, annihilation(t, 0)}}), InvalidArgument);
  CHECK_THROWS_AS(LindbladModel(number(s, 0), {{std::nan(""), annihilation(s, 0)}}), InvalidArgument);
}

TEST_CASE("density matrix invariants") {
  const HilbertSpace s = one_mode(1);
  Matrix bad = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(DensityMatrix(s, bad), InvariantViolation);  // trace 2
  Matrix neg = Matrix::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  CHECK_THROWS_AS(DensityMatrix(s, neg), InvariantViolation);
  Matrix nonherm = 0.5 * Matrix::Identity(2, 2);
  nonherm(0, 1) = 0.1;
  CHECK_THROWS_AS(DensityMatrix(s, nonherm), InvariantViolation);
  CHECK_NOTHROW(DensityMatrix::maximally_mixed(s));
}

TEST_CASE("single decaying mode follows exp(-gamma t)") {
  for (double gamma : {1.0, 0.4}) {
    const LindbladModel m = decaying_mode(3, gamma);
    const int one[] = {1};
    const std::vector<double> grid{0.0, 0.5 / gamma, 1.0 / gamma, 2.0 / gamma};
    const std::vector<Operator> obs{number(m.space(), 0)};
    for (Integrator method : {Integrator::DormandPrince45, Integrator::FixedRK4}) {
      EvolveOptions o;
      o.method = method;
      const Trajectory tr = evolve(m, DensityMatrix::fock(m.space(), one), grid, obs, o);
      for (std::size_t t = 0; t < grid.size(); ++t)
        CHECK(std::abs(tr.expectations[t][0] - std::exp(-gamma * grid[t])) < 1e-7);
    }
  }
}

TEST_CASE("grid {0} returns the initial state exactly") {
  std::mt19937_64 rng(2);
  const LindbladModel m = build_dimer({5.0, 1.0, 15.0, 10.0, 1.0, 2, 2});
  const DensityMatrix rho0(m.space(), testing::random_density(9, rng));
  EvolveOptions o;
  o.keep_states = true;
  const std::vector<double> grid{0.0};
  const Trajectory tr = evolve(m, rho0, grid, {}, o);
  REQUIRE(tr.states.size() == 1);
  CHECK((tr.states[0] - rho0.matrix()).norm() == 0.0);
}

TEST_CASE("evolve rejects bad grids and mismatched states") {
  const LindbladModel m = decaying_mode(2, 1.0);
  const DensityMatrix rho = DensityMatrix::vacuum(m.space());
  const std::vector<double> late{0.5, 1.0}, flat{0.0, 1.0, 1.0}, back{0.0, 2.0, 1.0};
  CHECK_THROWS_AS(evolve(m, rho, late), InvalidArgument);
  CHECK_THROWS_AS(evolve(m, rho, flat), InvalidArgument);
  CHECK_THROWS_AS(evolve(m, rho, back), InvalidArgument);
  const LindbladModel other = decaying_mode(3, 1.0);
  const std::vector<double> ok{0.0, 1.0};
  CHECK_THROWS_AS(evolve(other, rho, ok), InvalidArgument);
}

TEST_CASE("dimer trajectory starts at one excitation per site and keeps invariants") {
  const LindbladModel m = build_dimer({5.0, 1.0, 15.0, 10.0, 1.0, 2, 6});
  const int occ[] = {1, 1};
  const std::vector<Operator> obs{number(m.space(), 0), number(m.space(), 1)};
  const std::vector<double> grid = uniform_grid(0.5, 11);
  const Trajectory tr = evolve(m, DensityMatrix::fock(m.space(), occ), grid, obs);
  CHECK(tr.expectations[0][0] == cplx(1.0));
  CHECK(tr.expectations[0][1] == cplx(1.0));
  CHECK(tr.worst.trace_error < 1e-9);
  CHECK(tr.worst.hermiticity_error < 1e-10);
  CHECK(tr.worst.min_eigenvalue >= -1e-9);
}

TEST_CASE("truncation leakage raises a warning") {
  const LindbladModel m = build_dimer({0.0, 0.0, 3.0, 0.0, 1.0, 2, 2});
  const std::vector<double> grid = uniform_grid(2.0, 5);
  const Trajectory tr = evolve(m, DensityMatrix::vacuum(m.space()), grid);
  CHECK(tr.max_leakage > 1e-6);
  CHECK_FALSE(tr.warnings.empty());
}

TEST_CASE("fixed-step mode is bit-for-bit repeatable") {
  const LindbladModel m = build_dimer({5.0, 1.0, 15.0, 10.0, 1.0, 2, 4});
  const int occ[] = {1, 1};
  EvolveOptions o;
  o.method = Integrator::FixedRK4;
  o.fixed_step = 1e-4;
  const std::vector<Operator> obs{number(m.space(), 0)};
  const std::vector<double> grid = uniform_grid(0.2, 5);
  const Trajectory a = evolve(m, DensityMatrix::fock(m.space(), occ), grid, obs, o);
  const Trajectory b = evolve(m, DensityMatrix::fock(m.space(), occ), grid, obs, o);
  for (std::size_t t = 0; t < grid.size(); ++t) CHECK(a.expectations[t][0] == b.expectations[t][0]);
}

TEST_CASE("steady state of a decaying mode is the vacuum") {
  const SteadyState ss = steady_state(decaying_mode(4, 1.0));
  CHECK(max_diff(ss.rho.matrix(), projector(5, 0)) < 1e-12);
  CHECK(ss.method == "direct");
}

TEST_CASE("driven linear mode: <a> = -eps / (dw - i gamma / 2)") {
  for (auto [dw, eps, gamma] : {std::tuple{1.0, 0.5, 1.0}, std::tuple{-2.0, 0.3, 0.5}}) {
    const LindbladModel m = build_dimer({0.0, dw, eps, 0.0, gamma, 2, 12});
    const SteadyState ss = steady_state(m);
    const cplx expected = -eps / cplx(dw, -gamma / 2.0);
    CHECK(std::abs(ss.rho.expectation(annihilation(m.space(), 0)) - expected) < 1e-9);
    CHECK(ss.residual < 1e-10);
  }
}

TEST_CASE("steady state is a fixed point of the evolution") {
  const LindbladModel m = build_dimer({2.0, 1.0, 2.0, 1.0, 1.0, 2, 6});
  const SteadyState ss = steady_state(m);
  const std::vector<Operator> obs{number(m.space(), 0), number(m.space(), 1), annihilation(m.space(), 0)};
  const std::vector<double> grid{0.0, 5.0};
  const Trajectory tr = evolve(m, ss.rho, grid, obs);
  for (std::size_t k = 0; k < obs.size(); ++k)
    CHECK(std::abs(tr.expectations[1][k] - tr.expectations[0][k]) < 1e-8);
}

TEST_CASE("relaxation from different states reaches the direct solution") {
  const LindbladModel m = build_dimer({2.0, 1.0, 2.0, 1.0, 1.0, 2, 5});
  const SteadyState direct = steady_state(m);
  const int occ[] = {1, 1};
  const std::vector<DensityMatrix> starts{DensityMatrix::vacuum(m.space()),
                                          DensityMatrix::fock(m.space(), occ)};
  const auto relaxed = relax_to_steady_state(m, starts);
  REQUIRE(relaxed.size() == 2);
  for (const auto& r : relaxed) CHECK(max_diff(r.rho.matrix(), direct.rho.matrix()) < 1e-9);

  SteadyStateOptions explicit_opts;
  explicit_opts.relax_step = 0.0;
  explicit_opts.residual_tol = 1e-9;
  const SteadyState slow = relax_to_steady_state(m, starts[0], explicit_opts);
  CHECK(slow.method == "relaxation");
  CHECK(max_diff(slow.rho.matrix(), direct.rho.matrix()) < 1e-7);
}

TEST_CASE("degenerate and closed systems are reported") {
  // Two uncoupled, undriven modes with loss on site 0 only: any state of
  // site 1 diagonal in n is stationary.
  const HilbertSpace s = build_space({SiteSpec::boson(1), SiteSpec::boson(1)});
  const LindbladModel m(number(s, 0) + number(s, 1), {{1.0, annihilation(s, 0)}});
  try {
    (void)steady_state(m);
    FAIL("expected DegenerateSteadyState");
  } catch (const DegenerateSteadyState& e) {
    CHECK(e.multiplicity() == 2);
  }
  CHECK(steady_state_multiplicity(m) == 2);
  const LindbladModel closed(number(s, 0), {});
  CHECK_THROWS_AS(steady_state(closed), InvalidArgument);
}

TEST_CASE("convergence check") {
  const std::vector<double> grid = uniform_grid(3.0, 31);
  auto obs = [](const HilbertSpace& s) { return std::vector<Operator>{number(s, 0), annihilation(s, 0)}; };
  SUBCASE("weak linear drive converges at a small cutoff") {
    auto family = [](int n) { return build_dimer({0.0, 1.0, 0.1, 0.0, 1.0, 2, n}); };
    auto init = [](const HilbertSpace& s) { return DensityMatrix::vacuum(s); };
    const ConvergenceResult r = convergence_check(family, obs, init, grid);
    CHECK(r.cutoff <= 4);
    // Closed form: alpha(t) = alpha_ss (1 - exp(-(i dw + gamma/2) t)).
    const LindbladModel m = family(r.cutoff);
    const Trajectory tr = evolve(m, init(m.space()), grid, obs(m.space()));
    const cplx alpha_ss = -0.1 / cplx(1.0, -0.5);
    for (std::size_t t = 0; t < grid.size(); ++t) {
      const cplx alpha = alpha_ss * (1.0 - std::exp(-cplx(0.5, 1.0) * grid[t]));
      CHECK(std::abs(tr.expectations[t][1] - alpha) < 1e-6);
    }
  }
  SUBCASE("pure loss from |1,1> needs cutoff 1") {
    auto family = [](int n) { return build_dimer({5.0, 1.0, 0.0, 0.0, 1.0, 2, n}); };
    auto init = [](const HilbertSpace& s) {
      const int occ[] = {1, 1};
      return DensityMatrix::fock(s, occ);
    };
    CHECK(convergence_check(family, obs, init, grid).cutoff == 1);
  }
  SUBCASE("ceiling") {
    auto family = [](int n) { return build_dimer({0.0, 0.0, 3.0, 0.0, 1.0, 2, n}); };
    auto init = [](const HilbertSpace& s) { return DensityMatrix::vacuum(s); };
    ConvergenceOptions o;
    o.max_cutoff = 5;
    CHECK_THROWS_AS(convergence_check(family, obs, init, grid, o), ConvergenceFailure);
  }
}

}  // TEST_SUITE
