// Copyright 2026 The pospsim Authors
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

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "posp/oracle.hpp"
#include "posp/parser.hpp"
#include "test_util.hpp"

using namespace posp;
using posp::testing::load_model;

namespace {

MasterResult evolve(const ModelSpec& m, double t1, double dt, int stride, HilbertConfig* out = nullptr) {
  HilbertConfig hc = default_hilbert(m);
  OperatorSet ops = build_operators(m, hc);
  if (out) *out = hc;
  return evolve_master(initial_density(m, hc), ops, 0.0, t1, dt, stride);
}

}  // namespace

TEST_CASE("default cutoffs cover the initial state and the reconstruction") {
  ModelSpec m = load_model("kerr.posp");
  HilbertConfig hc = default_hilbert(m);
  REQUIRE(hc.n_max.size() == 1);
  CHECK(hc.n_max[0] == 16);  // reconstruction cutoff 12 plus 4
  m.reconstruct.reset();
  CHECK(default_hilbert(m).n_max[0] == 8);  // ceil(0.25 + 3 + 4)
  CHECK(default_hilbert(m, 30).n_max[0] == 30);
  ModelSpec jc = load_model("jaynes_cummings.posp");
  CHECK(default_hilbert(jc).n_max[0] == 5);
  CHECK(default_hilbert(jc).dim() == 12);
}

TEST_CASE("dimension guard") {
  ModelSpec m = load_model("jaynes_cummings.posp");
  HilbertConfig hc = default_hilbert(m, 3000);
  CHECK_THROWS_AS(build_operators(m, hc), OracleError);
}

TEST_CASE("operator images of phase symbols") {
  ModelSpec m = load_model("dipole_pair.posp");
  HilbertConfig hc = default_hilbert(m);
  OperatorSet ops = build_operators(m, hc);
  // rho(A,e,g) is sigma(A,g,e) = |g><e| on the first emitter
  SpMat s = ops.op_for(Polynomial::symbol(PhaseSymbol::rho(0, 1, 0)));
  Eigen::MatrixXcd d(s);
  Eigen::MatrixXcd want = Eigen::MatrixXcd::Zero(4, 4);
  // basis |A B>, index = 2*A + B
  want(0, 2) = 1.0;
  want(1, 3) = 1.0;
  CHECK((d - want).cwiseAbs().maxCoeff() == 0.0);
  Polynomial same = Polynomial::symbol(PhaseSymbol::rho(0, 1, 0)) * Polynomial::symbol(PhaseSymbol::rho(0, 0, 1));
  CHECK(ops.op_for(same).nonZeros() == 0);
}

TEST_CASE("Jaynes-Cummings vacuum Rabi oscillation") {
  ModelSpec m = load_model("jaynes_cummings.posp");
  HilbertConfig hc;
  const double dt = 2 * std::numbers::pi / 3142;
  MasterResult r = evolve(m, 2 * std::numbers::pi, dt, 2, &hc);
  OperatorSet ops = build_operators(m, hc);
  SpMat pe = ops.op_for(m.observables[0].expr);
  double worst = 0.0;
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    const double c = std::cos(r.times[k]);
    worst = std::max(worst, std::abs(expectation(pe, r.states[k]) - c * c));
  }
  CHECK(worst <= 1e-6);
  CHECK(r.max_trace_drift <= 1e-9);
}

TEST_CASE("Kerr oscillator: closed-form coherent amplitude and conserved number") {
  ModelSpec m = load_model("kerr.posp");
  HilbertConfig hc;
  MasterResult r = evolve(m, 0.5, 1e-3, 50, &hc);
  OperatorSet ops = build_operators(m, hc);
  SpMat a = ops.a[0];
  SpMat n = ops.op_for(m.observables[2].expr);
  const cplx a0 = 0.5;
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    const double t = r.times[k];
    // <a(t)> = a0 exp(|a0|^2 (exp(-2 i chi t) - 1))
    const cplx want = a0 * std::exp(std::norm(a0) * (std::exp(cplx(0, -2 * t)) - 1.0));
    CHECK(std::abs(expectation(a, r.states[k]) - want) < 1e-9);
    CHECK(std::abs(expectation(n, r.states[k]) - 0.25) < 1e-9);
  }
}

TEST_CASE("amplitude damping and dephasing closed forms") {
  ModelSpec d = load_model("two_level_decay.posp");
  HilbertConfig hc;
  MasterResult r = evolve(d, 5.0, 1e-3, 100, &hc);
  OperatorSet ops = build_operators(d, hc);
  SpMat pe = ops.op_for(d.observables[0].expr);
  for (std::size_t k = 0; k < r.times.size(); ++k)
    CHECK(std::abs(expectation(pe, r.states[k]) - std::exp(-r.times[k])) < 1e-10);

  ModelSpec p = load_model("dephasing.posp");
  r = evolve(p, 2.0, 1e-3, 100, &hc);
  ops = build_operators(p, hc);
  SpMat coh = ops.op_for(p.observables[1].expr);
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    const cplx want = 0.5 * std::exp(cplx(-0.25, -1.0) * r.times[k]);
    CHECK(std::abs(expectation(coh, r.states[k]) - want) < 1e-10);
  }
}

TEST_CASE("property: evolved states stay Hermitian, unit trace and positive") {
  for (const auto& name : posp::testing::bundled_models()) {
    CAPTURE(name);
    ModelSpec m = load_model(name);
    MasterResult r = evolve(m, 1.0, 1e-3, 250);
    for (const auto& s : r.states) {
      CHECK(std::abs(s.trace() - 1.0) < 1e-9);
      CHECK((s - s.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (s + s.adjoint()));
      CHECK(es.eigenvalues().minCoeff() > -1e-9);
    }
  }
}

TEST_CASE("grid errors") {
  ModelSpec m = load_model("two_level_decay.posp");
  HilbertConfig hc = default_hilbert(m);
  OperatorSet ops = build_operators(m, hc);
  CHECK_THROWS_AS(evolve_master(initial_density(m, hc), ops, 0.0, 1.0, 3e-3, 1), OracleError);
  CHECK_THROWS_AS(evolve_master(initial_density(m, hc), ops, 0.0, 1.0, 1e-3, 3), OracleError);
}

TEST_CASE("property: doubling the cutoff leaves field moments unchanged") {
  for (const char* name : {"free_mode.posp", "jaynes_cummings.posp", "kerr.posp"}) {
    CAPTURE(name);
    ModelSpec m = load_model(name);
    m.reconstruct.reset();
    HilbertConfig h1 = default_hilbert(m);
    HilbertConfig h2 = default_hilbert(m, 2 * h1.n_max[0]);
    OperatorSet o1 = build_operators(m, h1), o2 = build_operators(m, h2);
    MasterResult r1 = evolve_master(initial_density(m, h1), o1, 0.0, 1.0, 1e-3, 100);
    MasterResult r2 = evolve_master(initial_density(m, h2), o2, 0.0, 1.0, 1e-3, 100);
    const Polynomial ad = Polynomial::symbol(PhaseSymbol::alpha_dag(0)), al = Polynomial::symbol(PhaseSymbol::alpha(0));
    for (const Polynomial& f : {al, ad * al, al * al}) {
      SpMat f1 = o1.op_for(f), f2 = o2.op_for(f);
      for (std::size_t t = 0; t < r1.states.size(); ++t)
        CHECK(std::abs(expectation(f1, r1.states[t]) - expectation(f2, r2.states[t])) < 1e-6);
    }
  }
}

TEST_CASE("property: projector algebra holds in the product space") {
  ModelSpec m = parse_model(
      "mode f;\nemitter A levels 3;\nemitter B levels 2;\nH = adag(f) * a(f);\n"
      "init emitter A level 0;\ninit emitter B level 0;\n");
  OperatorSet ops = build_operators(m, HilbertConfig{{3}, {3, 2}});
  for (std::size_t a = 0; a < ops.sigma.size(); ++a) {
    const int n = m.emitters[a].levels;
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q)
        for (int r = 0; r < n; ++r)
          for (int s = 0; s < n; ++s) {
            SpMat lhs = ops.sigma[a][static_cast<std::size_t>(p * n + q)] * ops.sigma[a][static_cast<std::size_t>(r * n + s)];
            SpMat rhs = q == r ? ops.sigma[a][static_cast<std::size_t>(p * n + s)] : SpMat(lhs.rows(), lhs.cols());
            CHECK((lhs - rhs).norm() == 0.0);
          }
  }
}
