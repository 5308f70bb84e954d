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

#include <functional>

#include "posp/compiler.hpp"
#include "posp/parser.hpp"
#include "posp/sampler.hpp"
#include "test_util.hpp"

using namespace posp;

namespace {

struct Moment {
  cplx mean;
  double se;
};

Moment mean_of(long n, const std::function<cplx(long)>& f) {
  cplx s = 0.0;
  double s2 = 0.0;
  for (long k = 0; k < n; ++k) {
    const cplx v = f(k);
    s += v;
    s2 += std::norm(v);
  }
  const cplx m = s / static_cast<double>(n);
  const double var = s2 / static_cast<double>(n) - std::norm(m);
  return {m, std::sqrt(std::max(var, 0.0) / static_cast<double>(n))};
}

void check_moment(const Moment& m, cplx want) {
  CAPTURE(m.mean);
  CAPTURE(m.se);
  // an entry that is zero in every sample has to be an exact zero
  if (m.se == 0.0) {
    CHECK(m.mean == want);
    return;
  }
  CHECK(std::abs(m.mean - want) <= 5.0 * m.se);
}

}  // namespace

TEST_CASE("streams are reproducible and independent across indices") {
  Rng a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  for (int k = 0; k < 10; ++k) CHECK(a.normal() == b.normal());
  CHECK(a.uniform() != c.uniform());
  CHECK(b.uniform() != d.uniform());
  CHECK(splitmix64(0) != splitmix64(1));
}

TEST_CASE("eta and theta draws have unit modulus and the stated weights") {
  Rng r(1, 0);
  for (int k = 0; k < 1000; ++k) {
    PhaseDraw e = sample_eta(r);
    CHECK(std::abs(std::abs(e.value) - 1.0) < 1e-14);
    CHECK(std::abs(std::exp(e.logweight) - (1.0 + 1.0 / e.value)) < 1e-12);
    PhaseDraw t = sample_theta(r);
    CHECK(std::abs(std::exp(t.logweight) - (1.0 + 1.0 / (t.value * t.value))) < 1e-12);
  }
}

TEST_CASE("property: weighted eta and theta moments") {
  const long n = 200000;
  std::vector<PhaseDraw> e(n), t(n);
  Rng r(2, 0);
  for (long k = 0; k < n; ++k) e[static_cast<std::size_t>(k)] = sample_eta(r);
  for (long k = 0; k < n; ++k) t[static_cast<std::size_t>(k)] = sample_theta(r);
  auto wm = [&](const std::vector<PhaseDraw>& d, int p) {
    return mean_of(n, [&](long k) {
      const auto& x = d[static_cast<std::size_t>(k)];
      return std::exp(x.logweight) * std::pow(x.value, p);
    });
  };
  check_moment(wm(e, 0), 1.0);
  check_moment(wm(e, 1), 1.0);
  check_moment(wm(e, 2), 0.0);
  check_moment(wm(e, 3), 0.0);
  check_moment(wm(t, 0), 1.0);
  check_moment(wm(t, 1), 0.0);
  check_moment(wm(t, 2), 1.0);
  check_moment(wm(t, 4), 0.0);
}

TEST_CASE("property: proper positive-P partner moments") {
  const long n = 400000;
  std::vector<PhaseDraw> d(n);
  Rng r(3, 0);
  for (long k = 0; k < n; ++k) d[static_cast<std::size_t>(k)] = sample_proper(r);
  auto m = [&](int a, int b) {
    return mean_of(n, [&](long k) {
      const auto& x = d[static_cast<std::size_t>(k)];
      return std::pow(x.value, a) * std::pow(x.partner, b);
    });
  };
  check_moment(m(1, 1), 1.0);
  check_moment(m(2, 2), 0.0);
  check_moment(m(1, 0), 0.0);
  check_moment(m(0, 1), 0.0);
  check_moment(m(2, 0), 0.0);
}

TEST_CASE("property: sampled effective densities average to the initial state") {
  ModelSpec m = parse_model(
      "emitter A levels 3;\nH = rho(A,0,0);\n"
      "init emitter A mixed [[0.5,0.1+0.1i,0],[0.1-0.1i,0.3,0.05],[0,0.05,0.2]];\n");
  for (auto mode : {PhaseSampling::Weighted, PhaseSampling::Proper}) {
    m.initial.eta = mode;
    CompiledSystem sys = compile(m);
    const long n = 200000;
    std::vector<WeightedSample> s;
    s.reserve(n);
    for (long k = 0; k < n; ++k) {
      Rng r(4, static_cast<std::uint64_t>(k));
      s.push_back(init_effective_density(sys, m.initial, r));
    }
    const auto& p0 = m.initial.emitters[0].density;
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) {
        const std::size_t i = static_cast<std::size_t>(p * 3 + q);
        check_moment(mean_of(n, [&](long k) {
                       const auto& x = s[static_cast<std::size_t>(k)];
                       return std::exp(x.logweight) * x.state[i];
                     }),
                     p0(p, q));
      }
    // two projectors of one emitter average to zero
    check_moment(mean_of(n, [&](long k) {
                   const auto& x = s[static_cast<std::size_t>(k)];
                   return std::exp(x.logweight) * x.state[0] * x.state[0];
                 }),
                 0.0);
  }
}

TEST_CASE("property: C-variables reproduce the pure state and the zero rule") {
  ModelSpec m = posp::testing::load_model("dipole_pair.posp");
  m.formulation = Formulation::CVariable;
  for (auto mode : {PhaseSampling::Weighted, PhaseSampling::Proper}) {
    m.initial.theta = mode;
    CompiledSystem sys = compile(m);
    const long n = 200000;
    std::vector<WeightedSample> s;
    s.reserve(n);
    for (long k = 0; k < n; ++k) {
      Rng r(5, static_cast<std::uint64_t>(k));
      s.push_back(init_cvariables(sys, m.initial, r));
    }
    // emitter A block: C_g C_e Cdag_g Cdag_e; state (0.6, 0.8)
    const double amp[2] = {0.6, 0.8};
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q) {
        check_moment(mean_of(n, [&](long k) {
                       const auto& x = s[static_cast<std::size_t>(k)];
                       return std::exp(x.logweight) * x.state[static_cast<std::size_t>(p)] *
                              x.state[static_cast<std::size_t>(2 + q)];
                     }),
                     amp[p] * amp[q]);
      }
    check_moment(mean_of(n, [&](long k) {
                   const auto& x = s[static_cast<std::size_t>(k)];
                   return std::exp(x.logweight) * x.state[1] * x.state[3] * x.state[1] * x.state[3];
                 }),
                 0.0);
    // a single C has zero mean: the random phase removes the coherent part
    check_moment(mean_of(n, [&](long k) {
                   const auto& x = s[static_cast<std::size_t>(k)];
                   return std::exp(x.logweight) * x.state[1];
                 }),
                 0.0);
  }
}

TEST_CASE("formulation mismatch is rejected") {
  ModelSpec m = posp::testing::load_model("jaynes_cummings.posp");
  CompiledSystem sys = compile(m);
  Rng r(1, 0);
  CHECK_THROWS_AS(init_cvariables(sys, m.initial, r), SamplerError);
}

TEST_CASE("property: eta draws of different emitters are independent") {
  ModelSpec m = parse_model(posp::testing::read_model_text("dipole_pair.posp"));
  CompiledSystem sys = compile(m);
  const long n = 200000;
  std::vector<WeightedSample> s;
  s.reserve(n);
  for (long k = 0; k < n; ++k) {
    Rng r(6, static_cast<std::uint64_t>(k));
    s.push_back(init_effective_density(sys, m.initial, r));
  }
  const auto& pa = m.initial.emitters[0].density;
  const auto& pb = m.initial.emitters[1].density;
  const std::size_t a0 = static_cast<std::size_t>(sys.emitter_slot[0]);
  const std::size_t b0 = static_cast<std::size_t>(sys.emitter_slot[1]);
  // mixed moments factorize: E[w rho_A,pq rho_B,rs] = p0A_pq p0B_rs
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q)
      for (int r = 0; r < 2; ++r)
        for (int t = 0; t < 2; ++t) {
          CAPTURE(p);
          CAPTURE(q);
          CAPTURE(r);
          CAPTURE(t);
          check_moment(mean_of(n,
                               [&](long k) {
                                 const auto& x = s[static_cast<std::size_t>(k)];
                                 return std::exp(x.logweight) * x.state[a0 + static_cast<std::size_t>(p * 2 + q)] *
                                        x.state[b0 + static_cast<std::size_t>(r * 2 + t)];
                               }),
                       pa(p, q) * pb(r, t));
        }
}
