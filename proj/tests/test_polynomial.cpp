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

#include <random>

#include "posp/model.hpp"
#include "posp/polynomial.hpp"
#include "test_util.hpp"

using namespace posp;
using posp::testing::rand_c;

namespace {

Polynomial sym(const PhaseSymbol& s) { return Polynomial::symbol(s); }

const std::vector<PhaseSymbol> kPool = {PhaseSymbol::alpha(0), PhaseSymbol::alpha_dag(0), PhaseSymbol::alpha(1),
                                        PhaseSymbol::alpha_dag(1), PhaseSymbol::rho(0, 0, 1),
                                        PhaseSymbol::rho(1, 1, 1)};

Polynomial random_poly(std::mt19937_64& g, int terms = 4, int maxdeg = 3) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(kPool.size()) - 1), deg(0, maxdeg);
  Polynomial p;
  for (int t = 0; t < terms; ++t) {
    Polynomial m(rand_c(g));
    const int d = deg(g);
    for (int k = 0; k < d; ++k) m = m * sym(kPool[static_cast<std::size_t>(pick(g))]);
    p += m;
  }
  return p;
}

SymbolValues random_point(std::mt19937_64& g) {
  SymbolValues v;
  for (const auto& s : kPool) v[s] = rand_c(g);
  return v;
}

}  // namespace

TEST_CASE("monomials are kept in canonical order and zero terms vanish") {
  Polynomial a = sym(PhaseSymbol::alpha(0)) * sym(PhaseSymbol::alpha_dag(0));
  Polynomial b = sym(PhaseSymbol::alpha_dag(0)) * sym(PhaseSymbol::alpha(0));
  CHECK(a == b);
  CHECK(a.size() == 1);
  CHECK((a - b).is_zero());
  Polynomial c(0.0);
  CHECK(c.is_zero());
  CHECK(Polynomial(2.0).is_constant());
  CHECK(Polynomial(2.0).constant_term() == cplx(2.0));
  // daggered factor first within a mode, modes before emitters
  const Polynomial ra = sym(PhaseSymbol::rho(0, 0, 0)) * a;
  const Monomial& m = ra.terms().begin()->first;
  REQUIRE(m.size() == 3);
  CHECK(m[0] == PhaseSymbol::alpha_dag(0));
  CHECK(m[1] == PhaseSymbol::alpha(0));
  CHECK(m[2] == PhaseSymbol::rho(0, 0, 0));
}

TEST_CASE("degree, pow and differentiation of a Kerr term") {
  Polynomial ad = sym(PhaseSymbol::alpha_dag(0)), al = sym(PhaseSymbol::alpha(0));
  Polynomial h = ad.pow(2) * al.pow(2);
  CHECK(h.degree() == 4);
  Polynomial d = differentiate(h, PhaseSymbol::alpha_dag(0));
  CHECK(d == ad * al.pow(2) * 2.0);
  Polynomial d2 = differentiate(d, PhaseSymbol::alpha_dag(0));
  CHECK(d2 == al.pow(2) * 2.0);
  CHECK(differentiate(h, PhaseSymbol::alpha(1)).is_zero());
  CHECK(al.pow(0) == Polynomial(1.0));
}

TEST_CASE("evaluation with a value table and unbound symbols") {
  Polynomial p = sym(PhaseSymbol::alpha(0)) * 3.0 + Polynomial(cplx(0, 1));
  SymbolValues v{{PhaseSymbol::alpha(0), cplx(2, 0)}};
  CHECK(evaluate(p, v) == cplx(6, 1));
  CHECK_THROWS_AS(evaluate(sym(PhaseSymbol::alpha(1)), v), UnboundSymbol);
}

TEST_CASE("same-emitter products are detected") {
  Monomial same = (sym(PhaseSymbol::rho(0, 0, 1)) * sym(PhaseSymbol::rho(0, 1, 0))).terms().begin()->first;
  Monomial cross = (sym(PhaseSymbol::rho(0, 0, 1)) * sym(PhaseSymbol::rho(1, 1, 0))).terms().begin()->first;
  Monomial sq = sym(PhaseSymbol::rho(0, 1, 1)).pow(2).terms().begin()->first;
  CHECK(has_same_emitter_product(same));
  CHECK(has_same_emitter_product(sq));
  CHECK_FALSE(has_same_emitter_product(cross));
}

TEST_CASE("rho and C-variable forms convert both ways") {
  Polynomial r = sym(PhaseSymbol::rho(0, 0, 1)) * sym(PhaseSymbol::alpha(0)) * 2.0;
  Polynomial c = rho_to_cvar(r);
  CHECK(c == sym(PhaseSymbol::c(0, 0)) * sym(PhaseSymbol::c_dag(0, 1)) * sym(PhaseSymbol::alpha(0)) * 2.0);
  CHECK(cvar_to_rho(c) == r);
  CHECK_THROWS_AS(cvar_to_rho(sym(PhaseSymbol::c(0, 0))), ModelError);
}

TEST_CASE("property: ring laws and evaluation homomorphism") {
  std::mt19937_64 g(11);
  for (int trial = 0; trial < 200; ++trial) {
    Polynomial p = random_poly(g), q = random_poly(g), r = random_poly(g);
    SymbolValues x = random_point(g);
    const cplx vp = evaluate(p, x), vq = evaluate(q, x), vr = evaluate(r, x);
    const double scale = 1.0 + std::abs(vp) * std::abs(vq) * (1.0 + std::abs(vr));
    CHECK(std::abs(evaluate(p * q, x) - vp * vq) <= 1e-12 * scale);
    CHECK(std::abs(evaluate(p + q, x) - (vp + vq)) <= 1e-12 * scale);
    CHECK(std::abs(evaluate(p * (q + r), x) - evaluate(p * q + p * r, x)) <= 1e-12 * scale);
    CHECK(p * q == q * p);
    // cancellation is exact up to rounding of the merged coefficients
    const Polynomial back = (p + q) - q - p;
    for (const auto& [mono, c] : back.terms()) CHECK(std::abs(c) <= 1e-15 * scale);
  }
}

TEST_CASE("property: differentiation is linear and obeys the product rule") {
  std::mt19937_64 g(12);
  for (int trial = 0; trial < 200; ++trial) {
    Polynomial p = random_poly(g), q = random_poly(g);
    const PhaseSymbol s = kPool[static_cast<std::size_t>(trial) % kPool.size()];
    const cplx c = rand_c(g);
    SymbolValues x = random_point(g);
    auto D = [&](const Polynomial& f) { return differentiate(f, s); };
    const double scale = 1.0 + std::abs(evaluate(D(p), x)) * std::abs(evaluate(q, x)) +
                         std::abs(evaluate(p, x)) * std::abs(evaluate(D(q), x));
    CHECK(std::abs(evaluate(D(p * c + q), x) - (c * evaluate(D(p), x) + evaluate(D(q), x))) <= 1e-11 * (1 + scale));
    CHECK(std::abs(evaluate(D(p * q), x) - evaluate(D(p) * q + p * D(q), x)) <= 1e-11 * scale);
  }
}

TEST_CASE("property: finite differences agree with the symbolic derivative") {
  std::mt19937_64 g(13);
  for (int trial = 0; trial < 100; ++trial) {
    Polynomial p = random_poly(g, 3, 3);
    const PhaseSymbol s = kPool[static_cast<std::size_t>(trial) % kPool.size()];
    SymbolValues x = random_point(g);
    const double h = 1e-6;
    SymbolValues xp = x, xm = x;
    xp[s] += h;
    xm[s] -= h;
    const cplx fd = (evaluate(p, xp) - evaluate(p, xm)) / (2 * h);
    const cplx an = evaluate(differentiate(p, s), x);
    CHECK(std::abs(fd - an) <= 1e-5 * (1.0 + std::abs(an)));
  }
}

TEST_CASE("property: mixed second derivatives commute exactly") {
  std::mt19937_64 g(13);
  for (int trial = 0; trial < 200; ++trial) {
    Polynomial h = random_poly(g, 5, 4);
    for (const auto& s : kPool)
      for (const auto& t : kPool) CHECK(differentiate(differentiate(h, s), t) == differentiate(differentiate(h, t), s));
  }
}
