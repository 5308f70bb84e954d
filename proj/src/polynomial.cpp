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

#include "posp/polynomial.hpp"

#include <algorithm>
#include <set>

namespace posp {

bool PhaseSymbol::undaggered_side() const {
  return kind == SymKind::FieldAmp || kind == SymKind::CVar || kind == SymKind::EmitterRho;
}

bool PhaseSymbol::daggered_side() const {
  return kind == SymKind::FieldAmpDag || kind == SymKind::CVarDag || kind == SymKind::EmitterRho;
}

std::strong_ordering PhaseSymbol::operator<=>(const PhaseSymbol& o) const {
  // modes before emitters
  int ga = is_field() ? 0 : 1;
  int gb = o.is_field() ? 0 : 1;
  if (auto c = ga <=> gb; c != 0) return c;
  if (auto c = index <=> o.index; c != 0) return c;
  if (auto c = static_cast<int>(kind) <=> static_cast<int>(o.kind); c != 0) return c;
  if (auto c = p <=> o.p; c != 0) return c;
  return q <=> o.q;
}

void canonicalize(Monomial& m) { std::sort(m.begin(), m.end()); }

int count_of(const Monomial& m, const PhaseSymbol& s) {
  return static_cast<int>(std::count(m.begin(), m.end(), s));
}

Polynomial::Polynomial(cplx c) {
  if (c != cplx(0.0, 0.0)) terms_[{}] = c;
}

Polynomial Polynomial::symbol(const PhaseSymbol& s) { return monomial(1.0, {s}); }

Polynomial Polynomial::monomial(cplx c, Monomial m) {
  Polynomial r;
  canonicalize(m);
  r.add_term(m, c);
  return r;
}

bool Polynomial::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
}

cplx Polynomial::constant_term() const {
  auto it = terms_.find(Monomial{});
  return it == terms_.end() ? cplx(0.0) : it->second;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, static_cast<int>(m.size()));
  return d;
}

void Polynomial::add_term(const Monomial& m, cplx c) {
  if (c == cplx(0.0, 0.0)) return;
  auto [it, inserted] = terms_.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == cplx(0.0, 0.0)) terms_.erase(it);
  }
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  r += o;
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  Polynomial r = *this;
  r -= o;
  return r;
}

Polynomial Polynomial::operator-() const {
  Polynomial r;
  for (const auto& [m, c] : terms_) r.terms_.emplace(m, -c);
  return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  for (const auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  Polynomial r;
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : o.terms_) {
      Monomial m;
      m.reserve(ma.size() + mb.size());
      std::merge(ma.begin(), ma.end(), mb.begin(), mb.end(), std::back_inserter(m));
      r.add_term(m, ca * cb);
    }
  }
  return r;
}

Polynomial Polynomial::operator*(cplx c) const {
  Polynomial r;
  if (c == cplx(0.0, 0.0)) return r;
  for (const auto& [m, v] : terms_) r.add_term(m, v * c);
  return r;
}

Polynomial Polynomial::pow(int n) const {
  if (n < 0) throw std::invalid_argument("negative polynomial power");
  Polynomial r(1.0);
  for (int k = 0; k < n; ++k) r = r * *this;
  return r;
}

Polynomial Polynomial::substitute(
    const std::function<bool(const PhaseSymbol&, Polynomial&)>& f) const {
  Polynomial r;
  for (const auto& [m, c] : terms_) {
    Polynomial t(c);
    for (const auto& s : m) {
      Polynomial rep;
      if (f(s, rep)) {
        t = t * rep;
      } else {
        t = t * Polynomial::symbol(s);
      }
    }
    r += t;
  }
  return r;
}

Polynomial differentiate(const Polynomial& h, const PhaseSymbol& s) {
  Polynomial r;
  for (const auto& [m, c] : h.terms()) {
    auto it = std::find(m.begin(), m.end(), s);
    if (it == m.end()) continue;
    int k = count_of(m, s);
    Monomial rest = m;
    rest.erase(std::find(rest.begin(), rest.end(), s));
    r.add_term(rest, c * static_cast<double>(k));
  }
  return r;
}

cplx evaluate(const Polynomial& h, const std::function<cplx(const PhaseSymbol&)>& value) {
  cplx sum = 0.0;
  for (const auto& [m, c] : h.terms()) {
    cplx t = c;
    for (const auto& s : m) t *= value(s);
    sum += t;
  }
  return sum;
}

cplx evaluate(const Polynomial& h, const SymbolValues& x) {
  return evaluate(h, [&](const PhaseSymbol& s) {
    auto it = x.find(s);
    if (it == x.end()) throw UnboundSymbol("unbound symbol in evaluate");
    return it->second;
  });
}

std::vector<PhaseSymbol> symbols_of(const Polynomial& h) {
  std::set<PhaseSymbol> seen;
  for (const auto& [m, c] : h.terms())
    for (const auto& s : m) seen.insert(s);
  return {seen.begin(), seen.end()};
}

bool has_same_emitter_product(const Monomial& m) {
  std::map<int, int> rho_count;
  for (const auto& s : m)
    if (s.kind == SymKind::EmitterRho && ++rho_count[s.index] > 1) return true;
  return false;
}

}  // namespace posp
