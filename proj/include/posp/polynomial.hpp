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

#pragma once

#include <complex>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace posp {

using cplx = std::complex<double>;

// Kind order inside one mode / emitter fixes the canonical factor order:
// daggered symbols first.
enum class SymKind : std::uint8_t {
  FieldAmpDag = 0,
  FieldAmp = 1,
  CVarDag = 2,
  EmitterRho = 3,
  CVar = 4,
};

struct PhaseSymbol {
  SymKind kind = SymKind::FieldAmp;
  int index = 0;  // mode i or emitter a
  int p = 0;
  int q = 0;

  static PhaseSymbol alpha(int i) { return {SymKind::FieldAmp, i, 0, 0}; }
  static PhaseSymbol alpha_dag(int i) { return {SymKind::FieldAmpDag, i, 0, 0}; }
  static PhaseSymbol rho(int a, int p, int q) { return {SymKind::EmitterRho, a, p, q}; }
  static PhaseSymbol c(int a, int p) { return {SymKind::CVar, a, p, 0}; }
  static PhaseSymbol c_dag(int a, int p) { return {SymKind::CVarDag, a, p, 0}; }

  bool is_field() const { return kind == SymKind::FieldAmp || kind == SymKind::FieldAmpDag; }
  bool is_emitter() const { return !is_field(); }
  // True for symbols carrying an annihilation part (alpha, C, and rho which is C C+).
  bool undaggered_side() const;
  bool daggered_side() const;

  std::strong_ordering operator<=>(const PhaseSymbol& o) const;
  bool operator==(const PhaseSymbol& o) const = default;
};

using Monomial = std::vector<PhaseSymbol>;  // sorted multiset

class Polynomial {
 public:
  using TermMap = std::map<Monomial, cplx>;

  Polynomial() = default;
  explicit Polynomial(cplx c);
  static Polynomial symbol(const PhaseSymbol& s);
  static Polynomial monomial(cplx c, Monomial m);

  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  cplx constant_term() const;
  std::size_t size() const { return terms_.size(); }
  int degree() const;

  void add_term(const Monomial& m, cplx c);

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator-() const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(cplx c) const;
  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial pow(int n) const;

  bool operator==(const Polynomial& o) const { return terms_ == o.terms_; }

  // Replace each symbol by a polynomial (symbols not in the map are kept).
  Polynomial substitute(const std::function<bool(const PhaseSymbol&, Polynomial&)>& f) const;

 private:
  TermMap terms_;
};

inline Polynomial operator*(cplx c, const Polynomial& p) { return p * c; }

void canonicalize(Monomial& m);
int count_of(const Monomial& m, const PhaseSymbol& s);

Polynomial differentiate(const Polynomial& h, const PhaseSymbol& s);

class UnboundSymbol : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Evaluate with a symbol lookup; the lookup throws UnboundSymbol when it
// cannot resolve a symbol.
cplx evaluate(const Polynomial& h, const std::function<cplx(const PhaseSymbol&)>& value);

// Bound value table; missing symbols raise UnboundSymbol.
using SymbolValues = std::map<PhaseSymbol, cplx>;
cplx evaluate(const Polynomial& h, const SymbolValues& x);

// Every distinct symbol appearing in h.
std::vector<PhaseSymbol> symbols_of(const Polynomial& h);

// Same-emitter rho (or C/Cdag excess) products inside one monomial.
bool has_same_emitter_product(const Monomial& m);

}  // namespace posp
