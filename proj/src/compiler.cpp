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

#include "posp/compiler.hpp"

#include <sstream>

#include "posp/gauge.hpp"
#include "posp/parser.hpp"

namespace posp {

CompiledPoly::CompiledPoly(const Polynomial& p, const std::map<PhaseSymbol, int>& slot) {
  for (const auto& [m, c] : p.terms()) {
    coef_.push_back(c);
    for (const auto& s : m) {
      auto it = slot.find(s);
      if (it == slot.end()) throw CompileError("polynomial uses a symbol outside the state");
      vars_.push_back(static_cast<std::uint32_t>(it->second));
    }
    offs_.push_back(static_cast<std::uint32_t>(vars_.size()));
  }
}

Eigen::MatrixXcd DiffusionSpec::evaluate(const std::vector<cplx>& x, const std::vector<PhaseSymbol>& vars) const {
  SymbolValues v;
  for (std::size_t k = 0; k < vars.size(); ++k) v[vars[k]] = x[k];
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& e : entries) {
    cplx val = posp::evaluate(e.poly, v);
    d(e.row, e.col) = val;
    d(e.col, e.row) = val;
  }
  return d;
}

Polynomial DiffusionSpec::at(int r, int c) const {
  if (r > c) std::swap(r, c);
  for (const auto& e : entries)
    if (e.row == r && e.col == c) return e.poly;
  return {};
}

std::vector<PhaseSymbol> state_variables(const ModelSpec& m, Formulation f) {
  std::vector<PhaseSymbol> v;
  for (std::size_t i = 0; i < m.modes.size(); ++i) {
    v.push_back(PhaseSymbol::alpha(static_cast<int>(i)));
    v.push_back(PhaseSymbol::alpha_dag(static_cast<int>(i)));
  }
  for (std::size_t a = 0; a < m.emitters.size(); ++a) {
    const int n = m.emitters[a].levels;
    const int ai = static_cast<int>(a);
    if (f == Formulation::EffectiveDensity) {
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) v.push_back(PhaseSymbol::rho(ai, p, q));
    } else {
      for (int p = 0; p < n; ++p) v.push_back(PhaseSymbol::c(ai, p));
      for (int p = 0; p < n; ++p) v.push_back(PhaseSymbol::c_dag(ai, p));
    }
  }
  return v;
}

Eigen::MatrixXcd lindblad_drift(const LindbladSpec& g, const Eigen::MatrixXcd& rho) {
  const int n = g.levels;
  if (rho.rows() != n || rho.cols() != n) throw std::invalid_argument("lindblad_drift: shape mismatch");
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      cplx acc = 0.0;
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s)
          acc += 2.0 * g.at(p, r, q, s) * rho(r, s) - g.at(r, q, r, s) * rho(p, s) - g.at(r, s, r, p) * rho(s, q);
      out(p, q) = 0.5 * acc;
    }
  return out;
}

std::vector<Polynomial> lindblad_drift_poly(const LindbladSpec& g, int a) {
  const int n = g.levels;
  std::vector<Polynomial> out(static_cast<std::size_t>(n * n));
  auto rho = [a](int p, int q) { return Polynomial::symbol(PhaseSymbol::rho(a, p, q)); };
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      Polynomial acc;
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
          acc += rho(r, s) * (2.0 * g.at(p, r, q, s));
          acc -= rho(p, s) * g.at(r, q, r, s);
          acc -= rho(s, q) * g.at(r, s, r, p);
        }
      out[static_cast<std::size_t>(p * n + q)] = acc * 0.5;
    }
  return out;
}

namespace {

void require_exact(const ModelSpec& m, bool allow_truncation) {
  auto rep = validate_exactness(m.hamiltonian);
  if (!rep.exact && !allow_truncation)
    throw CompileError("model is Approximate (higher than second-order terms); truncation not allowed");
}

cplx ih(const ModelSpec& m) { return cplx(0.0, 1.0 / m.hamiltonian.hbar); }

PhaseSymbol partner(const PhaseSymbol& s) {
  switch (s.kind) {
    case SymKind::FieldAmp:
      return PhaseSymbol::alpha_dag(s.index);
    case SymKind::FieldAmpDag:
      return PhaseSymbol::alpha(s.index);
    case SymKind::CVar:
      return PhaseSymbol::c_dag(s.index, s.p);
    case SymKind::CVarDag:
      return PhaseSymbol::c(s.index, s.p);
    default:
      throw CompileError("rho has no partner variable");
  }
}

bool is_undaggered(const PhaseSymbol& s) { return s.kind == SymKind::FieldAmp || s.kind == SymKind::CVar; }

// y-type variable rule: drift(y) = -(i/h) dH/dy+, drift(y+) = +(i/h) dH/dy.
Polynomial canonical_drift(const Polynomial& h, const PhaseSymbol& s, cplx c) {
  Polynomial d = differentiate(h, partner(s));
  return is_undaggered(s) ? d * (-c) : d * c;
}

Polynomial canonical_diffusion(const Polynomial& h, const PhaseSymbol& s, const PhaseSymbol& t, cplx c) {
  bool us = is_undaggered(s), ut = is_undaggered(t);
  if (us != ut) return {};
  Polynomial d = differentiate(differentiate(h, partner(s)), partner(t));
  return us ? d * (-c) : d * c;
}

}  // namespace

DriftSystem build_drift(const ModelSpec& m, bool allow_truncation) {
  require_exact(m, allow_truncation);
  DriftSystem ds;
  ds.variables = state_variables(m, m.formulation);
  const cplx c = ih(m);
  const Polynomial& H = m.hamiltonian.poly;
  if (m.formulation == Formulation::CVariable) {
    if (m.has_lindblad()) throw CompileError("lindblad terms are not supported in the C-variable formulation");
    Polynomial hc = rho_to_cvar(H);
    for (const auto& s : ds.variables) ds.drift.push_back(canonical_drift(hc, s, c));
    return ds;
  }
  for (const auto& s : ds.variables) {
    if (s.is_field()) {
      ds.drift.push_back(canonical_drift(H, s, c));
      continue;
    }
    const int a = s.index, p = s.p, q = s.q;
    const int n = m.emitters[static_cast<std::size_t>(a)].levels;
    Polynomial acc;
    for (int r = 0; r < n; ++r) {
      acc += Polynomial::symbol(PhaseSymbol::rho(a, p, r)) * differentiate(H, PhaseSymbol::rho(a, q, r));
      acc -= differentiate(H, PhaseSymbol::rho(a, r, p)) * Polynomial::symbol(PhaseSymbol::rho(a, r, q));
    }
    ds.drift.push_back(acc * c);
  }
  for (std::size_t a = 0; a < m.emitters.size() && a < m.lindblad.size(); ++a) {
    if (m.lindblad[a].is_zero()) continue;
    auto lp = lindblad_drift_poly(m.lindblad[a], static_cast<int>(a));
    const int n = m.emitters[a].levels;
    for (std::size_t k = 0; k < ds.variables.size(); ++k) {
      const auto& s = ds.variables[k];
      if (s.kind == SymKind::EmitterRho && s.index == static_cast<int>(a))
        ds.drift[k] += lp[static_cast<std::size_t>(s.p * n + s.q)];
    }
  }
  return ds;
}

DiffusionSpec build_diffusion(const ModelSpec& m, bool allow_truncation) {
  require_exact(m, allow_truncation);
  DiffusionSpec d;
  auto vars = state_variables(m, m.formulation);
  d.dim = static_cast<int>(vars.size());
  const cplx c = ih(m);
  const Polynomial& H = m.hamiltonian.poly;
  const bool cform = m.formulation == Formulation::CVariable;
  const Polynomial hc = cform ? rho_to_cvar(H) : Polynomial{};

  auto rho = [](int a, int p, int q) { return Polynomial::symbol(PhaseSymbol::rho(a, p, q)); };
  auto levels = [&](int a) { return m.emitters[static_cast<std::size_t>(a)].levels; };

  for (int i = 0; i < d.dim; ++i) {
    for (int j = i; j < d.dim; ++j) {
      const auto& s = vars[static_cast<std::size_t>(i)];
      const auto& t = vars[static_cast<std::size_t>(j)];
      Polynomial e;
      if (cform) {
        e = canonical_diffusion(hc, s, t, c);
      } else if (s.is_field() && t.is_field()) {
        e = canonical_diffusion(H, s, t, c);
      } else if (s.is_field() || t.is_field()) {
        const PhaseSymbol& f = s.is_field() ? s : t;
        const PhaseSymbol& r = s.is_field() ? t : s;
        const int a = r.index, p = r.p, q = r.q;
        for (int k = 0; k < levels(a); ++k) {
          if (f.kind == SymKind::FieldAmp) {
            e -= differentiate(differentiate(H, PhaseSymbol::alpha_dag(f.index)), PhaseSymbol::rho(a, k, p)) *
                 rho(a, k, q) * c;
          } else {
            e += rho(a, p, k) *
                 differentiate(differentiate(H, PhaseSymbol::alpha(f.index)), PhaseSymbol::rho(a, q, k)) * c;
          }
        }
      } else if (s.index != t.index) {
        const int a = s.index, p = s.p, q = s.q;
        const int b = t.index, p2 = t.p, q2 = t.q;
        for (int r = 0; r < levels(a); ++r)
          for (int k = 0; k < levels(b); ++k) {
            e -= differentiate(differentiate(H, PhaseSymbol::rho(a, r, p)), PhaseSymbol::rho(b, k, p2)) *
                 rho(a, r, q) * rho(b, k, q2) * c;
            e += rho(a, p, r) * rho(b, p2, k) *
                 differentiate(differentiate(H, PhaseSymbol::rho(a, q, r)), PhaseSymbol::rho(b, q2, k)) * c;
          }
      }
      // same-emitter rho block: H has no same-emitter products, so it vanishes
      if (!e.is_zero()) d.entries.push_back({i, j, e});
    }
  }
  return d;
}

CompiledSystem compile(const ModelSpec& m, bool allow_truncation) {
  validate_model(m);
  CompiledSystem sys;
  sys.formulation = m.formulation;
  sys.hbar = m.hamiltonian.hbar;
  sys.exactness = validate_exactness(m.hamiltonian);
  sys.truncated = !sys.exactness.exact;
  sys.drift_sym = build_drift(m, allow_truncation);
  sys.diffusion_sym = build_diffusion(m, allow_truncation);
  sys.lindblad = m.lindblad;
  sys.variables = sys.drift_sym.variables;
  for (std::size_t k = 0; k < sys.variables.size(); ++k) sys.slot[sys.variables[k]] = static_cast<int>(k);
  for (std::size_t i = 0; i < m.modes.size(); ++i)
    sys.mode_slot.push_back(sys.slot.at(PhaseSymbol::alpha(static_cast<int>(i))));
  for (std::size_t a = 0; a < m.emitters.size(); ++a) {
    PhaseSymbol first = m.formulation == Formulation::EffectiveDensity ? PhaseSymbol::rho(static_cast<int>(a), 0, 0)
                                                                        : PhaseSymbol::c(static_cast<int>(a), 0);
    sys.emitter_slot.push_back(sys.slot.at(first));
  }
  for (const auto& p : sys.drift_sym.drift) sys.drift.emplace_back(p, sys.slot);
  for (const auto& e : sys.diffusion_sym.entries) {
    sys.diff_row.push_back(e.row);
    sys.diff_col.push_back(e.col);
    sys.diff.emplace_back(e.poly, sys.slot);
  }
  if (m.gauge) return apply_drift_gauge(sys, *m.gauge);
  return sys;
}

Eigen::MatrixXcd diffusion_matrix(const CompiledSystem& sys, const std::vector<cplx>& x) {
  const int n = sys.noise_dim();
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t k = 0; k < sys.diff.size(); ++k) {
    cplx v = sys.diff[k].eval(x.data());
    d(sys.diff_row[k], sys.diff_col[k]) = v;
    d(sys.diff_col[k], sys.diff_row[k]) = v;
  }
  if (sys.gauged) {
    const int w = static_cast<int>(sys.dim());
    for (std::size_t k = 0; k < sys.border.size(); ++k) {
      cplx v = sys.border[k].eval(x.data());
      d(sys.border_slot[k], w) = v;
      d(w, sys.border_slot[k]) = v;
    }
    d(w, w) = sys.corner.eval(x.data());
  }
  return d;
}

std::string dump_system(const CompiledSystem& sys, const ModelSpec& m) {
  std::ostringstream os;
  os << "# drift\n";
  for (std::size_t k = 0; k < sys.variables.size(); ++k)
    os << "d " << print_symbol(sys.variables[k], m) << " = " << print_polynomial(sys.drift_sym.drift[k], m) << "\n";
  os << "# diffusion (upper triangle)\n";
  for (const auto& e : sys.diffusion_sym.entries)
    os << "D[" << print_symbol(sys.variables[static_cast<std::size_t>(e.row)], m) << ","
       << print_symbol(sys.variables[static_cast<std::size_t>(e.col)], m) << "] = " << print_polynomial(e.poly, m)
       << "\n";
  if (sys.gauged) {
    os << "# gauge\n";
    os << "d C0 = " << print_polynomial(sys.gauge_a0_sym, m) << "\n";
    for (const auto& [slot, p] : sys.gauge_border_sym)
      os << "D[" << print_symbol(sys.variables[static_cast<std::size_t>(slot)], m) << ",C0] = " << print_polynomial(p, m)
         << "\n";
    os << "D[C0,C0] = " << print_polynomial(sys.gauge_a0_sym * -2.0, m) << "\n";
  }
  return os.str();
}

Polynomial map_observable(const Polynomial& obs, Formulation f, bool* literal_zero) {
  Polynomial kept;
  for (const auto& [m, c] : obs.terms())
    if (!has_same_emitter_product(m)) kept.add_term(m, c);
  if (literal_zero) *literal_zero = kept.is_zero();
  if (f == Formulation::CVariable) return rho_to_cvar(kept);
  return kept;
}

}  // namespace posp
