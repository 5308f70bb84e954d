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

#include <cmath>
#include <cstdio>
#include <sstream>

#include "posp/parser.hpp"

namespace posp {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  // the lexer has no inf/nan; those never come out of a valid parse
  return s;
}

std::string level_name(const ModelSpec& m, int a, int p) {
  const auto& e = m.emitters[static_cast<std::size_t>(a)];
  if (p < static_cast<int>(e.labels.size())) return e.labels[static_cast<std::size_t>(p)];
  return std::to_string(p);
}

}  // namespace

std::string print_complex(cplx c) {
  // + 0.0 turns a negative zero into a positive one
  std::string re = fmt(c.real() + 0.0);
  double im = c.imag() + 0.0;
  std::string sign = std::signbit(im) ? "-" : "+";
  return "(" + re + sign + fmt(std::fabs(im)) + "i)";
}

std::string print_symbol(const PhaseSymbol& s, const ModelSpec& m) {
  switch (s.kind) {
    case SymKind::FieldAmp:
      return "a(" + m.modes[static_cast<std::size_t>(s.index)] + ")";
    case SymKind::FieldAmpDag:
      return "adag(" + m.modes[static_cast<std::size_t>(s.index)] + ")";
    case SymKind::EmitterRho:
      return "rho(" + m.emitters[static_cast<std::size_t>(s.index)].name + "," + level_name(m, s.index, s.p) +
             "," + level_name(m, s.index, s.q) + ")";
    case SymKind::CVar:
      return "C(" + m.emitters[static_cast<std::size_t>(s.index)].name + "," + level_name(m, s.index, s.p) + ")";
    case SymKind::CVarDag:
      return "Cdag(" + m.emitters[static_cast<std::size_t>(s.index)].name + "," + level_name(m, s.index, s.p) +
             ")";
  }
  return "?";
}

std::string print_polynomial(const Polynomial& p, const ModelSpec& m) {
  if (p.is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [mono, c] : p.terms()) {
    if (!first) os << " + ";
    first = false;
    os << print_complex(c);
    for (const auto& s : mono) os << "*" << print_symbol(s, m);
  }
  return os.str();
}

std::string print_model(const ModelSpec& m) {
  std::ostringstream os;
  for (const auto& [name, v] : m.hamiltonian.constants) os << "const " << name << " = " << print_complex(v) << ";\n";
  for (const auto& md : m.modes) os << "mode " << md << ";\n";
  for (const auto& e : m.emitters) {
    os << "emitter " << e.name << " levels " << e.levels;
    if (!e.labels.empty()) {
      os << " labels";
      for (const auto& l : e.labels) os << " " << l;
    }
    os << ";\n";
  }
  os << "H = " << print_polynomial(m.hamiltonian.poly, m) << ";\n";
  for (std::size_t a = 0; a < m.lindblad.size(); ++a) {
    const auto& g = m.lindblad[a];
    const int n = g.levels;
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q)
        for (int r = 0; r < n; ++r)
          for (int s = 0; s < n; ++s) {
            cplx v = g.at(p, q, r, s);
            if (v == cplx(0.0)) continue;
            int ai = static_cast<int>(a);
            os << "lindblad " << m.emitters[a].name << " : gamma(" << level_name(m, ai, p) << ","
               << level_name(m, ai, q) << "," << level_name(m, ai, r) << "," << level_name(m, ai, s)
               << ") = " << print_complex(v) << ";\n";
          }
  }
  for (std::size_t i = 0; i < m.initial.alpha0.size(); ++i)
    os << "init mode " << m.modes[i] << " coherent " << print_complex(m.initial.alpha0[i]) << ";\n";
  for (std::size_t a = 0; a < m.initial.emitters.size(); ++a) {
    const auto& e = m.initial.emitters[a];
    os << "init emitter " << m.emitters[a].name;
    if (e.kind == EmitterInit::Kind::Mixed) {
      os << " mixed [";
      for (int r = 0; r < e.density.rows(); ++r) {
        os << (r ? ",[" : "[");
        for (int c = 0; c < e.density.cols(); ++c) os << (c ? "," : "") << print_complex(e.density(r, c));
        os << "]";
      }
      os << "];\n";
    } else {
      os << " pure (";
      for (int p = 0; p < e.amplitudes.size(); ++p) os << (p ? "," : "") << print_complex(e.amplitudes(p));
      os << ");\n";
    }
  }
  auto flag = [](PhaseSampling s) {
    return s == PhaseSampling::Off ? "off" : (s == PhaseSampling::Proper ? "proper" : "on");
  };
  os << "eta " << flag(m.initial.eta) << ";\n";
  os << "theta " << flag(m.initial.theta) << ";\n";
  os << "formulation " << (m.formulation == Formulation::CVariable ? "cvar" : "rho") << ";\n";
  if (m.gauge) {
    for (const auto& [s, p] : m.gauge->delta_drift)
      os << "gauge deltaA(" << print_symbol(s, m) << ") = " << print_polynomial(p, m) << ";\n";
    if (!m.gauge->a0.is_zero()) os << "gauge A0 = " << print_polynomial(m.gauge->a0, m) << ";\n";
  }
  for (const auto& o : m.observables) os << "observe \"" << o.label << "\" = " << print_polynomial(o.expr, m) << ";\n";
  if (m.reconstruct)
    os << "reconstruct mode " << m.modes[static_cast<std::size_t>(m.reconstruct->mode)] << " cutoff "
       << m.reconstruct->cutoff << ";\n";
  return os.str();
}

}  // namespace posp
